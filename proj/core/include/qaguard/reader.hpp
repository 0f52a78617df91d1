#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "qaguard/dataset.hpp"

namespace qaguard {

enum class ReaderKind { extractive, external };

std::string_view to_string(ReaderKind kind);

struct Prediction {
    std::string answer;  // empty when the reader abstains
    std::string question_used;
    std::string context_set_id;
    int car_count = 0;
    ReaderKind reader_kind = ReaderKind::extractive;
    bool fell_back = false;  // external reader failed and the extractive one answered
};

/// Answers a question from an ordered list of passage texts (rank 1 first).
class Reader {
public:
    virtual ~Reader() = default;
    virtual Prediction predict(std::string_view question, std::span<const std::string_view> passages,
                               std::string_view context_set_id) const = 0;
    virtual ReaderKind kind() const = 0;
};

struct ScoredCandidate {
    std::string surface;
    std::string normalized;
    double score = 0.0;
    int first_rank = 0;  // 1-based rank of the first passage containing it
};

/// Pre-tokenized view of one passage: hashes of every normalized n-gram up to the
/// reader's maximum length, and the answer candidates found in it.
struct PassageAnalysis {
    struct Candidate {
        std::string surface;
        std::string normalized;
        std::vector<std::string> tokens;  // normalized
        std::uint64_t hash = 0;           // of `normalized`
    };

    std::vector<std::uint64_t> ngram_hashes;  // sorted
    std::vector<Candidate> candidates;        // position order

    bool contains(std::string_view normalized_phrase) const;
    bool contains_hash(std::uint64_t phrase_hash) const;
};

/// Frequency reader standing in for a neural reader. A candidate's score is the sum
/// of 1/rank over the passages that contain it; candidates that occur in the question
/// are skipped. Analyses of passage texts are cached, so one instance should be
/// reused across calls; it is safe to share between threads.
class ExtractiveReader : public Reader {
public:
    explicit ExtractiveReader(Gazetteer gazetteer);

    Prediction predict(std::string_view question, std::span<const std::string_view> passages,
                       std::string_view context_set_id) const override;
    ReaderKind kind() const override { return ReaderKind::extractive; }

    /// All non-excluded candidates, best first.
    std::vector<ScoredCandidate> score(std::string_view question,
                                       std::span<const std::string_view> passages) const;

    std::vector<std::string> candidates(std::span<const std::string_view> passages) const;

    const Gazetteer& gazetteer() const { return gazetteer_; }

private:
    std::shared_ptr<const PassageAnalysis> analyze(std::string_view text) const;

    Gazetteer gazetteer_;
    std::vector<std::vector<std::string>> gazetteer_phrases_;  // normalized token lists
    std::vector<std::string> gazetteer_surfaces_;
    std::size_t max_ngram_ = 4;

    struct CacheEntry {
        std::unique_ptr<const std::string> text;  // owns the bytes the map key points into
        std::shared_ptr<const PassageAnalysis> analysis;
    };
    mutable std::shared_mutex cache_mutex_;
    mutable std::unordered_map<std::string_view, CacheEntry> cache_;
};

/// Union of gazetteer entries found in the passages and maximal capitalized runs of
/// one to four tokens, deduplicated by normalized form in first-occurrence order.
std::vector<std::string> extract_candidates(std::span<const std::string_view> passages,
                                            const Gazetteer& gazetteer);

Prediction predict_extractive(std::string_view question, std::span<const std::string_view> passages,
                              const Gazetteer& gazetteer);

struct ExternalReaderConfig {
    std::string endpoint;  // e.g. http://localhost:8080/predict
    std::chrono::milliseconds timeout{30000};
    bool fallback_to_extractive = false;
};

/// POSTs {"question", "passages"} and expects {"answer"}.
class ExternalReader : public Reader {
public:
    ExternalReader(ExternalReaderConfig config, std::shared_ptr<const Reader> fallback = nullptr);

    Prediction predict(std::string_view question, std::span<const std::string_view> passages,
                       std::string_view context_set_id) const override;
    ReaderKind kind() const override { return ReaderKind::external; }

private:
    ExternalReaderConfig config_;
    std::shared_ptr<const Reader> fallback_;
};

Prediction predict_external(std::string_view question, std::span<const std::string_view> passages,
                            const ExternalReaderConfig& config);

}  // namespace qaguard
