#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "qaguard/corpus.hpp"

namespace qaguard {

/// Lowercases, turns punctuation into separators, splits on whitespace.
std::vector<std::string> tokenize(std::string_view text);

struct RetrievedPassage {
    std::string passage_id;
    double score = 0.0;
    int rank = 0;  // 1-based

    friend bool operator==(const RetrievedPassage&, const RetrievedPassage&) = default;
};

/// Anything that can return the top-k passages for a query string.
class Retriever {
public:
    virtual ~Retriever() = default;

    /// Top min(k, doc_count) passages, scores non-increasing, ties by ascending
    /// passage id. An empty query (after tokenization) returns nothing.
    virtual std::vector<RetrievedPassage> search(std::string_view query, std::size_t k) const = 0;

    /// Runs every query; results are in query order and independent of `workers`.
    std::vector<std::vector<RetrievedPassage>> search_batch(
        std::span<const std::string> queries, std::size_t k, std::size_t workers = 1) const;
};

struct Bm25Params {
    double k1 = 1.2;
    double b = 0.75;

    void validate() const;
};

struct Posting {
    std::uint32_t doc = 0;  // index into the index's sorted passage-id table
    std::uint32_t tf = 0;
};

/// Okapi BM25 over an in-memory inverted index.
///
/// Documents are numbered by ascending passage id, so postings lists are sorted by
/// passage id and the index is identical no matter what order passages arrive in.
/// The idf is the non-negative variant ln((N - df + 0.5) / (df + 0.5) + 1).
class Bm25Index : public Retriever {
public:
    static Bm25Index build(std::span<const Passage> passages, Bm25Params params = {});

    std::vector<RetrievedPassage> search(std::string_view query, std::size_t k) const override;

    std::size_t doc_count() const { return passage_ids_.size(); }
    double avg_doc_length() const { return avg_doc_length_; }
    const Bm25Params& params() const { return params_; }
    std::size_t vocabulary_size() const { return postings_.size(); }

    std::span<const Posting> postings(std::string_view term) const;
    std::uint32_t doc_length(std::string_view passage_id) const;
    const std::string& passage_id(std::uint32_t doc) const { return passage_ids_[doc]; }
    double idf(std::string_view term) const;

private:
    Bm25Params params_;
    std::vector<std::string> passage_ids_;
    std::vector<std::uint32_t> doc_lengths_;
    std::uint64_t total_length_ = 0;
    double avg_doc_length_ = 0.0;
    std::unordered_map<std::string, std::vector<Posting>> postings_;
};

}  // namespace qaguard
