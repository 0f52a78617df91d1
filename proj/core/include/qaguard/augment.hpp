#pragma once

#include <atomic>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "qaguard/dataset.hpp"
#include "qaguard/retrieval.hpp"

namespace qaguard {

inline constexpr std::string_view kDefaultPromptTemplate =
    "Write 10 new wildly diverse questions with different words that have the same answer as "
    "{question}";

/// Substitutes `{question}` into the template.
std::string build_prompt(std::string_view question,
                         std::string_view prompt_template = kDefaultPromptTemplate);

/// Splits generated text into questions. Accepts "1. q", "1) q", "- q", "* q" or bare
/// lines; numbering and bullets are stripped and blank lines dropped.
std::vector<std::string> parse_generation(std::string_view text);

/// Lowercase, punctuation removed, whitespace collapsed. Two augmentations that agree
/// under this key are duplicates.
std::string augmentation_key(std::string_view question);

/// Drops candidates equal (by augmentation_key) to the original or to an earlier
/// candidate, keeps order, truncates to n.
std::vector<std::string> dedupe_augmentations(std::string_view original,
                                              std::span<const std::string> candidates,
                                              std::size_t n);

/// Offline paraphraser: interrogative swaps ("When did X" <-> "In which year did X",
/// "Where was X" <-> "In which place was X", ...) first, then a seeded shuffle of
/// conversational prefixes ("Can you tell me ...", "Can you give me any information
/// about ..."). The first m outputs for n >= m equal the output for m.
std::vector<std::string> template_augment(std::string_view question, std::size_t n,
                                          std::uint64_t seed);

enum class ProviderKind { http, cache, template_rules };

std::string_view to_string(ProviderKind kind);
ProviderKind parse_provider_kind(std::string_view name);

struct ProviderStats {
    std::uint64_t requests = 0;
    std::uint64_t retries = 0;
    std::uint64_t failures = 0;
    std::uint64_t cache_hits = 0;
    std::uint64_t cache_misses = 0;
    std::uint64_t short_generations = 0;  // fewer than n questions survived
};

class AugmentationProvider {
public:
    virtual ~AugmentationProvider() = default;

    /// Raw candidate questions for the example; may contain duplicates.
    virtual std::vector<std::string> raw_generate(const QAExample& example, std::size_t n) = 0;
    virtual ProviderKind kind() const = 0;

    ProviderStats stats() const;

protected:
    std::atomic<std::uint64_t> requests_{0};
    std::atomic<std::uint64_t> retries_{0};
    std::atomic<std::uint64_t> failures_{0};
    std::atomic<std::uint64_t> cache_hits_{0};
    std::atomic<std::uint64_t> cache_misses_{0};
    std::atomic<std::uint64_t> short_generations_{0};

    friend std::vector<std::string> generate_augmentations(const QAExample&, AugmentationProvider&,
                                                           std::size_t);
};

/// Provider output, parsed and deduplicated, at most n. Throws EmptyGenerationError
/// when nothing survives; provider errors propagate.
std::vector<std::string> generate_augmentations(const QAExample& example,
                                                AugmentationProvider& provider, std::size_t n);

class TemplateProvider : public AugmentationProvider {
public:
    explicit TemplateProvider(std::uint64_t seed) : seed_(seed) {}
    std::vector<std::string> raw_generate(const QAExample& example, std::size_t n) override;
    ProviderKind kind() const override { return ProviderKind::template_rules; }

private:
    std::uint64_t seed_;
};

/// Cache JSONL: {"id": example_id, "augmented": [...]}. Also honours a dataset's
/// inline `augmentations` when the example is missing from the file.
class CacheProvider : public AugmentationProvider {
public:
    explicit CacheProvider(const std::filesystem::path& path);
    explicit CacheProvider(std::unordered_map<std::string, std::vector<std::string>> entries);

    std::vector<std::string> raw_generate(const QAExample& example, std::size_t n) override;
    ProviderKind kind() const override { return ProviderKind::cache; }

private:
    std::unordered_map<std::string, std::vector<std::string>> entries_;
};

struct HttpProviderConfig {
    std::string endpoint;  // full URL, e.g. http://host:port/generate
    std::string auth_header = "Authorization";
    std::string auth_value;  // sent verbatim when non-empty
    std::string prompt_template{kDefaultPromptTemplate};
    int max_tokens = 256;
    double temperature = 0.7;
    int max_retries = 2;
    std::chrono::milliseconds timeout{30000};
    std::chrono::milliseconds retry_backoff{200};

    /// Endpoint from AUGMENT_ENDPOINT, key from AUGMENT_API_KEY (as "Bearer <key>").
    static HttpProviderConfig from_env();
};

/// POST {"prompt","max_tokens","temperature"} -> {"text"}.
class HttpProvider : public AugmentationProvider {
public:
    explicit HttpProvider(HttpProviderConfig config);
    std::vector<std::string> raw_generate(const QAExample& example, std::size_t n) override;
    ProviderKind kind() const override { return ProviderKind::http; }

private:
    HttpProviderConfig config_;
};

/// Writes cache JSONL lines in the given order.
void write_augmentation_cache(
    const std::filesystem::path& path,
    std::span<const std::pair<std::string, std::vector<std::string>>> entries);

struct AugmentedQuerySet {
    std::string example_id;
    std::vector<std::string> queries;
    std::vector<std::vector<RetrievedPassage>> retrievals;  // parallel to queries
};

AugmentedQuerySet retrieve_for_set(std::string_view example_id, std::span<const std::string> queries,
                                   const Retriever& retriever, std::size_t k = 100);

/// |augmented ids \ original ids|.
int count_new_passages(std::span<const RetrievedPassage> original,
                       std::span<const RetrievedPassage> augmented);

}  // namespace qaguard
