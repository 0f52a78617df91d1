#pragma once

#include <cstdint>
#include <memory>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "qaguard/corpus.hpp"
#include "qaguard/dataset.hpp"
#include "qaguard/retrieval.hpp"

namespace qaguard {

enum class PoisonMode {
    article,         // level = number of distinct retrieved articles
    random_passage,  // level = percent of retrieved passages, seeded random choice
    top_passage,     // level = percent of retrieved passages, by rank
};

std::string_view to_string(PoisonMode mode);
PoisonMode parse_poison_mode(std::string_view name);

/// Seeded uniform pick among the type's candidates that are not (and do not
/// contain) any answer alias. Throws ConfigError when nothing is eligible.
std::string choose_substitute(const QAExample& example, const Gazetteer& gazetteer,
                              std::uint64_t seed);

/// Replaces every case-insensitive, whole-word occurrence of any alias with
/// `substitute`. At each position the longest matching alias wins. Bytes outside
/// matches are copied unchanged.
std::string poison_text(std::string_view text, std::span<const std::string> aliases,
                        std::string_view substitute);

struct PoisonPlan {
    std::string example_id;
    std::string substitute;
    std::vector<std::string> poisoned_article_ids;  // rank order; article mode
    std::vector<std::string> poisoned_passage_ids;  // rank or draw order; passage modes
    int level = 0;
    int effective_level = 0;  // after clamping
    bool clamped = false;
    PoisonMode mode = PoisonMode::article;
    std::uint64_t seed = 0;
};

/// Plans the attack on one question given its clean top-k retrieval.
///
/// Article mode poisons the articles of the first `level` distinct articles in rank
/// order; asking for more than exist clamps and sets `clamped`. Passage modes pick
/// round(level% * |retrieved|) passages: the first ones by rank (top_passage) or a
/// seeded permutation prefix (random_passage). Sets are nested in level either way.
PoisonPlan build_poison_plan(const QAExample& example, std::span<const RetrievedPassage> retrieved,
                             const Corpus& corpus, int level, PoisonMode mode,
                             const Gazetteer& gazetteer, std::uint64_t seed);

/// Same as above with an already chosen substitute.
PoisonPlan build_poison_plan(const QAExample& example, std::span<const RetrievedPassage> retrieved,
                             const Corpus& corpus, int level, PoisonMode mode,
                             std::string substitute, std::uint64_t seed);

/// Read-only poisoned overlay on a corpus. The base corpus is never modified;
/// poisoned texts are computed on first request and cached (safe for concurrent readers).
class PoisonView {
public:
    PoisonView(const Corpus& corpus, PoisonPlan plan, std::vector<std::string> aliases);

    /// A view that changes nothing.
    static PoisonView identity(const Corpus& corpus);

    /// Poisoned text if the passage is targeted and contains an alias, original text
    /// otherwise. Throws NotFoundError for unknown ids.
    const std::string& materialize(std::string_view passage_id) const;

    bool targets(const Passage& passage) const;
    const PoisonPlan& plan() const { return plan_; }
    const Corpus& corpus() const { return *corpus_; }

private:
    const Corpus* corpus_;
    PoisonPlan plan_;
    std::vector<std::string> aliases_;
    std::unordered_set<std::string> articles_;
    std::unordered_set<std::string> passages_;

    mutable std::shared_mutex mutex_;
    mutable std::unordered_map<std::string, std::string> cache_;
};

/// Retrieved passages whose materialized text differs from the original.
int count_poisoned_passages(const PoisonView& view, std::span<const RetrievedPassage> retrieved);

}  // namespace qaguard
