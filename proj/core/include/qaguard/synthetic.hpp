#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "qaguard/corpus.hpp"
#include "qaguard/dataset.hpp"

namespace qaguard {

/// Knobs for the generated benchmark. Each fact is stated by `redundancy` distinct
/// articles, each in its own wording.
struct SyntheticSpec {
    int n_facts = 50;
    int redundancy = 5;
    int n_distractor_articles = 200;
    int aliases_per_answer = 2;
    std::uint64_t seed = 7;

    void validate() const;
};

struct SyntheticData {
    std::vector<Article> articles;
    std::vector<QAExample> examples;
    Gazetteer gazetteer;
};

/// Builds a corpus of invented people, the places, years and mentors tied to them, and
/// one question per person. Layout per fact:
///
///  * a profile article worded like the question, whose first passages state the answer;
///  * redundancy-1 supporting articles that restate the answer with different wording
///    in a conversational register;
///  * topical distractors that mention the person and the question's wording but never
///    the answer.
///
/// Remaining distractors are unrelated filler. Every passage is exactly 100 tokens so
/// default chunking aligns with the construction. Output is a pure function of `spec`.
SyntheticData generate_synthetic(const SyntheticSpec& spec);

/// corpus.jsonl, dataset.jsonl and gazetteer.json under `dir` (created if needed).
void write_synthetic(const SyntheticData& data, const std::filesystem::path& dir);

}  // namespace qaguard
