#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qaguard/reader.hpp"
#include "qaguard/strategy.hpp"

namespace qaguard {

struct CarConfig {
    int k = 5;  // confident iff strictly more than k passages contain the answer
};

/// Confidence from answer redundancy: how many distinct passages contain the
/// normalized answer as a whole-word phrase. Duplicate passage texts count once.
int car_count(std::string_view answer, std::span<const std::string_view> contexts);

/// Same count over contexts already passed through normalized_tokens. Entries that
/// point at the same list count once.
int car_count(std::span<const std::string> answer_tokens,
              std::span<const std::vector<std::string>* const> normalized_contexts);

constexpr bool is_confident(int car, const CarConfig& config) { return car > config.k; }

struct Vote {
    std::string answer;                 // surface form of the first winning prediction
    std::map<std::string, int> votes;   // normalized answer -> count
};

/// Plurality over normalized answers; ties go to the larger summed car_count, then
/// to the lexicographically smallest normalized answer. Empty input -> empty answer.
Vote majority_vote(std::span<const Prediction> predictions);

struct ResolutionInput {
    Prediction original;                 // car_count filled in
    std::vector<Prediction> augmented;   // car_count filled in
    Strategy strategy = Strategy::original;
    ContextSource context_source = ContextSource::original_c;
    std::uint64_t seed = 0;
};

struct ResolutionOutcome {
    std::string answer;
    Strategy strategy = Strategy::original;
    bool used_original = false;
    int confident_count = 0;  // augmented predictions passing the CAR threshold
    std::map<std::string, int> votes;
};

ResolutionOutcome resolve(const ResolutionInput& input, const CarConfig& config);

}  // namespace qaguard
