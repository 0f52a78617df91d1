#pragma once

#include <array>
#include <string_view>

namespace qaguard {

enum class Strategy {
    original,
    random,
    majority_vote,
    redundancy,
    car_filtered_majority,
    combined_majority,
};

enum class ContextSource {
    original_c,  // contexts retrieved by the original question
    new_c,       // contexts retrieved by each augmented question
};

inline constexpr std::array<Strategy, 6> kAllStrategies{
    Strategy::original,      Strategy::random,
    Strategy::majority_vote, Strategy::redundancy,
    Strategy::car_filtered_majority, Strategy::combined_majority,
};

std::string_view to_string(Strategy s);
std::string_view to_string(ContextSource c);

/// Throw ValidationError on unknown names.
Strategy parse_strategy(std::string_view name);
ContextSource parse_context_source(std::string_view name);

/// `original` only has an original-context form; every other strategy has both.
constexpr bool is_valid_cell(Strategy s, ContextSource c) {
    return s != Strategy::original || c == ContextSource::original_c;
}

}  // namespace qaguard
