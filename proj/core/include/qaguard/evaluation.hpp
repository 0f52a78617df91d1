#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "qaguard/strategy.hpp"

namespace qaguard {

/// SQuAD-style: lowercase, delete punctuation, drop standalone "a"/"an"/"the",
/// collapse whitespace.
std::string normalize_answer(std::string_view s);

/// normalize_answer split into tokens.
std::vector<std::string> normalized_tokens(std::string_view s);

int exact_match(std::string_view prediction, std::span<const std::string> aliases);

/// Max over aliases of token-multiset F1.
double token_f1(std::string_view prediction, std::span<const std::string> aliases);

struct ScoreRecord {
    std::string example_id;
    int level = 0;
    Strategy strategy = Strategy::original;
    ContextSource context_source = ContextSource::original_c;
    std::string prediction;
    int em = 0;
    double f1 = 0.0;
    int poisoned_passage_count = 0;
    bool used_original = false;
    int confident_count = 0;
};

/// Ids whose level-0 / original / original_c record has em == 1.
/// Throws ValidationError when that baseline is missing or nothing survives.
std::set<std::string> filter_originally_correct(std::span<const ScoreRecord> records);

struct CellKey {
    int level = 0;
    Strategy strategy = Strategy::original;
    ContextSource context_source = ContextSource::original_c;

    friend auto operator<=>(const CellKey&, const CellKey&) = default;
};

struct CellStats {
    double em = 0.0;  // percent
    double f1 = 0.0;  // percent
    std::size_t n = 0;
    double mean_poisoned_passages = 0.0;
};

struct SweepResult {
    std::map<CellKey, CellStats> cells;

    const CellStats& at(int level, Strategy s, ContextSource c) const;
    std::vector<int> levels() const;
};

/// Mean EM/F1 (x100) per cell over records whose id is in `keep`.
/// `expected` lists the cells that must be present; missing ones or cells whose
/// count differs from |keep| raise IncompleteGridError naming them.
SweepResult aggregate(std::span<const ScoreRecord> records, const std::set<std::string>& keep,
                      std::span<const CellKey> expected);

/// "level,strategy,context_source,em,f1,n" with one-decimal percentages.
std::string results_csv(const SweepResult& result);
SweepResult parse_results_csv(std::string_view csv_text);

}  // namespace qaguard
