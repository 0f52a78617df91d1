#include "qaguard/evaluation.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>
#include <unordered_map>

#include "qaguard/errors.hpp"
#include "qaguard/text.hpp"

namespace qaguard {

std::string_view to_string(Strategy s) {
    switch (s) {
    case Strategy::original: return "original";
    case Strategy::random: return "random";
    case Strategy::majority_vote: return "majority_vote";
    case Strategy::redundancy: return "redundancy";
    case Strategy::car_filtered_majority: return "car_filtered_majority";
    case Strategy::combined_majority: return "combined_majority";
    }
    return "original";
}

std::string_view to_string(ContextSource c) {
    return c == ContextSource::original_c ? "original_c" : "new_c";
}

Strategy parse_strategy(std::string_view name) {
    for (const auto s : kAllStrategies) {
        if (to_string(s) == name) return s;
    }
    throw ValidationError("unknown strategy '" + std::string(name) + "'");
}

ContextSource parse_context_source(std::string_view name) {
    if (name == "original_c") return ContextSource::original_c;
    if (name == "new_c") return ContextSource::new_c;
    throw ValidationError("unknown context source '" + std::string(name) + "'");
}

std::vector<std::string> normalized_tokens(std::string_view s) {
    std::string stripped;
    stripped.reserve(s.size());
    std::size_t pos = 0;
    while (pos < s.size()) {
        const auto byte = static_cast<unsigned char>(s[pos]);
        if (byte < 0x80) {
            ++pos;
            if (text::is_punctuation(byte)) continue;
            stripped.push_back(byte >= 'A' && byte <= 'Z' ? static_cast<char>(byte - 'A' + 'a') : static_cast<char>(byte));
            continue;
        }
        const std::size_t start = pos;
        const char32_t cp = text::decode_utf8(s, pos);
        if (text::is_punctuation(cp)) continue;
        if (cp >= 'A' && cp <= 'Z') {
            stripped.push_back(static_cast<char>(cp - 'A' + 'a'));
        } else {
            stripped.append(s.substr(start, pos - start));
        }
    }
    std::vector<std::string> out;
    for (const auto& tok : text::whitespace_tokens(stripped)) {
        if (tok.token == "a" || tok.token == "an" || tok.token == "the") continue;
        out.emplace_back(tok.token);
    }
    return out;
}

std::string normalize_answer(std::string_view s) { return text::join(normalized_tokens(s), " "); }

int exact_match(std::string_view prediction, std::span<const std::string> aliases) {
    const auto pred = normalize_answer(prediction);
    if (pred.empty()) return 0;
    for (const auto& a : aliases) {
        if (normalize_answer(a) == pred) return 1;
    }
    return 0;
}

namespace {

double f1_tokens(const std::vector<std::string>& pred, const std::vector<std::string>& gold) {
    if (pred.empty() && gold.empty()) return 1.0;
    if (pred.empty() || gold.empty()) return 0.0;
    std::unordered_map<std::string_view, int> counts;
    for (const auto& t : gold) ++counts[t];
    int overlap = 0;
    for (const auto& t : pred) {
        auto it = counts.find(t);
        if (it != counts.end() && it->second > 0) {
            --it->second;
            ++overlap;
        }
    }
    if (overlap == 0) return 0.0;
    const double precision = static_cast<double>(overlap) / static_cast<double>(pred.size());
    const double recall = static_cast<double>(overlap) / static_cast<double>(gold.size());
    return 2.0 * precision * recall / (precision + recall);
}

}  // namespace

double token_f1(std::string_view prediction, std::span<const std::string> aliases) {
    const auto pred = normalized_tokens(prediction);
    double best = 0.0;
    for (const auto& a : aliases) best = std::max(best, f1_tokens(pred, normalized_tokens(a)));
    return best;
}

std::set<std::string> filter_originally_correct(std::span<const ScoreRecord> records) {
    std::set<std::string> keep;
    bool any_baseline = false;
    for (const auto& r : records) {
        if (r.level != 0 || r.strategy != Strategy::original ||
            r.context_source != ContextSource::original_c) {
            continue;
        }
        any_baseline = true;
        if (r.em == 1) keep.insert(r.example_id);
    }
    if (!any_baseline) {
        throw ValidationError("no level-0 original/original_c baseline records to filter on");
    }
    if (keep.empty()) {
        throw ValidationError("no example was answered correctly at level 0; nothing to evaluate");
    }
    return keep;
}

const CellStats& SweepResult::at(int level, Strategy s, ContextSource c) const {
    const auto it = cells.find(CellKey{level, s, c});
    if (it == cells.end()) {
        throw NotFoundError("no result cell for level " + std::to_string(level) + " " +
                            std::string(to_string(s)) + "/" + std::string(to_string(c)));
    }
    return it->second;
}

std::vector<int> SweepResult::levels() const {
    std::vector<int> out;
    for (const auto& [key, _] : cells) {
        if (out.empty() || out.back() != key.level) out.push_back(key.level);
    }
    return out;
}

SweepResult aggregate(std::span<const ScoreRecord> records, const std::set<std::string>& keep,
                      std::span<const CellKey> expected) {
    struct Acc {
        std::vector<int> em;
        std::vector<double> f1;
        std::vector<int> poisoned;
    };
    std::map<CellKey, Acc> acc;
    for (const auto& r : records) {
        if (!keep.contains(r.example_id)) continue;
        auto& a = acc[CellKey{r.level, r.strategy, r.context_source}];
        a.em.push_back(r.em);
        a.f1.push_back(r.f1);
        a.poisoned.push_back(r.poisoned_passage_count);
    }

    std::vector<std::string> problems;
    for (const auto& key : expected) {
        const auto it = acc.find(key);
        const std::size_t n = it == acc.end() ? 0 : it->second.em.size();
        if (n != keep.size()) {
            problems.push_back("level " + std::to_string(key.level) + " " +
                               std::string(to_string(key.strategy)) + "/" +
                               std::string(to_string(key.context_source)) + " has " +
                               std::to_string(n) + " of " + std::to_string(keep.size()) + " records");
        }
    }
    if (!problems.empty()) {
        std::string msg = "incomplete result grid:";
        for (const auto& p : problems) msg += "\n  " + p;
        throw IncompleteGridError(msg);
    }

    SweepResult result;
    for (auto& [key, a] : acc) {
        // summing sorted values makes the mean independent of record order
        std::sort(a.f1.begin(), a.f1.end());
        long em_sum = 0;
        long poisoned_sum = 0;
        double f1_sum = 0.0;
        for (const int e : a.em) em_sum += e;
        for (const int p : a.poisoned) poisoned_sum += p;
        for (const double f : a.f1) f1_sum += f;
        const double n = static_cast<double>(a.em.size());
        result.cells[key] = CellStats{
            100.0 * static_cast<double>(em_sum) / n,
            100.0 * f1_sum / n,
            a.em.size(),
            static_cast<double>(poisoned_sum) / n,
        };
    }
    return result;
}

std::string results_csv(const SweepResult& result) {
    std::string out = "level,strategy,context_source,em,f1,n\n";
    char buf[64];
    for (const auto& [key, stats] : result.cells) {
        out += std::to_string(key.level);
        out += ',';
        out += to_string(key.strategy);
        out += ',';
        out += to_string(key.context_source);
        std::snprintf(buf, sizeof(buf), ",%.1f,%.1f,%zu\n", stats.em, stats.f1, stats.n);
        out += buf;
    }
    return out;
}

SweepResult parse_results_csv(std::string_view csv_text) {
    std::istringstream in{std::string(csv_text)};
    std::string line;
    if (!std::getline(in, line)) throw ParseError("results CSV is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "level,strategy,context_source,em,f1,n") {
        throw ParseError("results CSV has unexpected header '" + line + "'");
    }
    SweepResult result;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::stringstream row(line);
        std::string field;
        while (std::getline(row, field, ',')) fields.push_back(field);
        if (fields.size() != 6) {
            throw ParseError("results CSV line " + std::to_string(line_no) + ": expected 6 fields");
        }
        try {
            CellKey key{std::stoi(fields[0]), parse_strategy(fields[1]),
                        parse_context_source(fields[2])};
            result.cells[key] = CellStats{std::stod(fields[3]), std::stod(fields[4]),
                                          static_cast<std::size_t>(std::stoul(fields[5])), 0.0};
        } catch (const ValidationError& e) {
            throw ParseError("results CSV line " + std::to_string(line_no) + ": " + e.what());
        } catch (const std::exception& e) {
            throw ParseError("results CSV line " + std::to_string(line_no) + ": bad number");
        }
    }
    return result;
}

}  // namespace qaguard
