#include "qaguard/resolution.hpp"

#include <algorithm>
#include <random>
#include <unordered_set>

#include "qaguard/errors.hpp"
#include "qaguard/evaluation.hpp"

namespace qaguard {

int car_count(std::string_view answer, std::span<const std::string_view> contexts) {
    const auto needle = normalized_tokens(answer);
    if (needle.empty()) return 0;
    std::unordered_set<std::string_view> seen;
    int count = 0;
    for (const auto ctx : contexts) {
        if (!seen.insert(ctx).second) continue;
        const auto hay = normalized_tokens(ctx);
        if (std::search(hay.begin(), hay.end(), needle.begin(), needle.end()) != hay.end()) ++count;
    }
    return count;
}

int car_count(std::span<const std::string> answer_tokens,
              std::span<const std::vector<std::string>* const> normalized_contexts) {
    if (answer_tokens.empty()) return 0;
    std::unordered_set<const std::vector<std::string>*> seen;
    int count = 0;
    for (const auto* hay : normalized_contexts) {
        if (!seen.insert(hay).second) continue;
        if (std::search(hay->begin(), hay->end(), answer_tokens.begin(), answer_tokens.end()) != hay->end()) {
            ++count;
        }
    }
    return count;
}

Vote majority_vote(std::span<const Prediction> predictions) {
    Vote vote;
    if (predictions.empty()) return vote;
    std::map<std::string, long> car_sums;
    std::map<std::string, std::string> first_surface;
    for (const auto& p : predictions) {
        auto key = normalize_answer(p.answer);
        ++vote.votes[key];
        car_sums[key] += p.car_count;
        first_surface.try_emplace(std::move(key), p.answer);
    }
    // std::map iterates keys ascending, so keeping the first strict winner
    // gives the lexicographically smallest on a full tie
    const std::string* best = nullptr;
    for (const auto& [key, count] : vote.votes) {
        if (!best) {
            best = &key;
            continue;
        }
        const int best_count = vote.votes.at(*best);
        if (count > best_count || (count == best_count && car_sums[key] > car_sums[*best])) best = &key;
    }
    vote.answer = first_surface.at(*best);
    return vote;
}

namespace {

std::vector<Prediction> confident_only(const std::vector<Prediction>& preds, const CarConfig& config) {
    std::vector<Prediction> out;
    std::copy_if(preds.begin(), preds.end(), std::back_inserter(out),
                 [&](const Prediction& p) { return is_confident(p.car_count, config); });
    return out;
}

}  // namespace

ResolutionOutcome resolve(const ResolutionInput& input, const CarConfig& config) {
    if (config.k < 0) throw ValidationError("CAR threshold k must be >= 0");
    ResolutionOutcome out;
    out.strategy = input.strategy;
    const auto confident = confident_only(input.augmented, config);
    out.confident_count = static_cast<int>(confident.size());

    const auto use_original = [&] {
        out.answer = input.original.answer;
        out.used_original = true;
    };
    const auto use_vote = [&](std::span<const Prediction> preds) {
        auto v = majority_vote(preds);
        out.answer = std::move(v.answer);
        out.votes = std::move(v.votes);
    };

    switch (input.strategy) {
    case Strategy::original:
        use_original();
        break;
    case Strategy::random:
        if (input.augmented.empty()) {
            use_original();
        } else {
            std::mt19937_64 rng(input.seed);
            std::uniform_int_distribution<std::size_t> pick(0, input.augmented.size() - 1);
            out.answer = input.augmented[pick(rng)].answer;
        }
        break;
    case Strategy::majority_vote:
        use_vote(input.augmented);
        break;
    case Strategy::redundancy:
        if (is_confident(input.original.car_count, config) || input.augmented.empty()) {
            use_original();
        } else if (!confident.empty()) {
            use_vote(confident);
        } else {
            use_vote(input.augmented);
        }
        break;
    case Strategy::car_filtered_majority:
        use_vote(confident);
        break;
    case Strategy::combined_majority: {
        std::vector<Prediction> all;
        all.reserve(input.augmented.size() + 1);
        all.push_back(input.original);
        all.insert(all.end(), input.augmented.begin(), input.augmented.end());
        use_vote(all);
        break;
    }
    default:
        throw ValidationError("unknown resolution strategy");
    }
    return out;
}

}  // namespace qaguard
