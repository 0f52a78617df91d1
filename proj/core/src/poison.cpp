#include "qaguard/poison.hpp"

#include <algorithm>
#include <mutex>
#include <random>

#include "qaguard/errors.hpp"
#include "qaguard/evaluation.hpp"
#include "qaguard/text.hpp"

namespace qaguard {

std::string_view to_string(PoisonMode mode) {
    switch (mode) {
    case PoisonMode::article: return "article";
    case PoisonMode::random_passage: return "random_passage";
    case PoisonMode::top_passage: return "top_passage";
    }
    return "article";
}

PoisonMode parse_poison_mode(std::string_view name) {
    if (name == "article") return PoisonMode::article;
    if (name == "random_passage") return PoisonMode::random_passage;
    if (name == "top_passage") return PoisonMode::top_passage;
    throw ConfigError("unknown poison mode '" + std::string(name) + "'");
}

namespace {

struct AliasPattern {
    std::string_view text;
    bool starts_with_word = false;
    bool ends_with_word = false;
};

std::vector<AliasPattern> compile_aliases(std::span<const std::string> aliases) {
    std::vector<AliasPattern> out;
    for (const auto& a : aliases) {
        if (a.empty()) continue;
        AliasPattern p{a};
        std::size_t pos = 0;
        char32_t first = text::decode_utf8(a, pos);
        char32_t last = first;
        while (pos < a.size()) last = text::decode_utf8(a, pos);
        p.starts_with_word = text::is_word_char(first);
        p.ends_with_word = text::is_word_char(last);
        out.push_back(p);
    }
    // longest first; ties by text for determinism
    std::stable_sort(out.begin(), out.end(), [](const AliasPattern& x, const AliasPattern& y) {
        if (x.text.size() != y.text.size()) return x.text.size() > y.text.size();
        return x.text < y.text;
    });
    return out;
}

bool word_char_at(std::string_view s, std::size_t pos) {
    if (pos >= s.size()) return false;
    return text::is_word_char(text::decode_utf8(s, pos));
}

}  // namespace

std::string poison_text(std::string_view input, std::span<const std::string> aliases,
                        std::string_view substitute) {
    const auto patterns = compile_aliases(aliases);
    if (patterns.empty()) return std::string(input);

    std::string out;
    out.reserve(input.size());
    bool prev_word = false;
    std::size_t i = 0;
    while (i < input.size()) {
        bool replaced = false;
        for (const auto& p : patterns) {
            if (i + p.text.size() > input.size()) continue;
            if (p.starts_with_word && prev_word) continue;
            if (!text::iequals_ascii(input.substr(i, p.text.size()), p.text)) continue;
            if (p.ends_with_word && word_char_at(input, i + p.text.size())) continue;
            out.append(substitute);
            i += p.text.size();
            prev_word = p.ends_with_word;
            replaced = true;
            break;
        }
        if (replaced) continue;
        const std::size_t start = i;
        const char32_t cp = text::decode_utf8(input, i);
        out.append(input.substr(start, i - start));
        prev_word = text::is_word_char(cp);
    }
    return out;
}

std::string choose_substitute(const QAExample& example, const Gazetteer& gazetteer,
                              std::uint64_t seed) {
    std::vector<std::string> normalized_aliases;
    for (const auto& a : example.answers) normalized_aliases.push_back(normalize_answer(a));

    std::vector<std::string_view> eligible;
    for (const auto& c : gazetteer.candidates(example.entity_type)) {
        if (c.empty()) continue;
        const auto nc = normalize_answer(c);
        if (std::find(normalized_aliases.begin(), normalized_aliases.end(), nc) !=
            normalized_aliases.end()) {
            continue;
        }
        // a substitute that itself contains an alias would leave the answer in the text
        if (poison_text(c, example.answers, "") != c) continue;
        eligible.push_back(c);
    }
    if (eligible.empty()) {
        throw ConfigError("no eligible substitute of type '" + example.entity_type +
                          "' for example '" + example.id + "'");
    }
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, eligible.size() - 1);
    return std::string(eligible[pick(rng)]);
}

PoisonPlan build_poison_plan(const QAExample& example, std::span<const RetrievedPassage> retrieved,
                             const Corpus& corpus, int level, PoisonMode mode,
                             const Gazetteer& gazetteer, std::uint64_t seed) {
    return build_poison_plan(example, retrieved, corpus, level, mode,
                             choose_substitute(example, gazetteer, seed), seed);
}

PoisonPlan build_poison_plan(const QAExample& example, std::span<const RetrievedPassage> retrieved,
                             const Corpus& corpus, int level, PoisonMode mode,
                             std::string substitute, std::uint64_t seed) {
    if (level < 0) throw ValidationError("poison level must be >= 0, got " + std::to_string(level));

    PoisonPlan plan;
    plan.example_id = example.id;
    plan.substitute = std::move(substitute);
    plan.level = level;
    plan.mode = mode;
    plan.seed = seed;

    std::vector<const RetrievedPassage*> ranked;
    for (const auto& r : retrieved) ranked.push_back(&r);
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const RetrievedPassage* a, const RetrievedPassage* b) { return a->rank < b->rank; });

    const auto push_article = [&](const std::string& article_id) {
        if (std::find(plan.poisoned_article_ids.begin(), plan.poisoned_article_ids.end(), article_id) ==
            plan.poisoned_article_ids.end()) {
            plan.poisoned_article_ids.push_back(article_id);
        }
    };

    if (mode == PoisonMode::article) {
        std::vector<std::string> distinct;
        for (const auto* r : ranked) {
            const auto& article_id = corpus.passage(r->passage_id).article_id;
            if (std::find(distinct.begin(), distinct.end(), article_id) == distinct.end()) {
                distinct.push_back(article_id);
            }
        }
        const auto available = static_cast<int>(distinct.size());
        plan.effective_level = std::min(level, available);
        plan.clamped = level > available;
        plan.poisoned_article_ids.assign(distinct.begin(), distinct.begin() + plan.effective_level);
        return plan;
    }

    const int percent = std::min(level, 100);
    plan.clamped = level > 100;
    plan.effective_level = percent;
    const std::size_t count = (static_cast<std::size_t>(percent) * ranked.size() + 50) / 100;

    std::vector<const RetrievedPassage*> order = ranked;
    if (mode == PoisonMode::random_passage) {
        std::mt19937_64 rng(seed);
        std::shuffle(order.begin(), order.end(), rng);
    }
    for (std::size_t i = 0; i < count; ++i) {
        plan.poisoned_passage_ids.push_back(order[i]->passage_id);
        push_article(corpus.passage(order[i]->passage_id).article_id);
    }
    return plan;
}

PoisonView::PoisonView(const Corpus& corpus, PoisonPlan plan, std::vector<std::string> aliases)
    : corpus_(&corpus), plan_(std::move(plan)), aliases_(std::move(aliases)) {
    if (plan_.mode == PoisonMode::article) {
        articles_.insert(plan_.poisoned_article_ids.begin(), plan_.poisoned_article_ids.end());
    } else {
        passages_.insert(plan_.poisoned_passage_ids.begin(), plan_.poisoned_passage_ids.end());
    }
}

PoisonView PoisonView::identity(const Corpus& corpus) { return PoisonView(corpus, PoisonPlan{}, {}); }

bool PoisonView::targets(const Passage& passage) const {
    if (plan_.mode == PoisonMode::article) return articles_.contains(passage.article_id);
    return passages_.contains(passage.id);
}

const std::string& PoisonView::materialize(std::string_view passage_id) const {
    const Passage& passage = corpus_->passage(passage_id);
    if (!targets(passage) || aliases_.empty()) return passage.text;
    {
        std::shared_lock lock(mutex_);
        if (const auto it = cache_.find(passage.id); it != cache_.end()) return it->second;
    }
    std::string poisoned = poison_text(passage.text, aliases_, plan_.substitute);
    std::unique_lock lock(mutex_);
    return cache_.try_emplace(passage.id, std::move(poisoned)).first->second;
}

int count_poisoned_passages(const PoisonView& view, std::span<const RetrievedPassage> retrieved) {
    int count = 0;
    for (const auto& r : retrieved) {
        const auto& original = view.corpus().passage(r.passage_id).text;
        const auto& shown = view.materialize(r.passage_id);
        if (&shown != &original && shown != original) ++count;
    }
    return count;
}

}  // namespace qaguard
