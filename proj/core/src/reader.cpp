#include "qaguard/reader.hpp"

#include <algorithm>
#include <iterator>
#include <unordered_set>

#include <json.hpp>

#include "http_client.hpp"
#include "qaguard/errors.hpp"
#include "qaguard/evaluation.hpp"
#include "qaguard/text.hpp"

namespace qaguard {

using json = nlohmann::json;

std::string_view to_string(ReaderKind kind) {
    return kind == ReaderKind::extractive ? "extractive" : "external";
}

namespace {

constexpr std::size_t kMaxCapitalizedRun = 4;
constexpr std::size_t kMaxCachedAnalyses = 20000;

// Capitalized function words at sentence starts are not answers.
constexpr std::string_view kStopwords[] = {
    "a", "about", "after", "all", "also", "an", "and", "any", "anybody", "anyone", "anything",
    "are", "as", "at", "be", "been", "before", "but", "by", "can", "could", "did", "do", "does",
    "during", "each", "every", "everyone", "for", "from", "had", "has", "have", "he", "her",
    "here", "his", "how", "i", "if", "in", "is", "it", "its", "just", "many", "may", "me",
    "might", "more", "most", "must", "my", "no", "nobody", "none", "not", "nothing", "of", "on",
    "one", "only", "or", "our", "she", "should", "so", "some", "someone", "that", "the",
    "their", "them", "then", "there", "these", "they", "this", "those", "to", "us", "very",
    "was", "we", "were", "what", "when", "where", "which", "while", "who", "why", "will",
    "with", "would", "you", "your",
};

bool is_stopword(std::string_view w) {
    return std::ranges::find(kStopwords, w) != std::end(kStopwords);
}

bool all_stopwords(const std::vector<std::string>& tokens) {
    return std::all_of(tokens.begin(), tokens.end(), [](const auto& t) { return is_stopword(t); });
}

bool contains_sequence(const std::vector<std::string>& haystack, const std::vector<std::string>& needle) {
    if (needle.empty() || needle.size() > haystack.size()) return false;
    return std::search(haystack.begin(), haystack.end(), needle.begin(), needle.end()) != haystack.end();
}

bool is_capitalized(std::string_view core) {
    return !core.empty() && core.front() >= 'A' && core.front() <= 'Z';
}

struct Positioned {
    std::size_t offset;
    std::string surface;
};

// Maximal runs of capitalized tokens; punctuation attached to a token ends the run.
void capitalized_runs(std::string_view passage, std::vector<Positioned>& out) {
    std::vector<text::TokenSpan> run;
    const auto flush = [&] {
        for (std::size_t i = 0; i < run.size(); i += kMaxCapitalizedRun) {
            const std::size_t last = std::min(i + kMaxCapitalizedRun, run.size()) - 1;
            const std::size_t begin = run[i].begin;
            out.push_back({begin, std::string(passage.substr(begin, run[last].end - begin))});
        }
        run.clear();
    };
    for (const auto& tok : text::whitespace_tokens(passage)) {
        std::size_t lead = 0;
        while (lead < tok.token.size() && text::is_punctuation(static_cast<unsigned char>(tok.token[lead])))
            ++lead;
        std::size_t trail = tok.token.size();
        while (trail > lead && text::is_punctuation(static_cast<unsigned char>(tok.token[trail - 1])))
            --trail;
        const std::string_view core = tok.token.substr(lead, trail - lead);
        if (!is_capitalized(core)) {
            flush();
            continue;
        }
        if (lead > 0) flush();
        run.push_back({core, tok.begin + lead, tok.begin + trail});
        if (trail < tok.token.size()) flush();
    }
    flush();
}

}  // namespace

bool PassageAnalysis::contains(std::string_view normalized_phrase) const {
    return contains_hash(text::fnv1a(normalized_phrase));
}

bool PassageAnalysis::contains_hash(std::uint64_t phrase_hash) const {
    return std::binary_search(ngram_hashes.begin(), ngram_hashes.end(), phrase_hash);
}

ExtractiveReader::ExtractiveReader(Gazetteer gazetteer) : gazetteer_(std::move(gazetteer)) {
    for (const auto& [type, list] : gazetteer_.entries()) {
        for (const auto& surface : list) {
            auto toks = normalized_tokens(surface);
            if (toks.empty()) continue;
            max_ngram_ = std::max(max_ngram_, toks.size());
            gazetteer_phrases_.push_back(std::move(toks));
            gazetteer_surfaces_.push_back(surface);
        }
    }
}

std::shared_ptr<const PassageAnalysis> ExtractiveReader::analyze(std::string_view passage) const {
    {
        std::shared_lock lock(cache_mutex_);
        if (auto it = cache_.find(passage); it != cache_.end()) return it->second.analysis;
    }

    auto analysis = std::make_shared<PassageAnalysis>();
    const auto toks = normalized_tokens(passage);
    auto& hashes = analysis->ngram_hashes;
    for (std::size_t i = 0; i < toks.size(); ++i) {
        // hashing incrementally gives the same value as hashing the joined phrase
        std::uint64_t h = text::fnv1a(toks[i]);
        hashes.push_back(h);
        for (std::size_t n = 1; n < max_ngram_ && i + n < toks.size(); ++n) {
            h = text::fnv1a(" ", h);
            h = text::fnv1a(toks[i + n], h);
            hashes.push_back(h);
        }
    }
    std::sort(hashes.begin(), hashes.end());
    hashes.erase(std::unique(hashes.begin(), hashes.end()), hashes.end());

    std::vector<Positioned> found;
    const std::string lowered = text::ascii_lower(passage);
    for (const auto& surface : gazetteer_surfaces_) {
        const auto at = text::find_word(lowered, surface);
        if (at != std::string_view::npos) found.push_back({at, surface});
    }
    const std::size_t gazetteer_hits = found.size();
    capitalized_runs(passage, found);
    // gazetteer entries sort before capitalized runs starting at the same offset
    std::vector<std::size_t> order(found.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (found[a].offset != found[b].offset) return found[a].offset < found[b].offset;
        return (a < gazetteer_hits) && !(b < gazetteer_hits);
    });
    for (const auto i : order) {
        PassageAnalysis::Candidate c;
        c.tokens = normalized_tokens(found[i].surface);
        if (c.tokens.empty() || all_stopwords(c.tokens)) continue;
        c.surface = std::move(found[i].surface);
        c.normalized = text::join(c.tokens, " ");
        c.hash = text::fnv1a(c.normalized);
        analysis->candidates.push_back(std::move(c));
    }

    std::unique_lock lock(cache_mutex_);
    // poisoned variants keep arriving during a sweep; start over rather than grow
    if (cache_.size() >= kMaxCachedAnalyses) cache_.clear();
    if (auto it = cache_.find(passage); it != cache_.end()) return it->second.analysis;
    auto owned = std::make_unique<const std::string>(passage);
    const std::string_view key = *owned;
    return cache_.emplace(key, CacheEntry{std::move(owned), std::move(analysis)}).first->second.analysis;
}

std::vector<std::string> ExtractiveReader::candidates(std::span<const std::string_view> passages) const {
    std::vector<std::string> out;
    std::unordered_set<std::string> seen;
    for (const auto p : passages) {
        for (const auto& c : analyze(p)->candidates) {
            if (seen.insert(c.normalized).second) out.push_back(c.surface);
        }
    }
    return out;
}

std::vector<ScoredCandidate> ExtractiveReader::score(std::string_view question,
                                                     std::span<const std::string_view> passages) const {
    std::vector<std::shared_ptr<const PassageAnalysis>> analyses;
    analyses.reserve(passages.size());
    for (const auto p : passages) analyses.push_back(analyze(p));

    const auto question_tokens = normalized_tokens(question);
    std::vector<ScoredCandidate> out;
    std::vector<std::uint64_t> hashes;
    std::unordered_set<std::string_view> seen;
    for (std::size_t r = 0; r < analyses.size(); ++r) {
        for (const auto& c : analyses[r]->candidates) {
            if (!seen.insert(c.normalized).second) continue;
            if (contains_sequence(question_tokens, c.tokens)) continue;
            out.push_back({c.surface, c.normalized, 0.0, static_cast<int>(r + 1)});
            hashes.push_back(c.hash);
        }
    }
    for (std::size_t i = 0; i < out.size(); ++i) {
        for (std::size_t r = 0; r < analyses.size(); ++r) {
            if (analyses[r]->contains_hash(hashes[i])) out[i].score += 1.0 / static_cast<double>(r + 1);
        }
    }
    std::stable_sort(out.begin(), out.end(), [](const ScoredCandidate& a, const ScoredCandidate& b) {
        if (a.score != b.score) return a.score > b.score;
        if (a.first_rank != b.first_rank) return a.first_rank < b.first_rank;
        return a.normalized < b.normalized;
    });
    return out;
}

Prediction ExtractiveReader::predict(std::string_view question,
                                     std::span<const std::string_view> passages,
                                     std::string_view context_set_id) const {
    Prediction p;
    p.question_used = std::string(question);
    p.context_set_id = std::string(context_set_id);
    p.reader_kind = ReaderKind::extractive;
    const auto scored = score(question, passages);
    if (!scored.empty()) p.answer = scored.front().surface;
    return p;
}

std::vector<std::string> extract_candidates(std::span<const std::string_view> passages,
                                            const Gazetteer& gazetteer) {
    return ExtractiveReader(gazetteer).candidates(passages);
}

Prediction predict_extractive(std::string_view question, std::span<const std::string_view> passages,
                              const Gazetteer& gazetteer) {
    return ExtractiveReader(gazetteer).predict(question, passages, "");
}

Prediction predict_external(std::string_view question, std::span<const std::string_view> passages,
                            const ExternalReaderConfig& config) {
    if (config.endpoint.empty()) throw ConfigError("external reader endpoint is not configured");
    json request{{"question", question}, {"passages", json::array()}};
    for (const auto p : passages) request["passages"].push_back(p);

    detail::HttpResponse response;
    try {
        response = detail::post_json(config.endpoint, request.dump(), {}, config.timeout);
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ReaderError(std::string("external reader: ") + e.what());
    }
    if (response.status != 200) {
        throw ReaderError("external reader returned HTTP " + std::to_string(response.status));
    }
    Prediction p;
    try {
        const auto body = json::parse(response.body);
        p.answer = body.at("answer").get<std::string>();
    } catch (const json::exception& e) {
        throw ReaderError(std::string("external reader response: ") + e.what());
    }
    p.question_used = std::string(question);
    p.reader_kind = ReaderKind::external;
    return p;
}

ExternalReader::ExternalReader(ExternalReaderConfig config, std::shared_ptr<const Reader> fallback)
    : config_(std::move(config)), fallback_(std::move(fallback)) {
    if (config_.fallback_to_extractive && !fallback_) {
        throw ConfigError("external reader fallback requested without a fallback reader");
    }
}

Prediction ExternalReader::predict(std::string_view question,
                                   std::span<const std::string_view> passages,
                                   std::string_view context_set_id) const {
    try {
        auto p = predict_external(question, passages, config_);
        p.context_set_id = std::string(context_set_id);
        return p;
    } catch (const ReaderError&) {
        if (!config_.fallback_to_extractive) throw;
    }
    auto p = fallback_->predict(question, passages, context_set_id);
    p.fell_back = true;
    return p;
}

}  // namespace qaguard
