#include "qaguard/augment.hpp"

#include <algorithm>
#include <array>
#include <cstdlib>
#include <fstream>
#include <random>
#include <thread>
#include <unordered_set>

#include <json.hpp>

#include "http_client.hpp"
#include "qaguard/errors.hpp"
#include "qaguard/text.hpp"

namespace qaguard {

using json = nlohmann::json;

std::string build_prompt(std::string_view question, std::string_view prompt_template) {
    static constexpr std::string_view kSlot = "{question}";
    std::string out;
    std::size_t from = 0;
    for (auto at = prompt_template.find(kSlot); at != std::string_view::npos;
         at = prompt_template.find(kSlot, from)) {
        out.append(prompt_template.substr(from, at - from));
        out.append(question);
        from = at + kSlot.size();
    }
    out.append(prompt_template.substr(from));
    return out;
}

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::string_view strip_marker(std::string_view line) {
    std::size_t i = 0;
    while (i < line.size() && line[i] >= '0' && line[i] <= '9') ++i;
    if (i > 0 && i < line.size() && (line[i] == '.' || line[i] == ')')) return trim(line.substr(i + 1));
    if (line.starts_with("- ") || line.starts_with("* ")) return trim(line.substr(2));
    if (line.starts_with("\xE2\x80\xA2")) return trim(line.substr(3));  // bullet
    return line;
}

}  // namespace

std::vector<std::string> parse_generation(std::string_view text) {
    std::vector<std::string> out;
    while (!text.empty()) {
        const auto nl = text.find('\n');
        const auto line = trim(text.substr(0, nl));
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        const auto q = strip_marker(line);
        if (!q.empty()) out.emplace_back(q);
    }
    return out;
}

std::string augmentation_key(std::string_view question) {
    std::string out;
    bool pending_space = false;
    std::size_t pos = 0;
    while (pos < question.size()) {
        const std::size_t here = pos;
        const char32_t cp = text::decode_utf8(question, pos);
        if (text::is_punctuation(cp)) continue;
        if (text::is_space(cp)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) out += ' ';
        pending_space = false;
        out += text::ascii_lower(question.substr(here, pos - here));
    }
    return out;
}

std::vector<std::string> dedupe_augmentations(std::string_view original,
                                              std::span<const std::string> candidates,
                                              std::size_t n) {
    std::unordered_set<std::string> seen{augmentation_key(original)};
    std::vector<std::string> out;
    for (const auto& c : candidates) {
        if (out.size() >= n) break;
        auto key = augmentation_key(c);
        if (key.empty() || !seen.insert(std::move(key)).second) continue;
        out.push_back(c);
    }
    return out;
}

namespace {

struct Rewrite {
    std::string_view from;
    std::string_view to;
};

constexpr std::array<Rewrite, 3> kNormalizations{{
    {"What's ", "What is "},
    {"Who's ", "Who is "},
    {"In what year ", "In which year "},
}};

// Applied in both directions.
constexpr std::array<Rewrite, 10> kSwaps{{
    {"When did ", "In which year did "},
    {"When was ", "In which year was "},
    {"When is ", "On which date is "},
    {"Where was ", "In which place was "},
    {"Where did ", "In which place did "},
    {"Where is ", "In which place is "},
    {"Who was ", "Which person was "},
    {"Who is ", "Which person is "},
    {"Who did ", "Which person did "},
    {"How many ", "What number of "},
}};

// `{}` is replaced by the question body.
constexpr std::array<std::string_view, 12> kPrefixes{
    "Can you tell me {}?",
    "Can you give me any information about {}?",
    "Do you know {}?",
    "I would like to know {}.",
    "Tell me {}.",
    "Please explain {}.",
    "Could you find out {}?",
    "Help me figure out {}.",
    "Does anyone know {}?",
    "I wonder {}.",
    "Quick question: {}?",
    "Here is a question: {}?",
};

bool starts_with_ci(std::string_view s, std::string_view prefix) {
    return s.size() >= prefix.size() && text::iequals_ascii(s.substr(0, prefix.size()), prefix);
}

std::string normalize_wh(std::string_view q) {
    for (const auto& r : kNormalizations) {
        if (starts_with_ci(q, r.from)) return std::string(r.to) + std::string(q.substr(r.from.size()));
    }
    return std::string(q);
}

std::vector<std::string> swaps_of(std::string_view q) {
    std::vector<std::string> out;
    for (const auto& r : kSwaps) {
        if (starts_with_ci(q, r.from)) out.push_back(std::string(r.to) + std::string(q.substr(r.from.size())));
        if (starts_with_ci(q, r.to)) out.push_back(std::string(r.from) + std::string(q.substr(r.to.size())));
    }
    return out;
}

// Question without its final punctuation and with a lowercased opening word,
// ready to be embedded after a prefix.
std::string body_of(std::string_view q) {
    while (!q.empty() && (q.back() == '?' || q.back() == '.' || q.back() == ' ')) q.remove_suffix(1);
    std::string body(q);
    if (!body.empty() && body[0] >= 'A' && body[0] <= 'Z') {
        const auto space = body.find(' ');
        const auto first = body.substr(0, space);
        // keep capitalized names; lowercase only function words
        static constexpr std::array<std::string_view, 16> kLower{
            "What", "When", "Where", "Who", "Which", "Why", "How", "In",
            "On", "Is", "Was", "Did", "Does", "Do", "Are", "Were"};
        if (std::find(kLower.begin(), kLower.end(), first) != kLower.end()) body[0] = static_cast<char>(body[0] - 'A' + 'a');
    }
    return body;
}

std::string apply_prefix(std::string_view prefix, const std::string& body) {
    std::string b = body;
    if (prefix.find("information about") != std::string_view::npos) {
        for (const std::string_view lead : {"what is ", "what was "}) {
            if (b.starts_with(lead)) {
                b.erase(0, lead.size());
                break;
            }
        }
    }
    std::string out(prefix);
    const auto at = out.find("{}");
    out.replace(at, 2, b);
    return out;
}

}  // namespace

std::vector<std::string> template_augment(std::string_view question, std::size_t n, std::uint64_t seed) {
    const std::string base = normalize_wh(trim(question));
    std::vector<std::string> pool;
    if (base != trim(question)) pool.push_back(base);
    const auto swapped = swaps_of(base);
    pool.insert(pool.end(), swapped.begin(), swapped.end());

    std::vector<std::string_view> prefixes(kPrefixes.begin(), kPrefixes.end());
    std::mt19937_64 rng(seed);
    std::shuffle(prefixes.begin(), prefixes.end(), rng);
    for (const auto p : prefixes) pool.push_back(apply_prefix(p, body_of(base)));
    for (const auto& s : swapped) {
        for (const auto p : prefixes) pool.push_back(apply_prefix(p, body_of(s)));
    }
    return dedupe_augmentations(question, pool, n);
}

std::string_view to_string(ProviderKind kind) {
    switch (kind) {
    case ProviderKind::http: return "http";
    case ProviderKind::cache: return "cache";
    case ProviderKind::template_rules: return "template";
    }
    return "?";
}

ProviderKind parse_provider_kind(std::string_view name) {
    if (name == "http") return ProviderKind::http;
    if (name == "cache") return ProviderKind::cache;
    if (name == "template") return ProviderKind::template_rules;
    throw ConfigError("unknown augmentation provider '" + std::string(name) + "'");
}

ProviderStats AugmentationProvider::stats() const {
    return {requests_.load(), retries_.load(), failures_.load(),
            cache_hits_.load(), cache_misses_.load(), short_generations_.load()};
}

std::vector<std::string> generate_augmentations(const QAExample& example, AugmentationProvider& provider,
                                                std::size_t n) {
    if (n == 0) throw ValidationError("n_augment must be >= 1");
    const auto raw = provider.raw_generate(example, n);
    auto out = dedupe_augmentations(example.question, raw, n);
    if (out.empty()) {
        throw EmptyGenerationError("no usable augmentations for example '" + example.id + "'");
    }
    if (out.size() < n) ++provider.short_generations_;
    return out;
}

std::vector<std::string> TemplateProvider::raw_generate(const QAExample& example, std::size_t n) {
    ++requests_;
    return template_augment(example.question, n, text::derive_seed(seed_, example.id));
}

CacheProvider::CacheProvider(std::unordered_map<std::string, std::vector<std::string>> entries)
    : entries_(std::move(entries)) {}

CacheProvider::CacheProvider(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open augmentation cache " + path.string());
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::string id;
        std::vector<std::string> augmented;
        try {
            const json j = json::parse(line);
            id = j.at("id").get<std::string>();
            augmented = j.at("augmented").get<std::vector<std::string>>();
        } catch (const json::exception& e) {
            throw ParseError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
        if (!entries_.try_emplace(id, std::move(augmented)).second) {
            throw ValidationError(path.string() + ":" + std::to_string(line_no) +
                                  ": duplicate cache id '" + id + "'");
        }
    }
}

std::vector<std::string> CacheProvider::raw_generate(const QAExample& example, std::size_t) {
    ++requests_;
    if (auto it = entries_.find(example.id); it != entries_.end()) {
        ++cache_hits_;
        return it->second;
    }
    if (example.augmentations) {
        ++cache_hits_;
        return *example.augmentations;
    }
    ++cache_misses_;
    throw CacheMissError("no cached augmentations for example '" + example.id + "'");
}

HttpProviderConfig HttpProviderConfig::from_env() {
    HttpProviderConfig c;
    if (const char* e = std::getenv("AUGMENT_ENDPOINT")) c.endpoint = e;
    if (const char* k = std::getenv("AUGMENT_API_KEY"); k && *k) c.auth_value = std::string("Bearer ") + k;
    return c;
}

HttpProvider::HttpProvider(HttpProviderConfig config) : config_(std::move(config)) {
    if (config_.endpoint.empty()) throw ConfigError("augmentation endpoint is not configured");
    detail::split_url(config_.endpoint);
    if (config_.max_retries < 0) throw ConfigError("max_retries must be >= 0");
}

std::vector<std::string> HttpProvider::raw_generate(const QAExample& example, std::size_t) {
    const json request{{"prompt", build_prompt(example.question, config_.prompt_template)},
                       {"max_tokens", config_.max_tokens},
                       {"temperature", config_.temperature}};
    const auto body = request.dump();
    std::vector<std::pair<std::string, std::string>> headers;
    if (!config_.auth_value.empty()) headers.emplace_back(config_.auth_header, config_.auth_value);

    std::string last_error;
    int attempts = 0;
    for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
        if (attempt > 0) {
            ++retries_;
            std::this_thread::sleep_for(config_.retry_backoff * attempt);
        }
        ++requests_;
        ++attempts;
        detail::HttpResponse response;
        try {
            response = detail::post_json(config_.endpoint, body, headers, config_.timeout);
        } catch (const std::exception& e) {
            last_error = e.what();
            continue;
        }
        if (response.status == 200) {
            try {
                return parse_generation(json::parse(response.body).at("text").get<std::string>());
            } catch (const json::exception& e) {
                ++failures_;
                throw ProviderError("augmentation response for '" + example.id + "': " + e.what());
            }
        }
        last_error = "HTTP " + std::to_string(response.status);
        const bool retryable = response.status == 429 || response.status >= 500;
        if (!retryable) break;
    }
    ++failures_;
    throw ProviderError("augmentation request for '" + example.id + "' failed after " +
                        std::to_string(attempts - 1) + " retries: " + last_error);
}

void write_augmentation_cache(
    const std::filesystem::path& path,
    std::span<const std::pair<std::string, std::vector<std::string>>> entries) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write " + path.string());
    for (const auto& [id, augmented] : entries) {
        out << json{{"id", id}, {"augmented", augmented}}.dump() << '\n';
    }
}

AugmentedQuerySet retrieve_for_set(std::string_view example_id, std::span<const std::string> queries,
                                   const Retriever& retriever, std::size_t k) {
    AugmentedQuerySet set;
    set.example_id = std::string(example_id);
    set.queries.assign(queries.begin(), queries.end());
    set.retrievals.reserve(queries.size());
    for (const auto& q : queries) set.retrievals.push_back(retriever.search(q, k));
    return set;
}

int count_new_passages(std::span<const RetrievedPassage> original,
                       std::span<const RetrievedPassage> augmented) {
    std::unordered_set<std::string_view> seen;
    for (const auto& r : original) seen.insert(r.passage_id);
    std::unordered_set<std::string_view> counted;
    int n = 0;
    for (const auto& r : augmented) {
        if (!seen.contains(r.passage_id) && counted.insert(r.passage_id).second) ++n;
    }
    return n;
}

}  // namespace qaguard
