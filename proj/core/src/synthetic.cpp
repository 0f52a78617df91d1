#include "qaguard/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <random>
#include <set>

#include "qaguard/errors.hpp"
#include "qaguard/text.hpp"

namespace qaguard {

void SyntheticSpec::validate() const {
    if (n_facts < 1) throw ValidationError("synthetic n_facts must be >= 1");
    if (redundancy < 1) throw ValidationError("synthetic redundancy must be >= 1");
    if (n_distractor_articles < 0) throw ValidationError("synthetic n_distractor_articles must be >= 0");
    if (aliases_per_answer < 1 || aliases_per_answer > 2) {
        throw ValidationError("synthetic aliases_per_answer must be 1 or 2");
    }
}

namespace {

constexpr std::size_t kPassageTokens = 100;
constexpr int kProfilePassages = 3;
constexpr int kSupportPassages = 2;
constexpr int kTopicalPassages = 2;
constexpr int kTopicalPerFact = 2;
constexpr int kDecoysPerAnswer = 4;

enum class Kind { place, year, mentor };

constexpr std::array<std::string_view, 3> kTypeNames{"GPE", "DATE", "PERSON"};

constexpr std::array<std::string_view, 40> kSyllables{
    "val", "mor", "ten", "kar", "lis", "dor", "ven", "sha", "bel", "qua", "rin", "tho", "mal", "dra",
    "fen", "gor", "hul", "jas", "nev", "pol", "sar", "tum", "wex", "zor", "bri", "cal", "dun", "eth",
    "fal", "gim", "hes", "ilo", "kes", "lun", "mir", "nor", "osk", "pim", "ruv", "sel"};

// Bland vocabulary that never occurs in a question or an augmentation prefix.
constexpr std::array<std::string_view, 40> kFiller{
    "quiet",   "river",   "stone",   "market",  "bread",    "winter",  "harvest", "green",
    "hills",   "morning", "songs",   "lanterns", "boats",   "orchards", "bridges", "rain",
    "copper",  "wool",    "salt",    "meadow",  "barley",   "cedar",   "fences",  "wagons",
    "kettles", "pastures", "chapel", "ferry",   "mill",     "lantern", "garden",  "walls",
    "apples",  "cattle",  "timber",  "looms",   "ponds",    "candles", "roofs",   "furrows"};

struct Person {
    std::string name;
    Kind kind;
    std::vector<std::string> aliases;  // canonical first
};

class NameForge {
public:
    explicit NameForge(std::mt19937_64& rng) : rng_(rng) {}

    std::string word(int syllables) {
        for (int attempt = 0;; ++attempt) {
            // fall back to longer words once the short ones run out
            if (attempt > 0 && attempt % 64 == 0) ++syllables;
            std::string w;
            for (int i = 0; i < syllables; ++i) w += kSyllables[pick(kSyllables.size())];
            w[0] = static_cast<char>(w[0] - 'a' + 'A');
            if (used_.insert(w).second) return w;
        }
    }

    int year() {
        for (;;) {
            const int y = 1600 + static_cast<int>(pick(400));
            if (years_.insert(y).second) return y;
        }
    }

    std::size_t years_left() const { return 400 - years_.size(); }

private:
    std::size_t pick(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_); }

    std::mt19937_64& rng_;
    std::set<std::string> used_;
    std::set<int> years_;
};

class Writer {
public:
    explicit Writer(std::mt19937_64& rng) : rng_(rng) {}

    // Mandatory sentences, then filler, cut to exactly kPassageTokens tokens.
    std::string passage(const std::vector<std::string>& sentences) {
        std::vector<std::string> tokens;
        for (const auto& s : sentences) {
            for (const auto& t : text::whitespace_tokens(s)) tokens.emplace_back(t.token);
        }
        if (tokens.size() > kPassageTokens) throw std::logic_error("synthetic template too long");
        while (tokens.size() < kPassageTokens) {
            const auto len = std::uniform_int_distribution<int>(5, 9)(rng_);
            for (int i = 0; i < len; ++i) {
                tokens.emplace_back(kFiller[std::uniform_int_distribution<std::size_t>(0, kFiller.size() - 1)(rng_)]);
            }
            tokens.back() += '.';
        }
        tokens.resize(kPassageTokens);
        return text::join(tokens, " ");
    }

private:
    std::mt19937_64& rng_;
};

std::string fill(std::string_view pattern, const std::string& s, const std::string& a) {
    std::string out;
    for (std::size_t i = 0; i < pattern.size(); ++i) {
        if (pattern[i] == '{' && i + 2 < pattern.size() && pattern[i + 2] == '}') {
            out += pattern[i + 1] == 'S' ? s : a;
            i += 2;
        } else {
            out += pattern[i];
        }
    }
    return out;
}

// Profile passages state the fact in the question's own words.
std::vector<std::string> profile_sentences(Kind kind, const std::string& s, const std::string& a) {
    switch (kind) {
    case Kind::place:
        return {fill("{S} was born in {A}.", s, a),
                fill("The village where {S} was born is {A}, and {S} stayed there through childhood.", s, a)};
    case Kind::year:
        return {fill("{S} was born in {A}.", s, a),
                fill("The season when {S} was born in {A} was cold, and {S} was a small child.", s, a)};
    case Kind::mentor:
        return {fill("The mentor of {S} was {A}.", s, a),
                fill("{A} guided {S} for years, and {S} learned a craft there.", s, a)};
    }
    return {};
}

// Topical distractors share the person and the question wording but never the answer.
std::vector<std::string> topical_sentences(Kind kind, const std::string& s) {
    switch (kind) {
    case Kind::place:
        return {fill("No one is sure of the street where {S} was born.", s, ""),
                fill("{S} kept few letters, and {S} rarely spoke about early days.", s, "")};
    case Kind::year:
        return {fill("No one is sure of the day when {S} was born.", s, ""),
                fill("{S} kept few letters, and {S} rarely spoke about early days.", s, "")};
    case Kind::mentor:
        return {fill("No one is sure how {S} chose a mentor.", s, ""),
                fill("{S} kept few letters, and {S} rarely spoke about early days.", s, "")};
    }
    return {};
}

// Supporting articles restate the fact without the question's key words, in a
// conversational register. The wording differs per article; the set of words that
// can occur in a query is identical across them.
std::vector<std::string> support_sentences(Kind kind, int variant, const std::string& s, const std::string& a) {
    static constexpr std::array<std::array<std::string_view, 3>, 4> kPlace{{
        {"{S} called {A} home.", "{A} shaped {S} early.", "Ask around {A} today."},
        {"{S} grew up around {A}.", "{A} stayed dear for {S}.", "Locals around {A} agree."},
        {"{S} spent childhood summers around {A}.", "{A} raised {S}.", "Elders around {A} nod."},
        {"{S} first walked through {A}.", "{A} knew {S} young.", "Neighbours around {A} recall."},
    }};
    static constexpr std::array<std::array<std::string_view, 3>, 4> kYear{{
        {"{S} arrived during {A}.", "{A} marks the first spring for {S}.", "Parish books note {A}."},
        {"{S} entered life during {A}.", "{A} begins the story for {S}.", "Family books note {A}."},
        {"{S} first cried during {A}.", "{A} opened the life for {S}.", "Church books note {A}."},
        {"{S} came along during {A}.", "{A} starts the tale for {S}.", "Town books note {A}."},
    }};
    static constexpr std::array<std::array<std::string_view, 3>, 4> kMentor{{
        {"{S} trained under {A}.", "{A} taught {S} patiently.", "Apprentices praised {A}."},
        {"{S} studied beside {A}.", "{A} guided {S} closely.", "Students praised {A}."},
        {"{S} apprenticed with {A}.", "{A} schooled {S} firmly.", "Pupils praised {A}."},
        {"{S} learned from {A}.", "{A} coached {S} gently.", "Trainees praised {A}."},
    }};
    const auto& rows = kind == Kind::place ? kPlace : kind == Kind::year ? kYear : kMentor;
    const auto& row = rows[static_cast<std::size_t>(variant) % rows.size()];
    // a capitalized common noun would become an answer candidate
    std::string third = fill(row[2], s, a);
    third[0] = static_cast<char>(third[0] - 'A' + 'a');

    const std::string type_word = kind == Kind::place ? "place" : kind == Kind::year ? "year" : "person";

    return {
        fill(row[0], s, a),
        "You can ask me and I can tell you what I know about " + s + ".",
        "Anyone that would like information could find out here, so please give any quick question "
        "and I will explain or help you figure it out.",
        "I wonder which " + type_word + " in this story does matter; it is a question.",
        "And please explain, help me figure it out, tell me, do you know, does anyone know, quick question here.",
        fill(row[1], s, a),
        "So " + third,
    };
}

// Generic filler that still matches question words more strongly than other facts'
// profiles do, so those never crowd into a question's top results.
std::vector<std::string> general_sentences(const std::string& landmark) {
    return {"The " + landmark + " crossing was quiet.",
            "Where and when the " + landmark + " bridge stood, nobody born there was the mentor of anyone "
            "who came later.",
            "Where it was born and when it was born, who its mentor was, the " + landmark +
                " folk still debate."};
}

std::string pad3(int i) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%03d", i);
    return buf;
}

}  // namespace

SyntheticData generate_synthetic(const SyntheticSpec& spec) {
    spec.validate();
    std::mt19937_64 rng(spec.seed);
    NameForge forge(rng);
    Writer writer(rng);

    std::vector<Person> subjects;
    std::vector<Person> answers;
    std::map<std::string, std::vector<std::string>> gazetteer;
    for (int i = 0; i < spec.n_facts; ++i) {
        const auto kind = static_cast<Kind>(i % 3);
        subjects.push_back({forge.word(2) + " " + forge.word(2), kind, {}});
        Person ans{"", kind, {}};
        switch (kind) {
        case Kind::place: {
            const auto place = forge.word(2);
            ans.aliases = {place, place + " Town"};
            break;
        }
        case Kind::year: {
            const auto y = std::to_string(forge.year());
            ans.aliases = {y, "the year " + y};
            break;
        }
        case Kind::mentor: {
            const auto first = forge.word(2);
            const auto last = forge.word(2);
            ans.aliases = {first + " " + last, last};
            break;
        }
        }
        ans.aliases.resize(static_cast<std::size_t>(spec.aliases_per_answer));
        ans.name = ans.aliases.front();
        gazetteer[std::string(kTypeNames[i % 3])].push_back(ans.name);
        answers.push_back(std::move(ans));
    }
    // Decoys are substitutes that occur nowhere in the clean corpus.
    for (int i = 0; i < spec.n_facts * kDecoysPerAnswer; ++i) {
        const auto kind = static_cast<Kind>(i % 3);
        std::string decoy;
        if (kind == Kind::place) decoy = forge.word(2);
        else if (kind == Kind::mentor) decoy = forge.word(2) + " " + forge.word(2);
        else if (forge.years_left() > 0) decoy = std::to_string(forge.year());
        if (!decoy.empty()) gazetteer[std::string(kTypeNames[i % 3])].push_back(decoy);
    }

    SyntheticData data;
    const auto article = [&](std::string id, std::string title, const std::vector<std::vector<std::string>>& blocks) {
        std::string body;
        for (const auto& b : blocks) {
            if (!body.empty()) body += ' ';
            body += writer.passage(b);
        }
        data.articles.push_back({std::move(id), std::move(title), std::move(body)});
    };

    for (int i = 0; i < spec.n_facts; ++i) {
        const auto& s = subjects[static_cast<std::size_t>(i)];
        const auto& a = answers[static_cast<std::size_t>(i)];
        const auto alias_at = [&](int k) { return a.aliases[static_cast<std::size_t>(k) % a.aliases.size()]; };
        const std::string base = "fact" + pad3(i);

        std::vector<std::vector<std::string>> blocks;
        for (int p = 0; p < kProfilePassages; ++p) {
            // the long alias never follows "born in" for years: "born in the year" reads oddly
            const auto surface = s.kind == Kind::year ? a.aliases.front() : alias_at(p);
            blocks.push_back(profile_sentences(s.kind, s.name, surface));
        }
        article(base + "-profile", s.name, blocks);

        for (int r = 1; r < spec.redundancy; ++r) {
            blocks.clear();
            for (int p = 0; p < kSupportPassages; ++p) {
                const auto surface = s.kind == Kind::year ? a.aliases.front() : alias_at(p + r);
                blocks.push_back(support_sentences(s.kind, r - 1, s.name, surface));
            }
            article(base + "-support" + std::to_string(r), s.name + " recollections " + std::to_string(r), blocks);
        }

        QAExample ex;
        ex.id = "q" + pad3(i);
        switch (s.kind) {
        case Kind::place: ex.question = "Where was " + s.name + " born?"; break;
        case Kind::year: ex.question = "When was " + s.name + " born?"; break;
        case Kind::mentor: ex.question = "Who was the mentor of " + s.name + "?"; break;
        }
        ex.answers = a.aliases;
        ex.entity_type = std::string(kTypeNames[static_cast<std::size_t>(i % 3)]);
        data.examples.push_back(std::move(ex));
    }

    const int topical_budget = std::min(spec.n_distractor_articles, spec.n_facts * kTopicalPerFact);
    for (int d = 0; d < spec.n_distractor_articles; ++d) {
        std::vector<std::vector<std::string>> blocks;
        if (d < topical_budget) {
            const auto& s = subjects[static_cast<std::size_t>(d % spec.n_facts)];
            for (int p = 0; p < kTopicalPassages; ++p) blocks.push_back(topical_sentences(s.kind, s.name));
            article("misc" + pad3(d), s.name + " notes", blocks);
        } else {
            const auto landmark = forge.word(3);
            for (int p = 0; p < kTopicalPassages; ++p) blocks.push_back(general_sentences(landmark));
            article("misc" + pad3(d), landmark, blocks);
        }
    }

    data.gazetteer = Gazetteer(std::move(gazetteer));
    return data;
}

void write_synthetic(const SyntheticData& data, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    write_corpus_jsonl(dir / "corpus.jsonl", data.articles);
    write_dataset_jsonl(dir / "dataset.jsonl", data.examples);
    data.gazetteer.write(dir / "gazetteer.json");
}

}  // namespace qaguard
