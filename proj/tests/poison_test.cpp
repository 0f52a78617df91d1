#include <gtest/gtest.h>

#include <set>

#include "qaguard/errors.hpp"
#include "qaguard/poison.hpp"
#include "support/oracles.hpp"

using namespace qaguard;

namespace {

QAExample charleston() {
    return {"q1", "What dance craze was named after a city?", {"Charleston", "The Charleston"}, "MISC", {}};
}

// Six articles; the first three mention the answer.
Corpus small_corpus() {
    std::vector<Article> arts;
    for (int i = 0; i < 6; ++i) {
        std::string text;
        for (int p = 0; p < 3; ++p) {
            for (int w = 0; w < 10; ++w) text += (w == 3 && i < 3 ? "Charleston " : "filler ");
        }
        arts.push_back({"art" + std::to_string(i), "", text});
    }
    return Corpus::from_articles(arts, {10, 10});
}

std::vector<RetrievedPassage> ranking(const Corpus& c) {
    // interleave articles so distinct-article order differs from passage order
    std::vector<RetrievedPassage> out;
    int rank = 1;
    for (int p = 0; p < 3; ++p) {
        for (int i = 5; i >= 0; --i) {
            out.push_back({"art" + std::to_string(i) + "#" + std::to_string(p), 1.0, rank++});
        }
    }
    (void)c;
    return out;
}

}  // namespace

TEST(PoisonText, ReplacesWholeWordsCaseInsensitively) {
    const std::vector<std::string> aliases{"Charleston", "The Charleston"};
    EXPECT_EQ(poison_text("The Charleston was danced in charleston.", aliases, "Lindy Hop"),
              "Lindy Hop was danced in Lindy Hop.");
    EXPECT_EQ(poison_text("Charlestonian and XCharleston stay", aliases, "Z"),
              "Charlestonian and XCharleston stay");
    EXPECT_EQ(poison_text("no alias here", aliases, "Z"), "no alias here");
    EXPECT_EQ(poison_text("(Charleston),Charleston's", aliases, "Z"), "(Z),Z's");
}

TEST(PoisonText, LongestAliasWins) {
    const std::vector<std::string> aliases{"New York", "New York City"};
    EXPECT_EQ(poison_text("I love New York City and New York.", aliases, "Paris"),
              "I love Paris and Paris.");
}

TEST(PoisonText, PropertyNoAliasSurvives) {
    oracle::TextGen gen(21);
    const std::vector<std::string> aliases{"Dorten", "river stone"};
    for (int i = 0; i < 300; ++i) {
        const auto text = gen.sentence(3, 30);
        const auto out = poison_text(text, aliases, "Ulvar");
        EXPECT_FALSE(oracle::mentions(out, aliases)) << text << " -> " << out;
        if (!oracle::mentions(text, aliases)) EXPECT_EQ(out, text);
    }
}

TEST(Substitute, NeverAnAliasOrContainingOne) {
    const Gazetteer g(std::map<std::string, std::vector<std::string>>{{"MISC", {"Charleston", "the charleston", "Charleston Swing", "Lindy Hop", "Foxtrot"}}});
    std::set<std::string> seen;
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        const auto s = choose_substitute(charleston(), g, seed);
        EXPECT_TRUE(s == "Lindy Hop" || s == "Foxtrot") << s;
        seen.insert(s);
        EXPECT_EQ(s, choose_substitute(charleston(), g, seed));
    }
    EXPECT_EQ(seen.size(), 2u);
}

TEST(Substitute, NoEligibleIsConfigError) {
    const Gazetteer g(std::map<std::string, std::vector<std::string>>{{"MISC", {"Charleston"}}});
    EXPECT_THROW(choose_substitute(charleston(), g, 1), ConfigError);
    auto other = charleston();
    other.entity_type = "PERSON";
    EXPECT_THROW(choose_substitute(other, g, 1), ConfigError);
}

TEST(Plan, ArticleModeTakesFirstDistinctArticles) {
    const auto c = small_corpus();
    const auto r = ranking(c);
    const auto plan = build_poison_plan(charleston(), r, c, 2, PoisonMode::article, std::string("Z"), 1);
    EXPECT_EQ(plan.poisoned_article_ids, (std::vector<std::string>{"art5", "art4"}));
    EXPECT_FALSE(plan.clamped);
    const auto big = build_poison_plan(charleston(), r, c, 100, PoisonMode::article, std::string("Z"), 1);
    EXPECT_TRUE(big.clamped);
    EXPECT_EQ(big.effective_level, 6);
    EXPECT_THROW(build_poison_plan(charleston(), r, c, -1, PoisonMode::article, std::string("Z"), 1),
                 ValidationError);
}

TEST(Plan, NestedAcrossLevelsInEveryMode) {
    const auto c = small_corpus();
    const auto r = ranking(c);
    for (const auto mode : {PoisonMode::article, PoisonMode::top_passage, PoisonMode::random_passage}) {
        std::vector<std::string> prev_articles;
        std::vector<std::string> prev_passages;
        for (int level = 0; level <= 100; level += (mode == PoisonMode::article ? 1 : 7)) {
            const auto plan = build_poison_plan(charleston(), r, c, level, mode, std::string("Z"), 99);
            const auto& cur = mode == PoisonMode::article ? plan.poisoned_article_ids : plan.poisoned_passage_ids;
            const auto& prev = mode == PoisonMode::article ? prev_articles : prev_passages;
            ASSERT_GE(cur.size(), prev.size());
            EXPECT_TRUE(std::equal(prev.begin(), prev.end(), cur.begin())) << to_string(mode) << " " << level;
            prev_articles = plan.poisoned_article_ids;
            prev_passages = plan.poisoned_passage_ids;
            if (mode == PoisonMode::article && level > 8) break;
        }
    }
}

TEST(Plan, PassageModesRoundPercent) {
    const auto c = small_corpus();
    const auto r = ranking(c);  // 18 passages
    const auto top = build_poison_plan(charleston(), r, c, 10, PoisonMode::top_passage, std::string("Z"), 3);
    ASSERT_EQ(top.poisoned_passage_ids.size(), 2u);  // round(1.8)
    EXPECT_EQ(top.poisoned_passage_ids[0], "art5#0");
    const auto all = build_poison_plan(charleston(), r, c, 100, PoisonMode::random_passage, std::string("Z"), 3);
    EXPECT_EQ(all.poisoned_passage_ids.size(), 18u);
    const auto again = build_poison_plan(charleston(), r, c, 100, PoisonMode::random_passage, std::string("Z"), 3);
    EXPECT_EQ(all.poisoned_passage_ids, again.poisoned_passage_ids);
}

TEST(View, ArticleModePoisonsWholeArticleAndLeavesBaseAlone) {
    const auto c = small_corpus();
    const auto r = ranking(c);
    const auto ex = charleston();
    auto plan = build_poison_plan(ex, r, c, 4, PoisonMode::article, std::string("Foxtrot"), 1);
    const PoisonView view(c, plan, ex.answers);
    // art5, art4 have no mention; art3 has none either; only art2 (4th distinct) does
    for (const auto& p : c.passages()) {
        const auto& text = view.materialize(p.id);
        if (p.article_id == "art2") {
            EXPECT_NE(text.find("Foxtrot"), std::string::npos);
            EXPECT_EQ(text.find("Charleston"), std::string::npos);
        } else {
            EXPECT_EQ(text, p.text);
        }
    }
    EXPECT_NE(c.passage("art2#1").text.find("Charleston"), std::string::npos);
    EXPECT_EQ(count_poisoned_passages(view, r), 3);
    EXPECT_THROW(view.materialize("nope#0"), NotFoundError);
}

TEST(View, IdentityChangesNothing) {
    const auto c = small_corpus();
    const auto view = PoisonView::identity(c);
    for (const auto& p : c.passages()) EXPECT_EQ(view.materialize(p.id), p.text);
    EXPECT_EQ(count_poisoned_passages(view, ranking(c)), 0);
}

TEST(View, PoisonedCountMatchesBruteForceAndGrows) {
    const auto c = small_corpus();
    const auto r = ranking(c);
    const auto ex = charleston();
    int prev = 0;
    for (int level = 0; level <= 7; ++level) {
        const auto plan = build_poison_plan(ex, r, c, level, PoisonMode::article, std::string("Z"), 1);
        const PoisonView view(c, plan, ex.answers);
        const std::set<std::string> arts(plan.poisoned_article_ids.begin(), plan.poisoned_article_ids.end());
        int brute = 0;
        for (const auto& hit : r) {
            const auto& p = c.passage(hit.passage_id);
            if (arts.contains(p.article_id) && oracle::mentions(p.text, ex.answers)) ++brute;
        }
        const int got = count_poisoned_passages(view, r);
        EXPECT_EQ(got, brute) << level;
        EXPECT_GE(got, prev);
        prev = got;
    }
}

TEST(PoisonMode, ParseRoundTrip) {
    for (const auto m : {PoisonMode::article, PoisonMode::random_passage, PoisonMode::top_passage}) {
        EXPECT_EQ(parse_poison_mode(to_string(m)), m);
    }
    EXPECT_THROW(parse_poison_mode("everything"), ConfigError);
}
