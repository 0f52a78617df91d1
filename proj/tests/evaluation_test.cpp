#include <gtest/gtest.h>

#include "qaguard/errors.hpp"
#include "qaguard/evaluation.hpp"
#include "qaguard/poison.hpp"
#include "support/oracles.hpp"
#include "support/scoring_fixtures.hpp"

using namespace qaguard;

namespace {

ScoreRecord rec(std::string id, int level, Strategy s, ContextSource c, int em, double f1 = -1) {
    ScoreRecord r;
    r.example_id = std::move(id);
    r.level = level;
    r.strategy = s;
    r.context_source = c;
    r.em = em;
    r.f1 = f1 < 0 ? em : f1;
    return r;
}

constexpr auto O = ContextSource::original_c;
constexpr auto N = ContextSource::new_c;

}  // namespace

TEST(Normalize, SquadRules) {
    EXPECT_EQ(normalize_answer("george ivan morrison"), "george ivan morrison");
    EXPECT_EQ(normalize_answer("  Croatia. "), "croatia");
    EXPECT_EQ(normalize_answer("The  Lord of the Rings!"), "lord of rings");
    EXPECT_EQ(normalize_answer("Charleston (dance)"), "charleston dance");
    EXPECT_EQ(normalize_answer(""), "");
    EXPECT_EQ(normalize_answer("Anne"), "anne");
}

TEST(Normalize, AgreesWithRegexOracle) {
    oracle::TextGen gen(4);
    for (int i = 0; i < 500; ++i) {
        const auto s = gen.sentence(0, 8);
        EXPECT_EQ(normalize_answer(s), oracle::normalize(s)) << s;
    }
}

TEST(Scoring, Fixtures) {
    const auto& fixtures = scoring_fixtures();
    ASSERT_EQ(fixtures.size(), 20u);
    for (const auto& f : fixtures) {
        EXPECT_EQ(exact_match(f.prediction, f.aliases), f.em) << f.name;
        EXPECT_DOUBLE_EQ(token_f1(f.prediction, f.aliases), f.f1) << f.name;
    }
}

TEST(Scoring, EmAgreesWithOracleAndBoundsF1) {
    oracle::TextGen gen(12);
    for (int i = 0; i < 300; ++i) {
        const auto p = gen.sentence(0, 3, 10);
        const std::vector<std::string> aliases{gen.sentence(1, 3, 10), gen.sentence(1, 2, 10)};
        const int em = exact_match(p, aliases);
        const double f1 = token_f1(p, aliases);
        EXPECT_EQ(em, oracle::em(p, aliases)) << p;
        EXPECT_GE(f1, 0.0);
        EXPECT_LE(f1, 1.0);
        if (em == 1) EXPECT_DOUBLE_EQ(f1, 1.0);
    }
}

// The alias-gap failure as an attack: poisoning replaces the listed aliases, but the
// bare name is not listed, so the text still carries it.
TEST(Scoring, AliasGapSurvivesPoisoning) {
    const std::vector<std::string> aliases{"Charleston rhythm", "Charleston dance"};
    const auto poisoned = poison_text("The Charleston became a dance craze.", aliases, "Foxtrot");
    EXPECT_NE(poisoned.find("Charleston"), std::string::npos);
    EXPECT_EQ(exact_match("Charleston", aliases), 0);
}

TEST(Filter, KeepsOnlyOriginallyCorrect) {
    const std::vector<ScoreRecord> rs{rec("a", 0, Strategy::original, O, 1), rec("b", 0, Strategy::original, O, 0),
                                      rec("c", 0, Strategy::original, O, 1), rec("b", 1, Strategy::original, O, 1)};
    EXPECT_EQ(filter_originally_correct(rs), (std::set<std::string>{"a", "c"}));
}

TEST(Filter, DegenerateInputsThrow) {
    const std::vector<ScoreRecord> wrong{rec("a", 0, Strategy::original, O, 0)};
    EXPECT_THROW(filter_originally_correct(wrong), ValidationError);
    const std::vector<ScoreRecord> no_baseline{rec("a", 1, Strategy::original, O, 1)};
    EXPECT_THROW(filter_originally_correct(no_baseline), ValidationError);
}

TEST(Aggregate, MeansOverKeptExamples) {
    std::vector<ScoreRecord> rs{rec("a", 0, Strategy::original, O, 1), rec("b", 0, Strategy::original, O, 1),
                                rec("x", 0, Strategy::original, O, 0), rec("a", 1, Strategy::original, O, 1),
                                rec("b", 1, Strategy::original, O, 0), rec("x", 1, Strategy::original, O, 1),
                                rec("a", 1, Strategy::redundancy, N, 1, 1.0), rec("b", 1, Strategy::redundancy, N, 0, 0.5)};
    rs[3].poisoned_passage_count = 2;
    rs[4].poisoned_passage_count = 5;
    const auto keep = filter_originally_correct(rs);
    const std::vector<CellKey> expected{{0, Strategy::original, O}, {1, Strategy::original, O},
                                        {1, Strategy::redundancy, N}};
    const auto result = aggregate(rs, keep, expected);
    EXPECT_DOUBLE_EQ(result.at(0, Strategy::original, O).em, 100.0);
    EXPECT_DOUBLE_EQ(result.at(1, Strategy::original, O).em, 50.0);
    EXPECT_DOUBLE_EQ(result.at(1, Strategy::original, O).mean_poisoned_passages, 3.5);
    EXPECT_DOUBLE_EQ(result.at(1, Strategy::redundancy, N).f1, 75.0);
    EXPECT_EQ(result.at(1, Strategy::redundancy, N).n, 2u);
    EXPECT_EQ(result.levels(), (std::vector<int>{0, 1}));
    EXPECT_THROW(result.at(2, Strategy::original, O), NotFoundError);
}

TEST(Aggregate, MissingCellIsIncompleteGrid) {
    const std::vector<ScoreRecord> rs{rec("a", 0, Strategy::original, O, 1), rec("b", 0, Strategy::original, O, 1),
                                      rec("a", 1, Strategy::redundancy, N, 1)};
    const auto keep = filter_originally_correct(rs);
    const std::vector<CellKey> expected{{0, Strategy::original, O}, {1, Strategy::redundancy, N},
                                        {1, Strategy::random, N}};
    try {
        aggregate(rs, keep, expected);
        FAIL();
    } catch (const IncompleteGridError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("redundancy/new_c has 1 of 2"), std::string::npos) << msg;
        EXPECT_NE(msg.find("random/new_c has 0 of 2"), std::string::npos) << msg;
    }
}

TEST(Aggregate, RecordOrderDoesNotMatter) {
    oracle::TextGen gen(8);
    std::vector<ScoreRecord> rs;
    for (int i = 0; i < 40; ++i) {
        const auto id = "e" + std::to_string(i);
        rs.push_back(rec(id, 0, Strategy::original, O, 1));
        rs.push_back(rec(id, 1, Strategy::majority_vote, N, gen.uniform(0, 1), gen.uniform(0, 1000) / 1000.0));
    }
    const auto keep = filter_originally_correct(rs);
    const auto a = results_csv(aggregate(rs, keep, {}));
    std::shuffle(rs.begin(), rs.end(), gen.rng());
    EXPECT_EQ(results_csv(aggregate(rs, keep, {})), a);
}

TEST(ResultsCsv, FormatAndRoundTrip) {
    SweepResult r;
    r.cells[{0, Strategy::original, O}] = {100.0, 100.0, 50, 0.0};
    r.cells[{1, Strategy::redundancy, N}] = {63.94, 70.04, 50, 1.2};
    const auto csv = results_csv(r);
    EXPECT_EQ(csv,
              "level,strategy,context_source,em,f1,n\n"
              "0,original,original_c,100.0,100.0,50\n"
              "1,redundancy,new_c,63.9,70.0,50\n");
    const auto back = parse_results_csv(csv);
    EXPECT_DOUBLE_EQ(back.at(1, Strategy::redundancy, N).em, 63.9);
    EXPECT_EQ(results_csv(back), csv);
}

TEST(ResultsCsv, MalformedInputIsParseError) {
    EXPECT_THROW(parse_results_csv(""), ParseError);
    EXPECT_THROW(parse_results_csv("a,b\n"), ParseError);
    EXPECT_THROW(parse_results_csv("level,strategy,context_source,em,f1,n\n1,bogus,new_c,1,1,1\n"), ParseError);
    EXPECT_THROW(parse_results_csv("level,strategy,context_source,em,f1,n\n1,original,original_c,x,1,1\n"), ParseError);
    EXPECT_THROW(parse_results_csv("level,strategy,context_source,em,f1,n\n1,original\n"), ParseError);
}

TEST(Names, StrategyAndSourceRoundTrip) {
    for (const auto s : kAllStrategies) EXPECT_EQ(parse_strategy(to_string(s)), s);
    EXPECT_EQ(parse_context_source("new_c"), N);
    EXPECT_THROW(parse_strategy("best"), ValidationError);
    EXPECT_THROW(parse_context_source("both"), ValidationError);
    EXPECT_FALSE(is_valid_cell(Strategy::original, N));
    EXPECT_TRUE(is_valid_cell(Strategy::random, O));
}
