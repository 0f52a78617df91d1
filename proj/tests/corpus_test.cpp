#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "qaguard/corpus.hpp"
#include "qaguard/dataset.hpp"
#include "qaguard/errors.hpp"
#include "qaguard/text.hpp"

using namespace qaguard;
namespace fs = std::filesystem;

namespace {

std::string words(int n, const std::string& stem = "w") {
    std::string out;
    for (int i = 0; i < n; ++i) {
        if (i) out += ' ';
        out += stem + std::to_string(i);
    }
    return out;
}

fs::path temp_file(const std::string& name, const std::string& body) {
    const auto dir = fs::temp_directory_path() / "qaguard_corpus_test";
    fs::create_directories(dir);
    const auto p = dir / name;
    std::ofstream(p, std::ios::binary) << body;
    return p;
}

}  // namespace

TEST(Text, WhitespaceTokensKeepOffsets) {
    const std::string s = "  alpha\tbeta\n gamma  ";
    const auto toks = text::whitespace_tokens(s);
    ASSERT_EQ(toks.size(), 3u);
    EXPECT_EQ(toks[1].token, "beta");
    EXPECT_EQ(s.substr(toks[2].begin, toks[2].end - toks[2].begin), "gamma");
}

TEST(Text, UnicodeSpaceSplits) {
    const auto toks = text::whitespace_tokens("a b　c");
    EXPECT_EQ(toks.size(), 3u);
}

TEST(Text, FindWordRespectsBoundaries) {
    const std::string hay = text::ascii_lower("Dortenville is not Dorten, but Dorten-Town is.");
    const auto at = text::find_word(hay, "Dorten");
    EXPECT_EQ(at, hay.find("dorten,"));
    EXPECT_EQ(text::find_word(hay, "orten"), std::string_view::npos);
}

TEST(Text, DeriveSeedDependsOnBoth) {
    EXPECT_EQ(text::derive_seed(1, "q1"), text::derive_seed(1, "q1"));
    EXPECT_NE(text::derive_seed(1, "q1"), text::derive_seed(2, "q1"));
    EXPECT_NE(text::derive_seed(1, "q1"), text::derive_seed(1, "q2"));
}

TEST(Chunking, ExactMultipleGivesFullPassages) {
    const Article a{"art", "t", words(250)};
    const auto ps = chunk_article(a, {100, 100});
    ASSERT_EQ(ps.size(), 3u);
    EXPECT_EQ(ps[0].id, "art#0");
    EXPECT_EQ(ps[2].id, "art#2");
    EXPECT_EQ(text::whitespace_tokens(ps[2].text).size(), 50u);
    for (const auto& p : ps) EXPECT_EQ(a.text.substr(p.span.begin, p.span.end - p.span.begin), p.text);
}

TEST(Chunking, OverlappingStride) {
    const Article a{"art", "t", words(10)};
    const auto ps = chunk_article(a, {4, 2});
    // starts at 0, 2, 4, 6; the window at 6 reaches the end so no further starts
    ASSERT_EQ(ps.size(), 4u);
    EXPECT_EQ(ps[1].text, "w2 w3 w4 w5");
    EXPECT_EQ(ps[3].text, "w6 w7 w8 w9");
}

TEST(Chunking, ShortArticleIsOnePassage) {
    const auto ps = chunk_article({"x", "", "just three words"}, {});
    ASSERT_EQ(ps.size(), 1u);
    EXPECT_EQ(ps[0].text, "just three words");
}

TEST(Chunking, RejectsBadOptions) {
    EXPECT_THROW((ChunkingOptions{0, 1}.validate()), ValidationError);
    EXPECT_THROW((ChunkingOptions{10, 0}.validate()), ValidationError);
    EXPECT_THROW((ChunkingOptions{10, 11}.validate()), ValidationError);
}

TEST(Chunking, TokenCoverageProperty) {
    // every token lands in at least one passage and passage count matches the stride
    for (int n : {1, 7, 99, 100, 101, 333}) {
        for (std::size_t stride : {std::size_t{1}, std::size_t{3}, std::size_t{10}}) {
            const Article a{"a", "", words(n)};
            const ChunkingOptions opt{10, stride};
            const auto ps = chunk_article(a, opt);
            std::size_t covered_to = 0;
            for (const auto& p : ps) {
                EXPECT_LE(text::whitespace_tokens(p.text).size(), opt.chunk_size);
                EXPECT_LE(p.span.begin, covered_to == 0 ? 0 : covered_to + 1);
                covered_to = std::max(covered_to, p.span.end);
            }
            EXPECT_EQ(covered_to, a.text.size()) << n << " " << stride;
        }
    }
}

TEST(Corpus, LookupsAndArticlePassages) {
    auto c = Corpus::from_articles({{"b", "B", words(150)}, {"a", "A", "one two"}});
    EXPECT_EQ(c.passages().size(), 3u);
    EXPECT_TRUE(c.contains_passage("b#1"));
    EXPECT_EQ(c.passage("b#1").article_id, "b");
    EXPECT_EQ(c.article("a").title, "A");
    const auto ps = c.passages_of_article("b");
    ASSERT_EQ(ps.size(), 2u);
    EXPECT_EQ(ps[0].get().id, "b#0");
    EXPECT_THROW(c.passage("zzz#0"), NotFoundError);
    EXPECT_THROW(c.passages_of_article("zzz"), NotFoundError);
}

TEST(Corpus, RejectsDuplicatesAndEmpty) {
    EXPECT_THROW(Corpus::from_articles({{"a", "", "x"}, {"a", "", "y"}}), ValidationError);
    EXPECT_THROW(Corpus::from_articles({{"a", "", "   "}}), ValidationError);
    EXPECT_THROW(Corpus::from_articles({}), ValidationError);
}

TEST(Corpus, LoadReportsLineNumber) {
    const auto p = temp_file("bad.jsonl", "{\"id\":\"a\",\"title\":\"\",\"text\":\"x\"}\n{not json\n");
    try {
        Corpus::load(p);
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_NE(std::string(e.what()).find(":2:"), std::string::npos) << e.what();
    }
}

TEST(Corpus, RoundTripThroughJsonl) {
    const std::vector<Article> arts{{"a", "Alpha", "café \"quoted\" text"}, {"b", "", words(5)}};
    const auto dir = fs::temp_directory_path() / "qaguard_corpus_test";
    fs::create_directories(dir);
    write_corpus_jsonl(dir / "rt.jsonl", arts);
    const auto c = Corpus::load(dir / "rt.jsonl");
    ASSERT_EQ(c.articles().size(), 2u);
    EXPECT_EQ(c.article("a").text, arts[0].text);
}

TEST(Dataset, LoadValidates) {
    const auto ok = temp_file("ds.jsonl",
                              "{\"id\":\"q1\",\"question\":\"Who?\",\"answers\":[\"X\"],\"entity_type\":\"PERSON\","
                              "\"augmentations\":[\"Who is it?\"]}\n\n");
    const auto ds = load_dataset(ok);
    ASSERT_EQ(ds.size(), 1u);
    ASSERT_TRUE(ds[0].augmentations.has_value());
    EXPECT_EQ(ds[0].augmentations->size(), 1u);

    const auto no_answers = temp_file("ds2.jsonl", "{\"id\":\"q1\",\"question\":\"Who?\",\"answers\":[]}\n");
    EXPECT_THROW(load_dataset(no_answers), ValidationError);
    const auto broken = temp_file("ds3.jsonl", "{\"id\":1}\n");
    EXPECT_THROW(load_dataset(broken), ParseError);
}

TEST(Gazetteer, ParseAndLookup) {
    const auto g = Gazetteer::parse(R"({"GPE": ["Paris", "Rome"], "DATE": ["1900"]})");
    EXPECT_EQ(g.candidates("GPE").size(), 2u);
    EXPECT_TRUE(g.candidates("PERSON").empty());
    EXPECT_THROW(Gazetteer::parse("[1,2]"), ParseError);
    EXPECT_THROW(Gazetteer::parse("{\"GPE\": 3}"), ParseError);
}
