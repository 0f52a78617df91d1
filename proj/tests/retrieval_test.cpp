#include <gtest/gtest.h>

#include "qaguard/errors.hpp"
#include "qaguard/retrieval.hpp"
#include "support/oracles.hpp"

using namespace qaguard;

namespace {

std::vector<Passage> to_passages(const std::vector<oracle::Doc>& docs) {
    std::vector<Passage> out;
    for (const auto& d : docs) out.push_back({d.id, d.id, d.text, {0, d.text.size()}});
    return out;
}

std::vector<oracle::Doc> random_docs(oracle::TextGen& gen, int n) {
    std::vector<oracle::Doc> docs;
    for (int i = 0; i < n; ++i) {
        char id[16];
        std::snprintf(id, sizeof(id), "p%03d", (i * 37) % n);
        docs.push_back({id, gen.sentence(5, 60)});
    }
    return docs;
}

}  // namespace

TEST(Tokenize, LowercasesAndSplitsOnPunctuation) {
    EXPECT_EQ(tokenize("Where was Lisnor-Hespim born?"),
              (std::vector<std::string>{"where", "was", "lisnor", "hespim", "born"}));
    EXPECT_EQ(tokenize("  ...  "), std::vector<std::string>{});
    EXPECT_EQ(tokenize("Zürich’s café"), (std::vector<std::string>{"zürich", "s", "café"}));
}

TEST(Bm25, MatchesBruteForceOnRandomCorpora) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        oracle::TextGen gen(seed);
        const auto docs = random_docs(gen, 60);
        const auto passages = to_passages(docs);
        const auto index = Bm25Index::build(passages);
        for (int q = 0; q < 20; ++q) {
            const auto query = gen.sentence(1, 6);
            const auto expected = oracle::bm25_rank(docs, query);
            const auto got = index.search(query, docs.size());
            ASSERT_EQ(got.size(), expected.size());
            for (std::size_t i = 0; i < got.size(); ++i) {
                EXPECT_EQ(got[i].passage_id, expected[i].id) << query << " rank " << i;
                EXPECT_NEAR(got[i].score, expected[i].score, 1e-9);
                EXPECT_EQ(got[i].rank, static_cast<int>(i + 1));
            }
        }
    }
}

TEST(Bm25, CustomParamsMatchOracle) {
    oracle::TextGen gen(11);
    const auto docs = random_docs(gen, 30);
    const auto passages = to_passages(docs);
    const auto index = Bm25Index::build(passages, {0.9, 0.4});
    const auto query = std::string("river stone Dorten year");
    const auto expected = oracle::bm25_rank(docs, query, 0.9, 0.4);
    const auto got = index.search(query, 5);
    ASSERT_EQ(got.size(), 5u);
    for (std::size_t i = 0; i < 5; ++i) EXPECT_NEAR(got[i].score, expected[i].score, 1e-9);
}

TEST(Bm25, TiesBreakByPassageId) {
    const std::vector<Passage> ps{{"c", "c", "same words", {}}, {"a", "a", "same words", {}},
                                  {"b", "b", "same words", {}}};
    const auto index = Bm25Index::build(ps);
    const auto got = index.search("same", 3);
    ASSERT_EQ(got.size(), 3u);
    EXPECT_EQ(got[0].passage_id, "a");
    EXPECT_EQ(got[1].passage_id, "b");
    EXPECT_EQ(got[2].passage_id, "c");
}

TEST(Bm25, RepeatedQueryTermsCountOnce) {
    const std::vector<Passage> ps{{"a", "a", "alpha beta", {}}, {"b", "b", "gamma", {}}};
    const auto index = Bm25Index::build(ps);
    EXPECT_DOUBLE_EQ(index.search("alpha", 1)[0].score, index.search("alpha alpha ALPHA", 1)[0].score);
}

TEST(Bm25, ZeroScoreDocumentsFillUpToK) {
    const std::vector<Passage> ps{{"a", "a", "alpha", {}}, {"b", "b", "beta", {}}, {"c", "c", "gamma", {}}};
    const auto index = Bm25Index::build(ps);
    const auto got = index.search("alpha", 10);
    ASSERT_EQ(got.size(), 3u);
    EXPECT_EQ(got[0].passage_id, "a");
    EXPECT_EQ(got[1].score, 0.0);
    EXPECT_EQ(got[1].passage_id, "b");
    EXPECT_TRUE(index.search("", 10).empty());
    EXPECT_TRUE(index.search("alpha", 0).empty());
}

TEST(Bm25, Introspection) {
    const std::vector<Passage> ps{{"a", "a", "x y z", {}}, {"b", "b", "x", {}}};
    const auto index = Bm25Index::build(ps);
    EXPECT_EQ(index.doc_count(), 2u);
    EXPECT_DOUBLE_EQ(index.avg_doc_length(), 2.0);
    EXPECT_EQ(index.doc_length("a"), 3u);
    EXPECT_EQ(index.postings("x").size(), 2u);
    EXPECT_THROW(index.doc_length("zz"), NotFoundError);
}

TEST(Bm25, RejectsBadInput) {
    EXPECT_THROW(Bm25Index::build({}), ValidationError);
    const std::vector<Passage> dup{{"a", "a", "x", {}}, {"a", "a", "y", {}}};
    EXPECT_THROW(Bm25Index::build(dup), ValidationError);
    const std::vector<Passage> one{{"a", "a", "x", {}}};
    EXPECT_THROW(Bm25Index::build(one, {0.0, 0.5}), ValidationError);
    EXPECT_THROW(Bm25Index::build(one, {1.2, 1.5}), ValidationError);
}

TEST(Bm25, BatchEqualsSequentialAndIsStable) {
    oracle::TextGen gen(3);
    const auto docs = random_docs(gen, 80);
    const auto passages = to_passages(docs);
    const auto index = Bm25Index::build(passages);
    std::vector<std::string> queries;
    for (int i = 0; i < 25; ++i) queries.push_back(gen.sentence(1, 5));
    const auto batch = index.search_batch(queries, 10, 4);
    for (std::size_t i = 0; i < queries.size(); ++i) {
        const auto seq = index.search(queries[i], 10);
        ASSERT_EQ(batch[i].size(), seq.size());
        for (std::size_t j = 0; j < seq.size(); ++j) EXPECT_EQ(batch[i][j].passage_id, seq[j].passage_id);
    }
}

TEST(Bm25, TopKIsPrefixOfLargerK) {
    oracle::TextGen gen(5);
    const auto docs = random_docs(gen, 50);
    const auto passages = to_passages(docs);
    const auto index = Bm25Index::build(passages);
    for (int i = 0; i < 10; ++i) {
        const auto q = gen.sentence(1, 4);
        const auto small = index.search(q, 7);
        const auto large = index.search(q, 40);
        for (std::size_t j = 0; j < small.size(); ++j) EXPECT_EQ(small[j].passage_id, large[j].passage_id);
    }
}
