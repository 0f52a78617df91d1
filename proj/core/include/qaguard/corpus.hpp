#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace qaguard {

struct Article {
    std::string id;
    std::string title;
    std::string text;
};

/// Byte offsets into the parent article's text, end-exclusive.
struct CharSpan {
    std::size_t begin = 0;
    std::size_t end = 0;

    friend bool operator==(const CharSpan&, const CharSpan&) = default;
};

struct Passage {
    std::string id;
    std::string article_id;
    std::string text;
    CharSpan span;
};

struct ChunkingOptions {
    std::size_t chunk_size = 100;  // whitespace tokens per passage
    std::size_t stride = 100;      // tokens between passage starts

    void validate() const;
};

/// Articles chunked into passages. Immutable once built, so a `const Corpus&`
/// may be shared freely across threads.
class Corpus {
public:
    /// Reads JSONL, one `{"id","title","text"}` object per line.
    /// Throws ParseError (with line number) or ValidationError.
    static Corpus load(const std::filesystem::path& path, ChunkingOptions options = {});

    static Corpus from_articles(std::vector<Article> articles, ChunkingOptions options = {});

    const Passage& passage(std::string_view passage_id) const;
    const Article& article(std::string_view article_id) const;
    bool contains_passage(std::string_view passage_id) const;

    /// Passages of one article, ascending span order.
    std::vector<std::reference_wrapper<const Passage>> passages_of_article(
        std::string_view article_id) const;

    std::span<const Article> articles() const { return articles_; }
    std::span<const Passage> passages() const { return passages_; }
    const ChunkingOptions& chunking() const { return options_; }

private:
    Corpus() = default;

    ChunkingOptions options_;
    std::vector<Article> articles_;
    std::vector<Passage> passages_;
    std::unordered_map<std::string, std::size_t> article_index_;
    std::unordered_map<std::string, std::size_t> passage_index_;
    // article position -> [first, last) range into passages_
    std::vector<std::pair<std::size_t, std::size_t>> article_passages_;
};

/// Splits `text` into passages of at most `chunk_size` whitespace tokens starting
/// every `stride` tokens. Exposed for tests; Corpus uses it internally.
std::vector<Passage> chunk_article(const Article& article, const ChunkingOptions& options);

/// Writes articles as corpus JSONL.
void write_corpus_jsonl(const std::filesystem::path& path, std::span<const Article> articles);

}  // namespace qaguard
