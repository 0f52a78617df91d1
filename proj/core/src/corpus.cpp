#include "qaguard/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <string>

#include <json.hpp>

#include "qaguard/errors.hpp"
#include "qaguard/text.hpp"

namespace qaguard {

using json = nlohmann::json;

void ChunkingOptions::validate() const {
    if (chunk_size == 0) throw ValidationError("chunk_size must be positive");
    if (stride == 0) throw ValidationError("stride must be positive");
    if (stride > chunk_size) {
        throw ValidationError("stride (" + std::to_string(stride) + ") exceeds chunk_size (" +
                              std::to_string(chunk_size) + ")");
    }
}

std::vector<Passage> chunk_article(const Article& article, const ChunkingOptions& options) {
    options.validate();
    const auto tokens = text::whitespace_tokens(article.text);
    std::vector<Passage> out;
    for (std::size_t start = 0, k = 0; start < tokens.size(); start += options.stride, ++k) {
        const std::size_t end = std::min(start + options.chunk_size, tokens.size());
        const CharSpan span{tokens[start].begin, tokens[end - 1].end};
        out.push_back(Passage{
            article.id + "#" + std::to_string(k),
            article.id,
            article.text.substr(span.begin, span.end - span.begin),
            span,
        });
        if (end == tokens.size()) break;
    }
    return out;
}

Corpus Corpus::from_articles(std::vector<Article> articles, ChunkingOptions options) {
    options.validate();
    if (articles.empty()) throw ValidationError("corpus has no articles");

    Corpus corpus;
    corpus.options_ = options;
    corpus.articles_ = std::move(articles);
    corpus.article_passages_.reserve(corpus.articles_.size());
    for (std::size_t i = 0; i < corpus.articles_.size(); ++i) {
        const Article& a = corpus.articles_[i];
        if (a.id.empty()) throw ValidationError("article with empty id");
        if (!corpus.article_index_.emplace(a.id, i).second) {
            throw ValidationError("duplicate article id '" + a.id + "'");
        }
        auto chunks = chunk_article(a, options);
        if (chunks.empty()) throw ValidationError("article '" + a.id + "' has empty text");
        const std::size_t first = corpus.passages_.size();
        for (auto& p : chunks) {
            if (!corpus.passage_index_.emplace(p.id, corpus.passages_.size()).second) {
                throw ValidationError("duplicate passage id '" + p.id + "'");
            }
            corpus.passages_.push_back(std::move(p));
        }
        corpus.article_passages_.emplace_back(first, corpus.passages_.size());
    }
    return corpus;
}

Corpus Corpus::load(const std::filesystem::path& path, ChunkingOptions options) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open corpus file " + path.string());

    std::vector<Article> articles;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            const json j = json::parse(line);
            articles.push_back(Article{
                j.at("id").get<std::string>(),
                j.value("title", std::string{}),
                j.at("text").get<std::string>(),
            });
        } catch (const json::exception& e) {
            throw ParseError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    if (articles.empty()) throw ValidationError("corpus file " + path.string() + " is empty");
    return from_articles(std::move(articles), options);
}

const Passage& Corpus::passage(std::string_view passage_id) const {
    const auto it = passage_index_.find(std::string(passage_id));
    if (it == passage_index_.end()) {
        throw NotFoundError("unknown passage '" + std::string(passage_id) + "'");
    }
    return passages_[it->second];
}

const Article& Corpus::article(std::string_view article_id) const {
    const auto it = article_index_.find(std::string(article_id));
    if (it == article_index_.end()) {
        throw NotFoundError("unknown article '" + std::string(article_id) + "'");
    }
    return articles_[it->second];
}

bool Corpus::contains_passage(std::string_view passage_id) const {
    return passage_index_.contains(std::string(passage_id));
}

std::vector<std::reference_wrapper<const Passage>> Corpus::passages_of_article(
    std::string_view article_id) const {
    const auto it = article_index_.find(std::string(article_id));
    if (it == article_index_.end()) {
        throw NotFoundError("unknown article '" + std::string(article_id) + "'");
    }
    const auto [first, last] = article_passages_[it->second];
    std::vector<std::reference_wrapper<const Passage>> out;
    out.reserve(last - first);
    for (std::size_t i = first; i < last; ++i) out.emplace_back(passages_[i]);
    return out;
}

void write_corpus_jsonl(const std::filesystem::path& path, std::span<const Article> articles) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write " + path.string());
    for (const auto& a : articles) {
        out << json{{"id", a.id}, {"title", a.title}, {"text", a.text}}.dump() << '\n';
    }
}

}  // namespace qaguard
