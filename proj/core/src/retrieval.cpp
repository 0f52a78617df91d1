#include "qaguard/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>

#include "qaguard/errors.hpp"
#include "qaguard/text.hpp"

namespace qaguard {

std::vector<std::string> tokenize(std::string_view input) {
    std::vector<std::string> out;
    std::string current;
    std::size_t pos = 0;
    while (pos < input.size()) {
        const std::size_t here = pos;
        const char32_t cp = text::decode_utf8(input, pos);
        if (text::is_space(cp) || text::is_punctuation(cp)) {
            if (!current.empty()) out.push_back(std::move(current));
            current.clear();
            continue;
        }
        if (cp < 0x80) {
            char c = static_cast<char>(cp);
            if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
            current.push_back(c);
        } else {
            current.append(input.substr(here, pos - here));
        }
    }
    if (!current.empty()) out.push_back(std::move(current));
    return out;
}

std::vector<std::vector<RetrievedPassage>> Retriever::search_batch(
    std::span<const std::string> queries, std::size_t k, std::size_t workers) const {
    std::vector<std::vector<RetrievedPassage>> out(queries.size());
    workers = std::max<std::size_t>(1, std::min(workers, queries.size()));
    if (workers == 1) {
        for (std::size_t i = 0; i < queries.size(); ++i) out[i] = search(queries[i], k);
        return out;
    }
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            for (std::size_t i = w; i < queries.size(); i += workers) out[i] = search(queries[i], k);
        });
    }
    for (auto& t : pool) t.join();
    return out;
}

void Bm25Params::validate() const {
    if (!(k1 > 0.0)) throw ValidationError("BM25 k1 must be positive");
    if (!(b >= 0.0 && b <= 1.0)) throw ValidationError("BM25 b must be in [0, 1]");
}

Bm25Index Bm25Index::build(std::span<const Passage> passages, Bm25Params params) {
    params.validate();
    if (passages.empty()) throw ValidationError("cannot index zero passages");

    std::vector<const Passage*> order;
    order.reserve(passages.size());
    for (const auto& p : passages) order.push_back(&p);
    std::sort(order.begin(), order.end(),
              [](const Passage* a, const Passage* b) { return a->id < b->id; });
    for (std::size_t i = 1; i < order.size(); ++i) {
        if (order[i]->id == order[i - 1]->id) {
            throw ValidationError("duplicate passage id '" + order[i]->id + "' in index input");
        }
    }

    Bm25Index index;
    index.params_ = params;
    index.passage_ids_.reserve(order.size());
    index.doc_lengths_.reserve(order.size());

    std::unordered_map<std::string, std::uint32_t> tf;
    for (std::uint32_t doc = 0; doc < order.size(); ++doc) {
        const auto terms = tokenize(order[doc]->text);
        index.passage_ids_.push_back(order[doc]->id);
        index.doc_lengths_.push_back(static_cast<std::uint32_t>(terms.size()));
        index.total_length_ += terms.size();
        tf.clear();
        for (const auto& t : terms) ++tf[t];
        for (const auto& [term, count] : tf) index.postings_[term].push_back({doc, count});
    }
    index.avg_doc_length_ =
        static_cast<double>(index.total_length_) / static_cast<double>(index.passage_ids_.size());
    return index;
}

std::span<const Posting> Bm25Index::postings(std::string_view term) const {
    const auto it = postings_.find(std::string(term));
    if (it == postings_.end()) return {};
    return it->second;
}

std::uint32_t Bm25Index::doc_length(std::string_view passage_id) const {
    const auto it = std::lower_bound(passage_ids_.begin(), passage_ids_.end(), passage_id);
    if (it == passage_ids_.end() || *it != passage_id) {
        throw NotFoundError("passage '" + std::string(passage_id) + "' is not indexed");
    }
    return doc_lengths_[static_cast<std::size_t>(it - passage_ids_.begin())];
}

double Bm25Index::idf(std::string_view term) const {
    const double n = static_cast<double>(passage_ids_.size());
    const double df = static_cast<double>(postings(term).size());
    return std::log((n - df + 0.5) / (df + 0.5) + 1.0);
}

std::vector<RetrievedPassage> Bm25Index::search(std::string_view query, std::size_t k) const {
    auto terms = tokenize(query);
    std::sort(terms.begin(), terms.end());
    terms.erase(std::unique(terms.begin(), terms.end()), terms.end());
    if (terms.empty() || k == 0) return {};

    const std::size_t n = passage_ids_.size();
    std::vector<double> scores(n, 0.0);
    for (const auto& term : terms) {
        const auto list = postings(term);
        if (list.empty()) continue;
        const double w = idf(term);
        for (const auto& p : list) {
            const double tf = p.tf;
            const double norm =
                1.0 - params_.b + params_.b * static_cast<double>(doc_lengths_[p.doc]) / avg_doc_length_;
            scores[p.doc] += w * tf * (params_.k1 + 1.0) / (tf + params_.k1 * norm);
        }
    }

    // doc order == passage id order, so the index is the id tie-break
    std::vector<std::uint32_t> docs(n);
    std::iota(docs.begin(), docs.end(), 0U);
    const auto better = [&](std::uint32_t a, std::uint32_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return a < b;
    };
    const std::size_t top = std::min(k, n);
    std::partial_sort(docs.begin(), docs.begin() + static_cast<std::ptrdiff_t>(top), docs.end(), better);

    std::vector<RetrievedPassage> out;
    out.reserve(top);
    for (std::size_t i = 0; i < top; ++i) {
        out.push_back({passage_ids_[docs[i]], scores[docs[i]], static_cast<int>(i + 1)});
    }
    return out;
}

}  // namespace qaguard
