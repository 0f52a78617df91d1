#include "qaguard/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>
#include <unordered_map>

#include <json.hpp>

#include "qaguard/errors.hpp"
#include "qaguard/report.hpp"
#include "qaguard/resolution.hpp"
#include "qaguard/text.hpp"

namespace qaguard {

using json = nlohmann::json;

std::string_view to_string(InferQuestion q) {
    return q == InferQuestion::original ? "original" : "augmented";
}

InferQuestion parse_infer_question(std::string_view name) {
    if (name == "original") return InferQuestion::original;
    if (name == "augmented") return InferQuestion::augmented;
    throw ConfigError("unknown --infer-question value '" + std::string(name) + "'");
}

void RunConfig::validate() const {
    if (!synthetic) {
        if (corpus_path.empty()) throw ConfigError("no corpus given");
        if (dataset_path.empty()) throw ConfigError("no dataset given");
        if (gazetteer_path.empty()) throw ConfigError("no gazetteer given");
    }
    try {
        if (synthetic) synthetic->validate();
        chunking.validate();
        bm25.validate();
    } catch (const ValidationError& e) {
        throw ConfigError(e.what());
    }
    for (const int l : levels) {
        if (l < 0) throw ConfigError("poison levels must be >= 0");
    }
    if (strategies.empty()) throw ConfigError("no strategies selected");
    if (context_sources.empty()) throw ConfigError("no context sources selected");
    if (k_car < 0) throw ConfigError("k_car must be >= 0");
    if (n_augment < 1) throw ConfigError("n_augment must be >= 1");
    if (retrieve_k < 1) throw ConfigError("retrieve_k must be >= 1");
    if (provider.kind == ProviderKind::cache && provider.cache_path.empty()) {
        throw ConfigError("cache provider needs an augmentation cache path");
    }
    if (provider.kind == ProviderKind::http && provider.http.endpoint.empty()) {
        throw ConfigError("http provider needs an endpoint (AUGMENT_ENDPOINT)");
    }
    if (reader.kind == ReaderKind::external && reader.external.endpoint.empty()) {
        throw ConfigError("external reader needs an endpoint (READER_ENDPOINT)");
    }
}

std::vector<int> RunConfig::sweep_levels() const {
    std::vector<int> out{0};
    out.insert(out.end(), levels.begin(), levels.end());
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

namespace {

// The original strategy is always computed: it is the filtering baseline and the
// reference line of every report.
std::vector<Strategy> effective_strategies(const RunConfig& config) {
    std::vector<Strategy> out{Strategy::original};
    for (const auto s : config.strategies) {
        if (std::find(out.begin(), out.end(), s) == out.end()) out.push_back(s);
    }
    return out;
}

std::vector<ContextSource> effective_sources(const RunConfig& config) {
    std::vector<ContextSource> out{ContextSource::original_c};
    for (const auto c : config.context_sources) {
        if (std::find(out.begin(), out.end(), c) == out.end()) out.push_back(c);
    }
    return out;
}

bool wants_source(const RunConfig& config, ContextSource c) {
    return std::find(config.context_sources.begin(), config.context_sources.end(), c) !=
           config.context_sources.end();
}

}  // namespace

std::vector<CellKey> RunConfig::expected_cells() const {
    std::vector<CellKey> out;
    for (const int level : sweep_levels()) {
        for (const auto s : effective_strategies(*this)) {
            for (const auto c : effective_sources(*this)) {
                if (!is_valid_cell(s, c)) continue;
                if (s != Strategy::original && !wants_source(*this, c)) continue;
                out.push_back({level, s, c});
            }
        }
    }
    return out;
}

std::string RunConfig::canonical() const {
    std::ostringstream out;
    if (synthetic) {
        out << "synthetic=" << synthetic->n_facts << ',' << synthetic->redundancy << ','
            << synthetic->n_distractor_articles << ',' << synthetic->aliases_per_answer << ','
            << synthetic->seed << '\n';
    } else {
        out << "corpus=" << corpus_path.generic_string() << '\n'
            << "dataset=" << dataset_path.generic_string() << '\n'
            << "gazetteer=" << gazetteer_path.generic_string() << '\n';
    }
    out << "chunk_size=" << chunking.chunk_size << "\nstride=" << chunking.stride << '\n';
    char buf[64];
    std::snprintf(buf, sizeof buf, "bm25=%.17g,%.17g\n", bm25.k1, bm25.b);
    out << buf;
    out << "levels=";
    for (const int l : sweep_levels()) out << l << ' ';
    out << "\nstrategies=";
    for (const auto s : effective_strategies(*this)) out << to_string(s) << ' ';
    out << "\ncontext_sources=";
    for (const auto c : context_sources) out << to_string(c) << ' ';
    out << "\npoison_mode=" << to_string(poison_mode) << "\ninfer_question=" << to_string(infer_question)
        << "\nk_car=" << k_car << "\nn_augment=" << n_augment << "\nretrieve_k=" << retrieve_k
        << "\nseed=" << seed << "\nprovider=" << to_string(provider.kind);
    if (provider.kind == ProviderKind::cache) out << ',' << provider.cache_path.generic_string();
    if (provider.kind == ProviderKind::http) {
        std::snprintf(buf, sizeof buf, ",%d,%.17g", provider.http.max_tokens, provider.http.temperature);
        out << ',' << provider.http.endpoint << buf << ',' << provider.http.prompt_template;
    }
    out << "\nprovider_fallback=" << provider.fallback_to_template << "\nreader=" << to_string(reader.kind);
    if (reader.kind == ReaderKind::external) {
        out << ',' << reader.external.endpoint << ",fallback=" << reader.external.fallback_to_extractive;
    }
    out << '\n';
    return out.str();
}

Workspace Workspace::load(const RunConfig& config) {
    if (config.synthetic) {
        return from_synthetic(generate_synthetic(*config.synthetic), config.chunking, config.bm25);
    }
    auto corpus = Corpus::load(config.corpus_path, config.chunking);
    auto examples = load_dataset(config.dataset_path);
    auto gazetteer = Gazetteer::load(config.gazetteer_path);
    auto index = Bm25Index::build(corpus.passages(), config.bm25);
    return Workspace{std::move(corpus), std::move(examples), std::move(gazetteer), std::move(index)};
}

Workspace Workspace::from_synthetic(const SyntheticData& data, const ChunkingOptions& chunking,
                                    const Bm25Params& bm25) {
    auto corpus = Corpus::from_articles(data.articles, chunking);
    auto index = Bm25Index::build(corpus.passages(), bm25);
    return Workspace{std::move(corpus), data.examples, data.gazetteer, std::move(index)};
}

namespace {

[[noreturn]] void rethrow_with_context(const std::string& where) {
    try {
        throw;
    } catch (const IncompleteGridError& e) {
        throw IncompleteGridError(where + e.what());
    } catch (const CacheMissError& e) {
        throw CacheMissError(where + e.what());
    } catch (const EmptyGenerationError& e) {
        throw EmptyGenerationError(where + e.what());
    } catch (const ProviderError& e) {
        throw ProviderError(where + e.what());
    } catch (const ReaderError& e) {
        throw ReaderError(where + e.what());
    } catch (const ConfigError& e) {
        throw ConfigError(where + e.what());
    } catch (const ParseError& e) {
        throw ParseError(where + e.what());
    } catch (const NotFoundError& e) {
        throw NotFoundError(where + e.what());
    } catch (const ValidationError& e) {
        throw ValidationError(where + e.what());
    } catch (const std::exception& e) {
        throw Error(where + e.what());
    }
}

// Normalized tokens of passage texts, keyed by content so equal texts share an entry.
// Keys point into the texts, which must outlive the cache.
class NormalizedTexts {
public:
    std::vector<const std::vector<std::string>*> of(std::span<const std::string_view> texts) {
        std::vector<const std::vector<std::string>*> out;
        out.reserve(texts.size());
        for (const auto t : texts) {
            auto it = cache_.find(t);
            if (it == cache_.end()) it = cache_.emplace(t, normalized_tokens(t)).first;
            out.push_back(&it->second);
        }
        return out;
    }

private:
    std::unordered_map<std::string_view, std::vector<std::string>> cache_;
};

struct ExampleResult {
    std::vector<ScoreRecord> records;
    std::vector<ClampEvent> clamps;
    std::vector<int> novelty;
    std::size_t reader_fallbacks = 0;
};

class SweepRunner {
public:
    SweepRunner(const Workspace& ws, const RunConfig& config)
        : ws_(ws), config_(config), strategies_(effective_strategies(config)),
          levels_(config.sweep_levels()), car_{config.k_car} {
        auto extractive = std::make_shared<ExtractiveReader>(ws.gazetteer);
        if (config.reader.kind == ReaderKind::external) {
            reader_ = std::make_shared<ExternalReader>(config.reader.external, extractive);
        } else {
            reader_ = extractive;
        }
        switch (config.provider.kind) {
        case ProviderKind::template_rules:
            provider_ = std::make_unique<TemplateProvider>(config.seed);
            break;
        case ProviderKind::cache:
            provider_ = std::make_unique<CacheProvider>(config.provider.cache_path);
            break;
        case ProviderKind::http:
            provider_ = std::make_unique<HttpProvider>(config.provider.http);
            break;
        }
        if (config.provider.fallback_to_template && config.provider.kind != ProviderKind::template_rules) {
            fallback_ = std::make_unique<TemplateProvider>(config.seed);
        }
    }

    std::vector<std::string> augment(const QAExample& ex) {
        try {
            return generate_augmentations(ex, *provider_, config_.n_augment);
        } catch (const ProviderError&) {
            if (!fallback_) throw;
        }
        return generate_augmentations(ex, *fallback_, config_.n_augment);
    }

    ExampleResult run(const QAExample& ex) {
        ExampleResult out;
        int level = -1;
        std::string_view stage = "retrieval";
        try {
            const auto ex_seed = text::derive_seed(config_.seed, ex.id);
            const auto clean = ws_.index.search(ex.question, config_.retrieve_k);

            stage = "augmentation";
            const auto queries = augment(ex);
            const auto aug = retrieve_for_set(ex.id, queries, ws_.index, config_.retrieve_k);
            for (const auto& r : aug.retrievals) out.novelty.push_back(count_new_passages(clean, r));

            stage = "poisoning";
            const auto substitute = choose_substitute(ex, ws_.gazetteer, text::derive_seed(ex_seed, "substitute"));
            const auto plan_seed = text::derive_seed(ex_seed, "plan");
            const bool want_original_c = wants_source(config_, ContextSource::original_c);
            const bool want_new_c = wants_source(config_, ContextSource::new_c);

            for (const int lv : levels_) {
                level = lv;
                stage = "poisoning";
                auto plan = build_poison_plan(ex, clean, ws_.corpus, lv, config_.poison_mode, substitute, plan_seed);
                if (plan.clamped) out.clamps.push_back({ex.id, plan.level, plan.effective_level});
                const PoisonView view(ws_.corpus, std::move(plan), ex.answers);
                const int poisoned = count_poisoned_passages(view, clean);

                stage = "reading";
                NormalizedTexts normalized;
                const auto original_texts = materialize(view, clean);
                const auto original_norm = normalized.of(original_texts);
                auto original = predict(ex.question, original_texts, original_norm, "original", out);

                std::vector<Prediction> over_original;
                std::vector<Prediction> over_new;
                for (std::size_t i = 0; i < queries.size(); ++i) {
                    const auto id = "aug" + std::to_string(i);
                    if (want_original_c) {
                        over_original.push_back(predict(queries[i], original_texts, original_norm, id, out));
                    }
                    if (want_new_c) {
                        const auto texts = materialize(view, aug.retrievals[i]);
                        const auto& q = config_.infer_question == InferQuestion::original ? ex.question : queries[i];
                        over_new.push_back(predict(q, texts, normalized.of(texts), id, out));
                    }
                }

                for (const auto strategy : strategies_) {
                    for (const auto source : {ContextSource::original_c, ContextSource::new_c}) {
                        if (!is_valid_cell(strategy, source)) continue;
                        if (strategy != Strategy::original && !wants_source(config_, source)) continue;
                        stage = to_string(strategy);
                        ResolutionInput in{original,
                                           source == ContextSource::original_c ? over_original : over_new,
                                           strategy, source,
                                           text::derive_seed(ex_seed, "resolve/" + std::to_string(lv) + "/" +
                                                                          std::string(to_string(source)))};
                        const auto res = resolve(in, car_);
                        ScoreRecord rec;
                        rec.example_id = ex.id;
                        rec.level = lv;
                        rec.strategy = strategy;
                        rec.context_source = source;
                        rec.prediction = res.answer;
                        rec.em = exact_match(res.answer, ex.answers);
                        rec.f1 = token_f1(res.answer, ex.answers);
                        rec.poisoned_passage_count = poisoned;
                        rec.used_original = res.used_original;
                        rec.confident_count = res.confident_count;
                        out.records.push_back(std::move(rec));
                    }
                }
            }
        } catch (...) {
            std::string where = "example '" + ex.id + "'";
            if (level >= 0) where += ", level " + std::to_string(level);
            where += ", " + std::string(stage) + ": ";
            rethrow_with_context(where);
        }
        return out;
    }

    ProviderStats provider_stats() const {
        auto s = provider_->stats();
        if (fallback_) {
            const auto f = fallback_->stats();
            s.requests += f.requests;
            s.short_generations += f.short_generations;
        }
        return s;
    }

private:
    static std::vector<std::string_view> materialize(const PoisonView& view,
                                                     std::span<const RetrievedPassage> retrieved) {
        std::vector<std::string_view> out;
        out.reserve(retrieved.size());
        for (const auto& r : retrieved) out.push_back(view.materialize(r.passage_id));
        return out;
    }

    Prediction predict(std::string_view question, std::span<const std::string_view> texts,
                       std::span<const std::vector<std::string>* const> normalized,
                       std::string_view context_set_id, ExampleResult& out) const {
        auto p = reader_->predict(question, texts, context_set_id);
        p.car_count = car_count(normalized_tokens(p.answer), normalized);
        if (p.fell_back) ++out.reader_fallbacks;
        return p;
    }

    const Workspace& ws_;
    const RunConfig& config_;
    std::vector<Strategy> strategies_;
    std::vector<int> levels_;
    CarConfig car_;
    std::shared_ptr<const Reader> reader_;
    std::unique_ptr<AugmentationProvider> provider_;
    std::unique_ptr<AugmentationProvider> fallback_;
};

}  // namespace

SweepOutcome run_sweep(const Workspace& workspace, const RunConfig& config) {
    config.validate();
    if (workspace.examples.empty()) throw ValidationError("dataset has no examples");
    SweepRunner runner(workspace, config);

    const auto& examples = workspace.examples;
    std::vector<ExampleResult> results(examples.size());
    std::size_t workers = config.workers == 0 ? std::thread::hardware_concurrency() : config.workers;
    workers = std::clamp<std::size_t>(workers, 1, examples.size());

    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::size_t failed_at = examples.size();
    std::mutex failure_mutex;
    const auto work = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= examples.size()) return;
            try {
                results[i] = runner.run(examples[i]);
            } catch (...) {
                // report the first failing example in input order, not in finishing order
                std::lock_guard lock(failure_mutex);
                if (i < failed_at) {
                    failed_at = i;
                    failure = std::current_exception();
                }
            }
        }
    };
    if (workers == 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    }
    if (failure) std::rethrow_exception(failure);

    SweepOutcome outcome;
    outcome.meta.seed = config.seed;
    char hash[32];
    std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(text::fnv1a(config.canonical())));
    outcome.meta.config_hash = hash;
    outcome.meta.examples = examples.size();
    for (auto& r : results) {
        outcome.records.insert(outcome.records.end(), std::make_move_iterator(r.records.begin()),
                               std::make_move_iterator(r.records.end()));
        outcome.meta.clamps.insert(outcome.meta.clamps.end(), r.clamps.begin(), r.clamps.end());
        outcome.meta.novelty.insert(outcome.meta.novelty.end(), r.novelty.begin(), r.novelty.end());
        outcome.meta.reader_fallbacks += r.reader_fallbacks;
    }
    outcome.meta.provider = runner.provider_stats();
    outcome.kept = filter_originally_correct(outcome.records);
    outcome.meta.kept_examples = outcome.kept.size();
    const auto expected = config.expected_cells();
    outcome.result = aggregate(outcome.records, outcome.kept, expected);
    return outcome;
}

namespace {

json meta_json(const RunMeta& meta, const SweepResult& result) {
    json clamps = json::array();
    for (const auto& c : meta.clamps) {
        clamps.push_back({{"example_id", c.example_id}, {"level", c.level}, {"effective_level", c.effective_level}});
    }
    auto novelty = meta.novelty;
    std::sort(novelty.begin(), novelty.end());
    json novelty_json{{"queries", novelty.size()}};
    if (!novelty.empty()) {
        novelty_json["min"] = novelty.front();
        novelty_json["median"] = novelty[novelty.size() / 2];
        novelty_json["max"] = novelty.back();
    }
    json poisoned = json::object();
    for (const auto& [key, stats] : result.cells) {
        if (key.strategy == Strategy::original) poisoned[std::to_string(key.level)] = stats.mean_poisoned_passages;
    }
    return json{
        {"seed", meta.seed},
        {"config_hash", meta.config_hash},
        {"examples", meta.examples},
        {"kept_examples", meta.kept_examples},
        {"clamp_events", clamps},
        {"provider",
         {{"requests", meta.provider.requests},
          {"retries", meta.provider.retries},
          {"failures", meta.provider.failures},
          {"cache_hits", meta.provider.cache_hits},
          {"cache_misses", meta.provider.cache_misses},
          {"short_generations", meta.provider.short_generations}}},
        {"reader_fallbacks", meta.reader_fallbacks},
        {"novelty", novelty_json},
        {"mean_poisoned_passages", poisoned},
    };
}

void write_file(const std::filesystem::path& path, std::string_view content,
                std::vector<std::filesystem::path>& written) {
    written.push_back(path);
    std::ofstream out(path, std::ios::binary);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error("cannot write " + path.string());
}

}  // namespace

void write_sweep_artifacts(const SweepOutcome& outcome, const RunConfig& config,
                           const std::filesystem::path& dir) {
    std::vector<std::filesystem::path> written;
    const bool plots_existed = std::filesystem::exists(dir / "plots");
    try {
        std::filesystem::create_directories(dir);
        const auto csv = results_csv(outcome.result);
        write_file(dir / "results.csv", csv, written);

        std::string audit;
        for (const auto& r : outcome.records) {
            audit += json{{"example_id", r.example_id},
                          {"level", r.level},
                          {"strategy", to_string(r.strategy)},
                          {"context_source", to_string(r.context_source)},
                          {"prediction", r.prediction},
                          {"em", r.em},
                          {"f1", r.f1},
                          {"poisoned_passages", r.poisoned_passage_count},
                          {"used_original", r.used_original},
                          {"confident_count", r.confident_count},
                          {"kept", outcome.kept.contains(r.example_id)}}
                         .dump();
            audit += '\n';
        }
        write_file(dir / "audit.jsonl", audit, written);

        auto meta = meta_json(outcome.meta, outcome.result);
        meta["config"] = config.canonical();
        write_file(dir / "run_meta.json", meta.dump(2) + "\n", written);

        // plot the rounded table so `report` on results.csv redraws the same charts
        for (auto& p : write_plots(parse_results_csv(csv), dir)) written.push_back(std::move(p));
    } catch (...) {
        std::error_code ec;
        for (const auto& p : written) std::filesystem::remove(p, ec);
        if (!plots_existed) std::filesystem::remove(dir / "plots", ec);
        throw;
    }
}

std::vector<AblationPoint> ablate_queries(const Workspace& workspace, RunConfig config, int level,
                                          std::size_t max_n, Strategy strategy, ContextSource source) {
    if (max_n < 1) throw ConfigError("ablation needs max_n >= 1");
    if (!is_valid_cell(strategy, source)) throw ConfigError("strategy/context source pair is not valid");
    config.levels = {level};
    config.strategies = {strategy};
    config.context_sources = {source};

    std::vector<AblationPoint> points;
    for (std::size_t n = 1; n <= max_n; ++n) {
        config.n_augment = n;
        const auto outcome = run_sweep(workspace, config);
        if (points.empty()) {
            const auto& base = outcome.result.at(level, Strategy::original, ContextSource::original_c);
            points.push_back({0, base.em, base.f1, base.n});
        }
        const auto& cell = outcome.result.at(level, strategy, source);
        points.push_back({n, cell.em, cell.f1, cell.n});
    }
    return points;
}

std::string ablation_csv(std::span<const AblationPoint> points) {
    std::string out = "n_augment,em,f1,n\n";
    char buf[96];
    for (const auto& p : points) {
        std::snprintf(buf, sizeof buf, "%zu,%.1f,%.1f,%zu\n", p.n_augment, p.em, p.f1, p.n);
        out += buf;
    }
    return out;
}

}  // namespace qaguard
