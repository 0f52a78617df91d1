// qaguard command line: synthetic data, indexing, augmentation caching, poisoning
// sweeps, reports and the query-count ablation.

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "qaguard/augment.hpp"
#include "qaguard/corpus.hpp"
#include "qaguard/errors.hpp"
#include "qaguard/evaluation.hpp"
#include "qaguard/report.hpp"
#include "qaguard/retrieval.hpp"
#include "qaguard/sweep.hpp"
#include "qaguard/synthetic.hpp"
#include "qaguard/text.hpp"

namespace fs = std::filesystem;
using namespace qaguard;

namespace {

enum ExitCode { kOk = 0, kOther = 1, kConfig = 2, kProvider = 3, kIncompleteGrid = 4 };

std::string env_or(const char* name, std::string fallback = {}) {
    const char* v = std::getenv(name);
    return v && *v ? std::string(v) : fallback;
}

void write_file(const fs::path& path, const std::string& body) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write " + path.string());
    out << body;
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

// Raw option values; converted to a RunConfig after parsing so that the config file
// and the command line go through the same validation.
struct RunOptions {
    std::string corpus;
    std::string dataset;
    std::string gazetteer;
    bool synthetic = false;
    SyntheticSpec spec;

    std::size_t chunk_size = 100;
    std::size_t stride = 100;
    double k1 = 1.2;
    double b = 0.75;

    std::vector<int> levels{1, 2, 3, 5, 10, 20, 40, 50, 100};
    std::vector<std::string> strategies{"original", "random", "majority_vote", "redundancy"};
    std::vector<std::string> sources{"original_c", "new_c"};
    std::string poison_mode = "article";
    std::string infer_question = "original";
    int k_car = 5;
    std::size_t n_augment = 10;
    std::size_t retrieve_k = 100;
    std::uint64_t seed = 0;
    std::size_t workers = 0;
    std::string split = "all";

    std::string provider = "template";
    std::string augment_cache;
    std::string augment_endpoint;
    std::string prompt_template{kDefaultPromptTemplate};
    double temperature = 0.7;
    int max_tokens = 256;
    int max_retries = 2;
    int timeout_ms = 30000;
    bool provider_fallback = false;

    std::string reader = "extractive";
    std::string reader_endpoint;
    bool reader_fallback = false;

    std::string out = "out";
};

void add_spec_options(CLI::App* cmd, SyntheticSpec& spec) {
    cmd->add_option("--n-facts", spec.n_facts, "Facts (one question each)")->capture_default_str();
    cmd->add_option("--redundancy", spec.redundancy, "Articles stating each fact")->capture_default_str();
    cmd->add_option("--distractors", spec.n_distractor_articles, "Distractor articles")->capture_default_str();
    cmd->add_option("--aliases", spec.aliases_per_answer, "Aliases per answer")->capture_default_str();
    cmd->add_option("--synth-seed", spec.seed, "Generator seed")->capture_default_str();
}

void add_input_options(CLI::App* cmd, RunOptions& o) {
    cmd->add_option("--corpus", o.corpus, "Corpus JSONL");
    cmd->add_option("--dataset", o.dataset, "Dataset JSONL");
    cmd->add_option("--gazetteer", o.gazetteer, "Gazetteer JSON");
    cmd->add_flag("--synthetic", o.synthetic, "Generate the synthetic benchmark in memory instead");
    add_spec_options(cmd, o.spec);
    cmd->add_option("--chunk-size", o.chunk_size)->capture_default_str();
    cmd->add_option("--stride", o.stride)->capture_default_str();
    cmd->add_option("--k1", o.k1)->capture_default_str();
    cmd->add_option("--b", o.b)->capture_default_str();
}

void add_provider_options(CLI::App* cmd, RunOptions& o) {
    cmd->add_option("--provider", o.provider, "Augmentation provider")
        ->check(CLI::IsMember({"template", "cache", "http"}))
        ->capture_default_str();
    cmd->add_option("--augment-cache", o.augment_cache, "Cache JSONL for --provider cache");
    cmd->add_option("--augment-endpoint", o.augment_endpoint, "Generation endpoint (env AUGMENT_ENDPOINT)");
    cmd->add_option("--prompt-template", o.prompt_template, "Prompt with a {question} slot");
    cmd->add_option("--temperature", o.temperature)->capture_default_str();
    cmd->add_option("--max-tokens", o.max_tokens)->capture_default_str();
    cmd->add_option("--max-retries", o.max_retries)->capture_default_str();
    cmd->add_option("--timeout-ms", o.timeout_ms)->capture_default_str();
    cmd->add_flag("--provider-fallback", o.provider_fallback,
                  "Use the template augmenter on a cache miss or provider failure");
    cmd->add_option("--n-augment", o.n_augment, "Augmented questions per example")->capture_default_str();
    cmd->add_option("--seed", o.seed, "Global seed")->capture_default_str();
}

void add_sweep_options(CLI::App* cmd, RunOptions& o) {
    add_input_options(cmd, o);
    add_provider_options(cmd, o);
    cmd->add_option("--levels", o.levels, "Poison levels")->delimiter(',')->capture_default_str();
    cmd->add_option("--strategy", o.strategies, "Resolution strategies")->delimiter(',')->capture_default_str();
    cmd->add_option("--context-source", o.sources, "original_c and/or new_c")->delimiter(',')->capture_default_str();
    cmd->add_option("--poison-mode", o.poison_mode)
        ->check(CLI::IsMember({"article", "random_passage", "top_passage"}))
        ->capture_default_str();
    cmd->add_option("--infer-question", o.infer_question, "Question read over new_c contexts")
        ->check(CLI::IsMember({"original", "augmented"}))
        ->capture_default_str();
    cmd->add_option("--k-car", o.k_car, "Confident when CAR > k")->capture_default_str();
    cmd->add_option("--retrieve-k", o.retrieve_k, "Passages per query")->capture_default_str();
    cmd->add_option("--workers", o.workers, "Worker threads, 0 = all cores")->capture_default_str();
    cmd->add_option("--split", o.split, "Evaluate on a deterministic half of the dataset")
        ->check(CLI::IsMember({"all", "dev", "test"}))
        ->capture_default_str();
    cmd->add_option("--reader", o.reader)
        ->check(CLI::IsMember({"extractive", "external"}))
        ->capture_default_str();
    cmd->add_option("--reader-endpoint", o.reader_endpoint, "External reader URL (env READER_ENDPOINT)");
    cmd->add_flag("--reader-fallback", o.reader_fallback, "Fall back to the extractive reader on errors");
}

// augment only needs the provider settings, so it skips the input-path checks
RunConfig to_config(const RunOptions& o, bool check = true) {
    RunConfig c;
    try {
        c.corpus_path = o.corpus;
        c.dataset_path = o.dataset;
        c.gazetteer_path = o.gazetteer;
        if (o.synthetic) c.synthetic = o.spec;
        c.chunking = {o.chunk_size, o.stride};
        c.bm25 = {o.k1, o.b};
        c.levels = o.levels;
        c.strategies.clear();
        for (const auto& s : o.strategies) c.strategies.push_back(parse_strategy(s));
        c.context_sources.clear();
        for (const auto& s : o.sources) c.context_sources.push_back(parse_context_source(s));
        c.poison_mode = parse_poison_mode(o.poison_mode);
        c.infer_question = parse_infer_question(o.infer_question);
        c.k_car = o.k_car;
        c.n_augment = o.n_augment;
        c.retrieve_k = o.retrieve_k;
        c.seed = o.seed;
        c.workers = o.workers;

        c.provider.kind = parse_provider_kind(o.provider);
        c.provider.cache_path = o.augment_cache;
        c.provider.fallback_to_template = o.provider_fallback;
        c.provider.http = HttpProviderConfig::from_env();
        if (!o.augment_endpoint.empty()) c.provider.http.endpoint = o.augment_endpoint;
        c.provider.http.prompt_template = o.prompt_template;
        c.provider.http.temperature = o.temperature;
        c.provider.http.max_tokens = o.max_tokens;
        c.provider.http.max_retries = o.max_retries;
        c.provider.http.timeout = std::chrono::milliseconds(o.timeout_ms);

        c.reader.kind = o.reader == "external" ? ReaderKind::external : ReaderKind::extractive;
        c.reader.external.endpoint =
            o.reader_endpoint.empty() ? env_or("READER_ENDPOINT") : o.reader_endpoint;
        c.reader.external.fallback_to_extractive = o.reader_fallback;
        c.reader.external.timeout = std::chrono::milliseconds(o.timeout_ms);
    } catch (const ValidationError& e) {
        throw ConfigError(e.what());
    }
    if (check) c.validate();
    return c;
}

// Half of the examples by a seeded hash of the id, so the split is stable under
// reordering and independent of dataset size.
void apply_split(Workspace& ws, const std::string& split, std::uint64_t seed) {
    if (split == "all") return;
    const bool want_dev = split == "dev";
    std::vector<QAExample> kept;
    for (auto& ex : ws.examples) {
        const bool dev = (text::derive_seed(seed, "split/" + ex.id) & 1U) == 0;
        if (dev == want_dev) kept.push_back(std::move(ex));
    }
    if (kept.empty()) throw ConfigError("split '" + split + "' selects no examples");
    ws.examples = std::move(kept);
}

std::unique_ptr<AugmentationProvider> make_provider(const RunConfig& c) {
    switch (c.provider.kind) {
    case ProviderKind::template_rules: return std::make_unique<TemplateProvider>(c.seed);
    case ProviderKind::cache:
        if (c.provider.cache_path.empty()) throw ConfigError("--provider cache needs --augment-cache");
        return std::make_unique<CacheProvider>(c.provider.cache_path);
    case ProviderKind::http: return std::make_unique<HttpProvider>(c.provider.http);
    }
    throw ConfigError("unknown provider");
}

void print_grid(const SweepResult& result) {
    std::printf("%-6s %-22s %-10s %7s %7s %5s\n", "level", "strategy", "context", "EM", "F1", "n");
    for (const auto& [key, stats] : result.cells) {
        std::printf("%-6d %-22s %-10s %7.1f %7.1f %5zu\n", key.level,
                    std::string(to_string(key.strategy)).c_str(),
                    std::string(to_string(key.context_source)).c_str(), stats.em, stats.f1, stats.n);
    }
}

int cmd_synth(const SyntheticSpec& spec, const std::string& out) {
    spec.validate();
    const auto data = generate_synthetic(spec);
    write_synthetic(data, out);
    std::printf("wrote %zu articles and %zu questions to %s\n", data.articles.size(),
                data.examples.size(), out.c_str());
    return kOk;
}

int cmd_index(const RunOptions& o, const std::vector<std::string>& queries, std::size_t top,
              const std::string& stats_out) {
    ChunkingOptions chunking{o.chunk_size, o.stride};
    std::optional<Corpus> corpus;
    if (o.synthetic) {
        corpus = Corpus::from_articles(generate_synthetic(o.spec).articles, chunking);
    } else {
        if (o.corpus.empty()) throw ConfigError("index needs --corpus or --synthetic");
        corpus = Corpus::load(o.corpus, chunking);
    }
    Bm25Params params{o.k1, o.b};
    try {
        params.validate();
    } catch (const ValidationError& e) {
        throw ConfigError(e.what());
    }
    const auto index = Bm25Index::build(corpus->passages(), params);

    nlohmann::json stats{{"articles", corpus->articles().size()},
                         {"passages", index.doc_count()},
                         {"vocabulary", index.vocabulary_size()},
                         {"avg_passage_length", index.avg_doc_length()},
                         {"chunk_size", o.chunk_size},
                         {"stride", o.stride},
                         {"k1", o.k1},
                         {"b", o.b}};
    std::printf("%s\n", stats.dump(2).c_str());
    if (!stats_out.empty()) write_file(stats_out, stats.dump(2) + "\n");

    for (const auto& q : queries) {
        std::printf("\nquery: %s\n", q.c_str());
        for (const auto& hit : index.search(q, top)) {
            std::printf("%4d  %10.4f  %s\n", hit.rank, hit.score, hit.passage_id.c_str());
        }
    }
    return kOk;
}

int cmd_augment(const RunOptions& o, const std::string& out) {
    auto config = to_config(o, false);
    if (config.n_augment < 1) throw ConfigError("--n-augment must be at least 1");
    std::vector<QAExample> examples;
    if (o.synthetic) {
        examples = generate_synthetic(o.spec).examples;
    } else {
        if (o.dataset.empty()) throw ConfigError("augment needs --dataset or --synthetic");
        examples = load_dataset(o.dataset);
    }
    auto provider = make_provider(config);
    TemplateProvider fallback(config.seed);
    std::vector<std::pair<std::string, std::vector<std::string>>> entries;
    std::size_t fell_back = 0;
    for (const auto& ex : examples) {
        std::vector<std::string> aug;
        try {
            aug = generate_augmentations(ex, *provider, config.n_augment);
        } catch (const ProviderError&) {
            if (!config.provider.fallback_to_template) throw;
            aug = generate_augmentations(ex, fallback, config.n_augment);
            ++fell_back;
        }
        entries.emplace_back(ex.id, std::move(aug));
    }
    if (fs::path(out).has_parent_path()) fs::create_directories(fs::path(out).parent_path());
    write_augmentation_cache(out, entries);
    const auto s = provider->stats();
    std::printf("cached %zu examples to %s (requests %llu, retries %llu, short %llu, fallbacks %zu)\n",
                entries.size(), out.c_str(), static_cast<unsigned long long>(s.requests),
                static_cast<unsigned long long>(s.retries),
                static_cast<unsigned long long>(s.short_generations), fell_back);
    return kOk;
}

Workspace load_workspace(const RunConfig& config, const RunOptions& o) {
    auto ws = Workspace::load(config);
    apply_split(ws, o.split, config.seed);
    return ws;
}

int cmd_run(const RunOptions& o) {
    const auto config = to_config(o);
    const auto ws = load_workspace(config, o);
    const auto outcome = run_sweep(ws, config);
    write_sweep_artifacts(outcome, config, o.out);
    print_grid(outcome.result);
    std::printf("\nkept %zu of %zu examples; clamp events %zu; artifacts in %s\n",
                outcome.meta.kept_examples, outcome.meta.examples, outcome.meta.clamps.size(),
                o.out.c_str());
    return kOk;
}

int cmd_report(const std::string& results, const std::string& out) {
    const auto parsed = parse_results_csv(read_file(results));
    if (parsed.cells.empty()) throw ParseError(results + " has no result rows");
    for (const auto& p : write_plots(parsed, out)) std::printf("%s\n", p.string().c_str());
    return kOk;
}

int cmd_ablate(const RunOptions& o, int level, std::size_t max_n, const std::string& strategy,
               const std::string& source, const std::string& out) {
    const auto config = to_config(o);
    Strategy s;
    ContextSource c;
    try {
        s = parse_strategy(strategy);
        c = parse_context_source(source);
    } catch (const ValidationError& e) {
        throw ConfigError(e.what());
    }
    if (level < 0) throw ConfigError("--level must be >= 0");
    if (max_n == 0) throw ConfigError("--max-n must be >= 1");
    const auto ws = load_workspace(config, o);
    const auto points = ablate_queries(ws, config, level, max_n, s, c);
    const auto csv = ablation_csv(points);
    std::printf("%s", csv.c_str());
    if (!out.empty()) write_file(out, csv);
    return kOk;
}

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

// A config file holds `flag = value` lines named after a subcommand's long options
// (without dashes). Each key the command line does not set is appended as if typed.
std::vector<std::string> merge_config_file(CLI::App& app, std::vector<std::string> args) {
    if (args.empty()) return args;
    CLI::App* sub = nullptr;
    try {
        sub = app.get_subcommand(args[0]);
    } catch (const CLI::OptionNotFound&) {
        return args;
    }
    std::string path;
    for (std::size_t i = 1; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
        if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
    }
    if (path.empty()) return args;

    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    const auto given = [&](const std::string& flag) {
        return std::any_of(args.begin() + 1, args.end(), [&](const std::string& a) {
            return a == flag || a.rfind(flag + "=", 0) == 0;
        });
    };
    std::vector<std::string> extra;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto t = trim(line);
        if (t.empty() || t[0] == '#' || t[0] == ';') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(path + ":" + std::to_string(line_no) + ": expected key = value");
        }
        auto key = trim(std::string_view(t).substr(0, eq));
        auto value = trim(std::string_view(t).substr(eq + 1));
        if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
            value = value.substr(1, value.size() - 2);
        }
        std::replace(key.begin(), key.end(), '_', '-');
        const std::string flag = "--" + key;
        if (key == "config") throw ConfigError(path + ": config files cannot include others");
        const CLI::Option* opt = sub->get_option_no_throw(flag);
        if (opt == nullptr) {
            throw ConfigError(path + ":" + std::to_string(line_no) + ": unknown option '" + key +
                              "' for " + sub->get_name());
        }
        if (given(flag)) continue;
        if (opt->get_expected_min() == 0) {
            if (value == "true" || value == "1" || value == "yes") extra.push_back(flag);
            else if (value != "false" && value != "0" && value != "no") {
                throw ConfigError(path + ":" + std::to_string(line_no) + ": '" + key +
                                  "' expects true or false");
            }
            continue;
        }
        extra.push_back(flag);
        extra.push_back(value);
    }
    args.insert(args.end(), extra.begin(), extra.end());
    return args;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"qaguard: retrieval poisoning sweeps with query augmentation defenses"};
    app.require_subcommand(1);

    RunOptions opts;
    std::string config_path;
    std::string out_dir = "data";
    std::string stats_out;
    std::vector<std::string> queries;
    std::size_t top = 10;
    std::string results_path;
    std::string report_out = ".";
    int ablate_level = 1;
    std::size_t max_n = 10;
    std::string ablate_strategy = "redundancy";
    std::string ablate_source = "new_c";
    std::string ablate_out;
    std::string augment_out = "augmentations.jsonl";

    auto* synth = app.add_subcommand("synth", "Write the synthetic corpus, dataset and gazetteer");
    add_spec_options(synth, opts.spec);
    synth->add_option("--out", out_dir, "Output directory")->capture_default_str();
    synth->add_option("--config", config_path, "key = value file with option defaults");

    auto* index = app.add_subcommand("index", "Build the BM25 index, print stats and optional searches");
    add_input_options(index, opts);
    index->add_option("--query", queries, "Query to run against the index (repeatable)");
    index->add_option("--top", top, "Results per query")->capture_default_str();
    index->add_option("--stats-out", stats_out, "Write index stats JSON here");
    index->add_option("--config", config_path, "key = value file with option defaults");

    auto* augment = app.add_subcommand("augment", "Pre-generate augmented questions into a cache file");
    add_input_options(augment, opts);
    add_provider_options(augment, opts);
    augment->add_option("--out", augment_out, "Cache JSONL to write")->capture_default_str();
    augment->add_option("--config", config_path, "key = value file with option defaults");

    auto* run = app.add_subcommand("run", "Full poisoning sweep with artifacts");
    add_sweep_options(run, opts);
    run->add_option("--out", opts.out, "Artifact directory")->capture_default_str();
    run->add_option("--config", config_path, "key = value file with option defaults");

    auto* report = app.add_subcommand("report", "Render EM charts from a results.csv");
    report->add_option("--results", results_path, "results.csv")->required();
    report->add_option("--out", report_out, "Directory that receives plots/")->capture_default_str();
    report->add_option("--config", config_path, "key = value file with option defaults");

    auto* ablate = app.add_subcommand("ablate-queries", "EM as the number of augmented questions grows");
    add_sweep_options(ablate, opts);
    ablate->add_option("--level", ablate_level, "Poison level")->capture_default_str();
    ablate->add_option("--max-n", max_n, "Largest augmented-question count")->capture_default_str();
    ablate->add_option("--ablate-strategy", ablate_strategy)->capture_default_str();
    ablate->add_option("--ablate-source", ablate_source)->capture_default_str();
    ablate->add_option("--out", ablate_out, "Write ablation CSV here");
    ablate->add_option("--config", config_path, "key = value file with option defaults");

    std::vector<std::string> args(argv + 1, argv + argc);
    try {
        args = merge_config_file(app, std::move(args));
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kConfig;
    }
    std::reverse(args.begin(), args.end());

    try {
        app.parse(args);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kConfig;
    }

    try {
        if (*synth) return cmd_synth(opts.spec, out_dir);
        if (*index) return cmd_index(opts, queries, top, stats_out);
        if (*augment) return cmd_augment(opts, augment_out);
        if (*run) return cmd_run(opts);
        if (*report) return cmd_report(results_path, report_out);
        if (*ablate) return cmd_ablate(opts, ablate_level, max_n, ablate_strategy, ablate_source, ablate_out);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kConfig;
    } catch (const ProviderError& e) {
        std::fprintf(stderr, "provider error: %s\n", e.what());
        return kProvider;
    } catch (const ReaderError& e) {
        std::fprintf(stderr, "reader error: %s\n", e.what());
        return kProvider;
    } catch (const IncompleteGridError& e) {
        std::fprintf(stderr, "incomplete grid: %s\n", e.what());
        return kIncompleteGrid;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kOther;
    }
    return kOther;
}
