#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <set>
#include <string>
#include <vector>

#include "qaguard/augment.hpp"
#include "qaguard/corpus.hpp"
#include "qaguard/dataset.hpp"
#include "qaguard/evaluation.hpp"
#include "qaguard/poison.hpp"
#include "qaguard/reader.hpp"
#include "qaguard/retrieval.hpp"
#include "qaguard/strategy.hpp"
#include "qaguard/synthetic.hpp"

namespace qaguard {

enum class InferQuestion { original, augmented };

std::string_view to_string(InferQuestion q);
InferQuestion parse_infer_question(std::string_view name);

struct ProviderConfig {
    ProviderKind kind = ProviderKind::template_rules;
    std::filesystem::path cache_path;
    HttpProviderConfig http;
    bool fallback_to_template = false;  // on cache miss or provider failure
};

struct ReaderConfig {
    ReaderKind kind = ReaderKind::extractive;
    ExternalReaderConfig external;
};

struct RunConfig {
    std::filesystem::path corpus_path;
    std::filesystem::path dataset_path;
    std::filesystem::path gazetteer_path;
    std::optional<SyntheticSpec> synthetic;  // used instead of the three paths when set

    ChunkingOptions chunking;
    Bm25Params bm25;

    std::vector<int> levels{1, 2, 3, 5, 10, 20, 40, 50, 100};
    std::vector<Strategy> strategies{Strategy::original, Strategy::random, Strategy::majority_vote,
                                     Strategy::redundancy};
    std::vector<ContextSource> context_sources{ContextSource::original_c, ContextSource::new_c};
    PoisonMode poison_mode = PoisonMode::article;
    InferQuestion infer_question = InferQuestion::original;

    int k_car = 5;
    std::size_t n_augment = 10;
    std::size_t retrieve_k = 100;
    std::uint64_t seed = 0;
    std::size_t workers = 0;  // 0 = hardware concurrency

    ProviderConfig provider;
    ReaderConfig reader;

    /// Throws ConfigError.
    void validate() const;

    /// Levels actually swept: level 0 plus the configured ones, sorted and unique.
    std::vector<int> sweep_levels() const;

    /// Every (level, strategy, context source) cell the run must fill.
    std::vector<CellKey> expected_cells() const;

    /// Stable text form of every field that affects results.
    std::string canonical() const;
};

/// Corpus, dataset, gazetteer and index loaded once and shared by sweeps.
struct Workspace {
    Corpus corpus;
    std::vector<QAExample> examples;
    Gazetteer gazetteer;
    Bm25Index index;

    static Workspace load(const RunConfig& config);
    static Workspace from_synthetic(const SyntheticData& data, const ChunkingOptions& chunking,
                                    const Bm25Params& bm25);
};

struct ClampEvent {
    std::string example_id;
    int level = 0;
    int effective_level = 0;
};

struct RunMeta {
    std::uint64_t seed = 0;
    std::string config_hash;
    std::vector<ClampEvent> clamps;
    ProviderStats provider;
    std::size_t examples = 0;
    std::size_t kept_examples = 0;
    std::size_t reader_fallbacks = 0;
    std::vector<int> novelty;  // count_new_passages per augmented query, example order
};

struct SweepOutcome {
    SweepResult result;
    std::vector<ScoreRecord> records;  // example order, then level, strategy, context source
    std::set<std::string> kept;
    RunMeta meta;
};

/// The full experiment in memory: clean retrieval, augmentation (once per example),
/// poisoning at every level, reading, resolution, scoring and filtered aggregation.
/// Deterministic for a given config regardless of `workers`.
SweepOutcome run_sweep(const Workspace& workspace, const RunConfig& config);

/// results.csv, audit.jsonl, run_meta.json and plots/*.svg under `dir`. On failure
/// anything already written is removed.
void write_sweep_artifacts(const SweepOutcome& outcome, const RunConfig& config,
                           const std::filesystem::path& dir);

struct AblationPoint {
    std::size_t n_augment = 0;  // 0 is the original-question baseline
    double em = 0.0;
    double f1 = 0.0;
    std::size_t n = 0;
};

/// EM of `strategy`/`source` at one poison level as the number of augmented queries
/// grows from 1 to max_n. The first point (n_augment = 0) is strategy=original.
std::vector<AblationPoint> ablate_queries(const Workspace& workspace, RunConfig config, int level,
                                          std::size_t max_n,
                                          Strategy strategy = Strategy::redundancy,
                                          ContextSource source = ContextSource::new_c);

std::string ablation_csv(std::span<const AblationPoint> points);

}  // namespace qaguard
