#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>

#include <json.hpp>

#include "qaguard/errors.hpp"
#include "qaguard/report.hpp"
#include "qaguard/sweep.hpp"
#include "qaguard/synthetic.hpp"
#include "support/oracles.hpp"

using namespace qaguard;
namespace fs = std::filesystem;

namespace {

SyntheticSpec small_spec(int redundancy = 5) {
    SyntheticSpec s;
    s.n_facts = 12;
    s.redundancy = redundancy;
    s.n_distractor_articles = 40;
    s.seed = 3;
    return s;
}

RunConfig small_config(int redundancy = 5) {
    RunConfig c;
    c.synthetic = small_spec(redundancy);
    c.levels = {1, 2, 3};
    c.seed = 11;
    c.workers = 2;
    return c;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream b;
    b << in.rdbuf();
    return b.str();
}

fs::path fresh_dir(const std::string& name) {
    const auto d = fs::temp_directory_path() / "qaguard_sweep_test" / name;
    fs::remove_all(d);
    return d;
}

}  // namespace

TEST(Synthetic, AnswerStatedInExactlyRArticles) {
    for (const int r : {1, 3, 5}) {
        const auto data = generate_synthetic(small_spec(r));
        ASSERT_EQ(data.examples.size(), 12u);
        for (const auto& ex : data.examples) {
            std::set<std::string> stating;
            for (const auto& a : data.articles) {
                if (oracle::mentions(a.text, ex.answers)) stating.insert(a.id);
            }
            EXPECT_EQ(stating.size(), static_cast<std::size_t>(r)) << ex.id;
            EXPECT_GE(ex.answers.size(), 1u);
            EXPECT_LE(ex.answers.size(), 2u);
        }
    }
}

TEST(Synthetic, GazetteerOffersEnoughSubstitutes) {
    const auto data = generate_synthetic(small_spec());
    for (const auto& ex : data.examples) {
        int eligible = 0;
        for (const auto& c : data.gazetteer.candidates(ex.entity_type)) {
            if (!oracle::mentions(c, ex.answers) && oracle::em(c, ex.answers) == 0) ++eligible;
        }
        EXPECT_GE(eligible, 5) << ex.id;
    }
}

TEST(Synthetic, ByteIdenticalForSameSeed) {
    const auto a = fresh_dir("synth_a");
    const auto b = fresh_dir("synth_b");
    write_synthetic(generate_synthetic(small_spec()), a);
    write_synthetic(generate_synthetic(small_spec()), b);
    for (const char* f : {"corpus.jsonl", "dataset.jsonl", "gazetteer.json"}) {
        EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
    }
    auto other = small_spec();
    other.seed = 4;
    write_synthetic(generate_synthetic(other), b);
    EXPECT_NE(slurp(a / "corpus.jsonl"), slurp(b / "corpus.jsonl"));
}

TEST(Synthetic, RejectsBadSpec) {
    auto s = small_spec();
    s.redundancy = 0;
    EXPECT_THROW(s.validate(), ValidationError);
    s = small_spec();
    s.aliases_per_answer = 3;
    EXPECT_THROW(s.validate(), ValidationError);
}

TEST(Config, LevelsAndCells) {
    auto c = small_config();
    c.levels = {3, 1, 1};
    EXPECT_EQ(c.sweep_levels(), (std::vector<int>{0, 1, 3}));
    c.strategies = {Strategy::redundancy};
    c.context_sources = {ContextSource::new_c};
    const auto cells = c.expected_cells();
    // original/original_c at every level plus redundancy/new_c
    EXPECT_EQ(cells.size(), 6u);
    c.levels = {-1};
    EXPECT_THROW(c.validate(), ConfigError);
    c = small_config();
    c.k_car = -2;
    EXPECT_THROW(c.validate(), ConfigError);
    c = small_config();
    c.n_augment = 0;
    EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Sweep, LevelZeroIdentityAndDecline) {
    const auto config = small_config();
    const auto ws = Workspace::load(config);
    const auto out = run_sweep(ws, config);
    for (const auto s : config.strategies) {
        for (const auto c : config.context_sources) {
            if (!is_valid_cell(s, c)) continue;
            EXPECT_DOUBLE_EQ(out.result.at(0, s, c).em, 100.0) << to_string(s) << "/" << to_string(c);
        }
    }
    double prev = 100.0;
    for (const int l : config.sweep_levels()) {
        const double em = out.result.at(l, Strategy::original, ContextSource::original_c).em;
        EXPECT_LE(em, prev);
        prev = em;
    }
    EXPECT_EQ(out.meta.examples, 12u);
    EXPECT_EQ(out.meta.kept_examples, out.kept.size());
    EXPECT_EQ(out.meta.novelty.size(), 12u * config.n_augment);
}

TEST(Sweep, WorkerCountDoesNotChangeResults) {
    auto one = small_config();
    one.workers = 1;
    auto four = small_config();
    four.workers = 4;
    const auto ws = Workspace::load(one);
    const auto a = run_sweep(ws, one);
    const auto b = run_sweep(ws, four);
    EXPECT_EQ(results_csv(a.result), results_csv(b.result));
    ASSERT_EQ(a.records.size(), b.records.size());
    for (std::size_t i = 0; i < a.records.size(); ++i) {
        EXPECT_EQ(a.records[i].prediction, b.records[i].prediction);
        EXPECT_EQ(a.records[i].example_id, b.records[i].example_id);
    }
}

TEST(Sweep, RecordsMatchScoring) {
    const auto config = small_config();
    const auto ws = Workspace::load(config);
    const auto out = run_sweep(ws, config);
    std::map<std::string, const QAExample*> by_id;
    for (const auto& ex : ws.examples) by_id[ex.id] = &ex;
    for (const auto& r : out.records) {
        EXPECT_EQ(r.em, oracle::em(r.prediction, by_id.at(r.example_id)->answers));
        if (r.level == 0) EXPECT_EQ(r.poisoned_passage_count, 0);
    }
}

TEST(Sweep, RedundancyHelpsOnlyWithRedundantSources) {
    auto five = small_config(5);
    auto single = small_config(1);
    const auto a = run_sweep(Workspace::load(five), five);
    const auto b = run_sweep(Workspace::load(single), single);
    for (const int l : {1, 2, 3}) {
        const double r5 = a.result.at(l, Strategy::redundancy, ContextSource::new_c).em;
        const double r1 = b.result.at(l, Strategy::redundancy, ContextSource::new_c).em;
        EXPECT_LE(r1, r5);
        EXPECT_GE(r5, a.result.at(l, Strategy::original, ContextSource::original_c).em);
    }
}

TEST(Sweep, ArtifactsWritten) {
    const auto config = small_config();
    const auto ws = Workspace::load(config);
    const auto out = run_sweep(ws, config);
    const auto dir = fresh_dir("artifacts");
    write_sweep_artifacts(out, config, dir);
    for (const char* f : {"results.csv", "audit.jsonl", "run_meta.json", "plots/em_new_c.svg", "plots/em_original_c.svg"}) {
        EXPECT_TRUE(fs::exists(dir / f)) << f;
    }
    EXPECT_EQ(slurp(dir / "results.csv"), results_csv(out.result));
    const auto meta = nlohmann::json::parse(slurp(dir / "run_meta.json"));
    EXPECT_EQ(meta["seed"].get<std::uint64_t>(), 11u);
    EXPECT_EQ(meta["config_hash"].get<std::string>().size(), 16u);
    EXPECT_TRUE(meta.contains("clamp_events"));
    EXPECT_TRUE(meta.contains("provider"));

    std::ifstream audit(dir / "audit.jsonl");
    std::string line;
    std::size_t lines = 0;
    while (std::getline(audit, line)) {
        const auto j = nlohmann::json::parse(line);
        EXPECT_TRUE(j.contains("example_id"));
        EXPECT_TRUE(j.contains("kept"));
        ++lines;
    }
    EXPECT_EQ(lines, out.records.size());
}

TEST(Sweep, ClampsAreRecordedNotFatal) {
    auto config = small_config();
    config.levels = {1, 500};
    const auto ws = Workspace::load(config);
    const auto out = run_sweep(ws, config);
    EXPECT_FALSE(out.meta.clamps.empty());
    for (const auto& c : out.meta.clamps) {
        EXPECT_EQ(c.level, 500);
        EXPECT_LT(c.effective_level, 500);
    }
}

TEST(Sweep, FailureNamesExampleAndStage) {
    auto config = small_config();
    config.provider.kind = ProviderKind::cache;
    config.provider.cache_path = fresh_dir("cache").string() + ".jsonl";
    std::ofstream(config.provider.cache_path) << "{\"id\":\"q000\",\"augmented\":[\"Where exactly?\"]}\n";
    const auto ws = Workspace::load(config);
    try {
        run_sweep(ws, config);
        FAIL();
    } catch (const CacheMissError& e) {
        EXPECT_NE(std::string(e.what()).find("example 'q001'"), std::string::npos) << e.what();
    }
    config.provider.fallback_to_template = true;
    EXPECT_NO_THROW(run_sweep(ws, config));
}

TEST(Sweep, PassageModesRun) {
    for (const auto mode : {PoisonMode::top_passage, PoisonMode::random_passage}) {
        auto config = small_config();
        config.poison_mode = mode;
        config.levels = {10, 50, 100};
        const auto out = run_sweep(Workspace::load(config), config);
        EXPECT_DOUBLE_EQ(out.result.at(0, Strategy::original, ContextSource::original_c).em, 100.0);
        EXPECT_LE(out.result.at(100, Strategy::original, ContextSource::original_c).em,
                  out.result.at(10, Strategy::original, ContextSource::original_c).em);
    }
}

TEST(Sweep, InferAugmentedQuestionRuns) {
    auto config = small_config();
    config.infer_question = InferQuestion::augmented;
    const auto out = run_sweep(Workspace::load(config), config);
    EXPECT_DOUBLE_EQ(out.result.at(0, Strategy::original, ContextSource::original_c).em, 100.0);
    EXPECT_NE(config.canonical(), small_config().canonical());
}

TEST(Ablation, StartsAtOriginalBaseline) {
    const auto config = small_config();
    const auto ws = Workspace::load(config);
    const auto points = ablate_queries(ws, config, 1, 3);
    ASSERT_EQ(points.size(), 4u);
    EXPECT_EQ(points[0].n_augment, 0u);
    EXPECT_EQ(points[3].n_augment, 3u);
    EXPECT_EQ(ablation_csv(points).substr(0, 18), "n_augment,em,f1,n\n");
}

TEST(Report, OnePolylinePerStrategyAndDeterministic) {
    SweepResult r;
    const std::vector<int> levels{0, 1, 2, 3, 5, 10, 20, 40, 50, 100};
    for (const int l : levels) {
        r.cells[{l, Strategy::original, ContextSource::original_c}] = {100.0 - l, 0, 5, 0};
        for (const auto s : {Strategy::random, Strategy::majority_vote, Strategy::redundancy}) {
            r.cells[{l, s, ContextSource::new_c}] = {50.0, 0, 5, 0};
        }
    }
    const auto chart = em_chart(r, ContextSource::new_c);
    ASSERT_EQ(chart.series.size(), 4u);
    for (const auto& s : chart.series) EXPECT_EQ(s.values.size(), levels.size());
    const auto svg = render_svg(chart);
    EXPECT_EQ(svg, render_svg(em_chart(r, ContextSource::new_c)));
    const std::regex poly("<polyline");
    EXPECT_EQ(std::distance(std::sregex_iterator(svg.begin(), svg.end(), poly), std::sregex_iterator()), 4);
    EXPECT_NE(svg.find("new_c"), std::string::npos);
}

TEST(Report, RejectsEmptyInput) {
    LineChart chart;
    chart.x_ticks = {"0"};
    EXPECT_THROW(render_svg(chart), ValidationError);
    chart.series = {{"s", {1.0, 2.0}}};
    EXPECT_THROW(render_svg(chart), ValidationError);
    EXPECT_THROW(write_plots(SweepResult{}, fresh_dir("plots_empty")), ValidationError);
}

TEST(Report, EscapesText) {
    LineChart chart;
    chart.title = "a < b & \"c\"";
    chart.x_ticks = {"0"};
    chart.series = {{"s<1>", {5.0}}};
    const auto svg = render_svg(chart);
    EXPECT_NE(svg.find("a &lt; b &amp; &quot;c&quot;"), std::string::npos) << svg;
    EXPECT_EQ(svg.find("s<1>"), std::string::npos);
}
