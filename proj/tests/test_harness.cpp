#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "smgrnn/harness.hpp"

using namespace smgrnn;

namespace {

RunConfig quick_xor(RunMode mode, std::uint64_t seed, std::int64_t episodes) {
    RunConfig cfg;
    cfg.env = "xor";
    cfg.mode = mode;
    cfg.episodes = episodes;
    cfg.seed = seed;
    return cfg;
}

std::filesystem::path temp_dir(const std::string& tag) {
    auto dir = std::filesystem::temp_directory_path() / ("smgrnn_test_" + tag);
    std::filesystem::remove_all(dir);
    return dir;
}

}  // namespace

TEST_CASE("config: JSON round-trip mirrors every field") {
    RunConfig cfg;
    cfg.env = "acrobot";
    cfg.mode = RunMode::GrowthOnly;
    cfg.episodes = 123;
    cfg.init_hidden = 5;
    cfg.density = 0.6;
    cfg.seed = 99;
    cfg.spm.p_rand = 0.5;
    cfg.spm.max_growth_per_step = 2;
    cfg.learner.lr = 0.01;
    cfg.learner.soft_targets = true;
    cfg.epsilon_greedy = 0.05;
    cfg.spm_stride = 3;
    RunConfig back = RunConfig::from_json(cfg.to_json());
    CHECK(back.env == cfg.env);
    CHECK(back.mode == cfg.mode);
    CHECK(back.episodes == cfg.episodes);
    CHECK(back.init_hidden == cfg.init_hidden);
    CHECK(back.density == cfg.density);
    CHECK(back.seed == cfg.seed);
    CHECK(back.spm.p_rand == cfg.spm.p_rand);
    CHECK(back.spm.max_growth_per_step == cfg.spm.max_growth_per_step);
    CHECK(back.learner.lr == cfg.learner.lr);
    CHECK(back.learner.soft_targets == cfg.learner.soft_targets);
    CHECK(back.epsilon_greedy == cfg.epsilon_greedy);
    CHECK(back.spm_stride == cfg.spm_stride);
    // partial documents keep defaults elsewhere
    RunConfig partial = RunConfig::from_json(R"({"env": "xor"})");
    CHECK(partial.env == "xor");
    CHECK(partial.episodes == 2000);
    CHECK(partial.density == 0.8);
    // mode names accept both separators
    CHECK(parse_run_mode("static-graph") == RunMode::StaticGraph);
    CHECK(parse_run_mode("static_mlp") == RunMode::StaticMlp);
}

TEST_CASE("static_graph: no structural events, constant parameter count") {
    RunResult r = run_experiment(quick_xor(RunMode::StaticGraph, 3, 40));
    CHECK(r.events.empty());
    for (const TrainRecord& rec : r.records) {
        CHECK(rec.params == r.records.front().params);
        CHECK(rec.relay_inserts == 0);
        CHECK(rec.random_edges == 0);
        CHECK(rec.edge_prunes == 0);
        CHECK(rec.orphan_removals == 0);
    }
    CHECK(r.summary.growth == GrowthMetrics{0, 0});
}

TEST_CASE("growth_only: no pruning events, node count never decreases") {
    RunConfig cfg = quick_xor(RunMode::GrowthOnly, 5, 150);
    RunResult r = run_experiment(cfg);
    for (const StructuralEvent& ev : r.events) {
        CHECK(ev.kind != EventKind::EdgePrune);
        CHECK(ev.kind != EventKind::OrphanRemove);
    }
    std::int64_t prev = 0;
    for (const TrainRecord& rec : r.records) {
        CHECK(rec.nodes >= prev);
        prev = rec.nodes;
    }
}

TEST_CASE("smgrnn smoke: cartpole returns are positive and logs are consistent") {
    RunConfig cfg;
    cfg.env = "cartpole";
    cfg.episodes = 50;
    cfg.seed = 11;
    RunResult r = run_experiment(cfg);
    REQUIRE(r.records.size() == 50);
    for (const TrainRecord& rec : r.records) CHECK(rec.episodic_return > 0.0);
    // replay identity (run() already enforces it; verify independently)
    GrowthMetrics m = net_growth(r.events);
    CHECK(r.summary.initial_nodes + m.growth_nodes == r.summary.final_nodes);
    CHECK(r.summary.initial_edges + m.growth_edges == r.summary.final_edges);
    CHECK(r.summary.final_params ==
          r.summary.final_edges + (r.summary.final_nodes -
                                   static_cast<std::int64_t>(r.final_graph->input_ids().size())));
}

TEST_CASE("records: episode numbering and summary metrics recomputation") {
    RunResult r = run_experiment(quick_xor(RunMode::Smgrnn, 7, 80));
    CHECK(r.records.front().episode == 1);
    CHECK(r.records.back().episode == 80);
    auto [late, conv] = recompute_summary_metrics(r.records, 4.0);
    CHECK(late == doctest::Approx(r.summary.late_reward));
    CHECK(conv == r.summary.convergence_episode);
}

TEST_CASE("recompute_summary_metrics: last-quarter mean and first crossing") {
    std::vector<TrainRecord> records;
    for (int i = 1; i <= 8; ++i) {
        TrainRecord rec;
        rec.episode = i;
        rec.episodic_return = static_cast<double>(i);
        records.push_back(rec);
    }
    auto [late, conv] = recompute_summary_metrics(records, 6.0);
    CHECK(late == doctest::Approx((7.0 + 8.0) / 2.0));  // ceil(8/4) = 2 episodes
    REQUIRE(conv.has_value());
    CHECK(*conv == 6);
    auto [late2, conv2] = recompute_summary_metrics(records, 100.0);
    CHECK_FALSE(conv2.has_value());
}

TEST_CASE("determinism: identical config and seed give byte-identical outputs") {
    RunConfig cfg;
    cfg.env = "cartpole";
    cfg.episodes = 25;
    cfg.seed = 21;
    RunResult a = run_experiment(cfg);
    RunResult b = run_experiment(cfg);
    CHECK(records_to_csv(a.records) == records_to_csv(b.records));
    CHECK(events_to_csv(a.events) == events_to_csv(b.events));
    CHECK(summary_to_json(a.summary) == summary_to_json(b.summary));

    RunConfig other = cfg;
    other.seed = 22;
    RunResult c = run_experiment(other);
    CHECK(records_to_csv(a.records) != records_to_csv(c.records));
}

TEST_CASE("outputs: files are written and parse back losslessly") {
    RunConfig cfg = quick_xor(RunMode::Smgrnn, 13, 60);
    cfg.dump_edge_stats = true;
    RunResult r = run_experiment(cfg);
    auto dir = temp_dir("outputs");
    write_run_outputs(dir, r);
    for (const char* name : {"records.csv", "events.csv", "summary.json",
                             "final_graph.json", "weights_hist.csv"})
        CHECK(std::filesystem::exists(dir / name));

    auto records = read_records_file(dir / "records.csv");
    CHECK(records_to_csv(records) == records_to_csv(r.records));
    auto events = read_events_file(dir / "events.csv");
    CHECK(events_to_csv(events) == events_to_csv(r.events));
    RunSummary s = read_summary_file(dir / "summary.json");
    CHECK(summary_to_json(s) == summary_to_json(r.summary));
    if (!r.edge_stats_csv.empty()) CHECK(std::filesystem::exists(dir / "edge_stats.csv"));
    std::filesystem::remove_all(dir);
}

TEST_CASE("run_seeds: parallel fan-out equals sequential runs") {
    RunConfig base = quick_xor(RunMode::Smgrnn, 0, 30);
    auto par = run_seeds(base, 4, 100, 2);
    for (int i = 0; i < 4; ++i) {
        RunConfig cfg = base;
        cfg.seed = 100 + static_cast<std::uint64_t>(i);
        RunResult seq = run_experiment(cfg);
        CHECK(records_to_csv(par[i].records) == records_to_csv(seq.records));
        CHECK(events_to_csv(par[i].events) == events_to_csv(seq.events));
    }
}

TEST_CASE("static_mlp: dense layer arithmetic and a linear special case") {
    RunConfig cfg;
    cfg.env = "cartpole";
    cfg.mode = RunMode::StaticMlp;
    cfg.mlp_hidden = 16;
    cfg.episodes = 1;
    cfg.seed = 5;
    RunResult r = run_experiment(cfg);
    CHECK(r.summary.final_params == 4 * 16 + 16 + 16 * 2 + 2);
    CHECK(r.events.empty());

    cfg.mlp_hidden = 0;  // direct input->output linear policy
    RunResult lin = run_experiment(cfg);
    CHECK(lin.summary.final_params == 4 * 2 + 2);
    CHECK(lin.summary.final_hidden == 0);
}

TEST_CASE("xor end-to-end: smgrnn reaches perfect accuracy") {
    RunConfig cfg = quick_xor(RunMode::Smgrnn, 1, 2000);
    RunResult r = run_experiment(cfg);
    CHECK(r.records.back().episodic_return == doctest::Approx(4.0));
    CHECK(r.summary.late_reward >= 3.5);
    CHECK(r.summary.final_hidden >= 1);  // XOR is not linearly separable
    CHECK(r.summary.convergence_episode.has_value());
}

TEST_CASE("static mlp end-to-end: cartpole distillation works") {
    RunConfig cfg;
    cfg.env = "cartpole";
    cfg.mode = RunMode::StaticMlp;
    cfg.mlp_hidden = 16;
    cfg.episodes = 2000;
    cfg.seed = 3;
    RunResult r = run_experiment(cfg);
    CHECK(r.summary.late_reward >= 450.0);
}

TEST_CASE("aggregate: population statistics and table shapes") {
    std::vector<RunSummary> summaries;
    for (double v : {1.0, 2.0, 3.0}) {
        RunSummary s;
        s.env = "cartpole";
        s.mode = RunMode::Smgrnn;
        s.late_reward = v;
        s.convergence_episode = 10;
        s.final_hidden = 4;
        summaries.push_back(s);
    }
    std::string table = aggregate_table(summaries, "growth-ablation");
    // mean 2, population std sqrt(2/3)
    CHECK(table.find("cartpole,smgrnn,3,2,") != std::string::npos);
    double expected_std = std::sqrt(2.0 / 3.0);
    CHECK(table.find(std::to_string(expected_std).substr(0, 6)) != std::string::npos);

    RunSummary single;
    single.env = "xor";
    single.mode = RunMode::Smgrnn;
    single.late_reward = 4.0;
    std::string one = aggregate_table({single}, "difficulty");
    CHECK(one.find("xor,1,") != std::string::npos);

    CHECK_THROWS_AS(aggregate_table(summaries, "nonsense"), std::invalid_argument);
}

TEST_CASE("weight_histogram: counts cover every edge, cdf ends at one") {
    std::mt19937_64 rng(31);
    DynamicGraph g(3, 2, 4, 0.9, rng);
    WeightHistogram h = weight_histogram(g, 12);
    std::int64_t total = 0;
    for (auto c : h.counts) total += c;
    CHECK(total == static_cast<std::int64_t>(g.edge_count()));
    CHECK(h.cdf.back() == 1.0);
    for (std::size_t i = 1; i < h.cdf.size(); ++i) CHECK(h.cdf[i] >= h.cdf[i - 1]);

    // all-equal weights: a single occupied bin with a unit step
    for (const auto& [id, e] : g.edges()) g.set_weight(id, 0.25);
    WeightHistogram flat = weight_histogram(g, 12);
    CHECK(flat.counts.size() == 1);
    CHECK(flat.counts[0] == static_cast<std::int64_t>(g.edge_count()));
    CHECK(flat.cdf == std::vector<double>{1.0});
}

TEST_CASE("epsilon-greedy option changes visited states deterministically") {
    RunConfig cfg = quick_xor(RunMode::StaticGraph, 17, 10);
    cfg.epsilon_greedy = 0.5;
    RunResult a = run_experiment(cfg);
    RunResult b = run_experiment(cfg);
    CHECK(records_to_csv(a.records) == records_to_csv(b.records));
}

TEST_CASE("episode-batched updates run end to end") {
    RunConfig cfg = quick_xor(RunMode::Smgrnn, 19, 50);
    cfg.learner.episode_batched = true;
    RunResult r = run_experiment(cfg);
    CHECK(r.records.size() == 50);
}
