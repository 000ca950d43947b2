#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "smgrnn/envs.hpp"
#include "smgrnn/expert.hpp"
#include "smgrnn/graph.hpp"
#include "smgrnn/learner.hpp"
#include "smgrnn/spm.hpp"
#include "smgrnn/stats.hpp"

namespace smgrnn {

enum class RunMode { Smgrnn, StaticGraph, GrowthOnly, StaticMlp };

const char* to_string(RunMode mode);
RunMode parse_run_mode(const std::string& s);  // accepts "-" or "_" spelling

struct LearnerOptions {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double grad_clip = 5.0;
    bool soft_targets = false;     // use the expert distribution when it has one
    bool episode_batched = false;  // one averaged update per episode
};

struct RunConfig {
    std::string env = "cartpole";
    RunMode mode = RunMode::Smgrnn;
    std::int64_t episodes = 2000;
    int init_hidden = 0;
    double density = 0.8;
    std::uint64_t seed = 1;
    SpmConfig spm;
    LearnerOptions learner;
    int mlp_hidden = 16;          // static_mlp width
    double epsilon_greedy = 0.0;  // exploratory action noise, 0 = greedy
    int spm_stride = 1;           // consult the SPM every k-th step
    std::string expert_path;      // MLP expert JSON; empty = scripted expert
    bool dump_edge_stats = false;

    void validate() const;
    std::string to_json() const;
    static RunConfig from_json(const std::string& text);
    static RunConfig from_json_file(const std::filesystem::path& path);
};

struct TrainRecord {
    std::int64_t episode = 0;
    double episodic_return = 0.0;
    double mean_loss = 0.0;
    std::int64_t nodes = 0;
    std::int64_t edges = 0;
    std::int64_t params = 0;
    std::int64_t relay_inserts = 0;
    std::int64_t random_edges = 0;
    std::int64_t edge_prunes = 0;
    std::int64_t orphan_removals = 0;
};

struct RunSummary {
    std::string env;
    RunMode mode = RunMode::Smgrnn;
    std::uint64_t seed = 0;
    std::int64_t episodes = 0;
    int init_hidden = 0;
    double density = 0.8;
    double late_reward = 0.0;  // mean return over the final quarter
    std::optional<std::int64_t> convergence_episode;
    std::int64_t final_params = 0;
    std::int64_t final_hidden = 0;
    std::int64_t final_nodes = 0;
    std::int64_t final_edges = 0;
    std::int64_t initial_nodes = 0;
    std::int64_t initial_edges = 0;
    GrowthMetrics growth;
};

struct RunResult {
    std::vector<TrainRecord> records;
    RunSummary summary;
    std::vector<StructuralEvent> events;
    std::shared_ptr<DynamicGraph> final_graph;
    std::shared_ptr<OptimState> final_optimizer;
    std::string edge_stats_csv;  // only when dump_edge_stats is set
};

// One training run: online policy distillation against a frozen expert,
// with the structural module scheduled per step. The student acts on the
// environment; the expert only labels visited states.
class Trainer {
public:
    explicit Trainer(RunConfig cfg);

    TrainRecord run_episode();  // advances one episode
    RunResult run();            // all configured episodes

    const DynamicGraph& graph() const { return *graph_; }
    const HistoryStore& store() const { return *store_; }
    const std::vector<StructuralEvent>& events() const { return events_; }
    std::int64_t step_count() const { return step_; }
    const Env& env() const { return *env_; }

private:
    void apply_structural_events(const std::vector<StructuralEvent>& batch);
    int select_action(const std::vector<double>& logits);

    RunConfig cfg_;
    EnvSpec env_spec_;
    std::unique_ptr<Env> env_;
    std::unique_ptr<ExpertPolicy> expert_;
    std::shared_ptr<DynamicGraph> graph_;
    std::unique_ptr<HistoryStore> store_;
    std::shared_ptr<OptimState> optim_;
    std::mt19937_64 rng_spm_;
    std::mt19937_64 rng_policy_;
    std::int64_t step_ = 0;     // global, spans episodes, first step is 1
    std::int64_t episode_ = 0;  // episodes completed
    std::vector<StructuralEvent> events_;
    std::int64_t initial_nodes_ = 0;
    std::int64_t initial_edges_ = 0;
    std::vector<TrainRecord> records_;
    // reusable per-step scratch
    GradientRecord grads_;
    std::map<EdgeId, double> deltas_;
    std::map<NodeId, double> activations_;
    std::string edge_stats_csv_;
};

RunResult run_experiment(const RunConfig& cfg);

// Independent runs with seeds seed_base + 0 .. n_seeds - 1, fanned out
// over `threads` workers (each run is fully confined).
std::vector<RunResult> run_seeds(RunConfig base, int n_seeds, std::uint64_t seed_base,
                                 int threads = 1);

struct WeightHistogram {
    std::vector<double> bin_edges;       // n_bins + 1, log-spaced over |w|
    std::vector<std::int64_t> counts;    // per bin, sums to edge count
    std::vector<double> cdf;             // monotone, ends at 1
};

WeightHistogram weight_histogram(const DynamicGraph& g, int n_bins);

// Fraction of edges with |w| <= threshold.
double weight_mass_below(const DynamicGraph& g, double threshold);

// ----------------------------------------------------------------- file IO

std::string records_to_csv(const std::vector<TrainRecord>& records);
std::vector<TrainRecord> records_from_csv(const std::string& text);
std::string events_to_csv(const std::vector<StructuralEvent>& events);
std::vector<StructuralEvent> events_from_csv(const std::string& text);
std::string summary_to_json(const RunSummary& s);
RunSummary summary_from_json(const std::string& text);
std::string histogram_to_csv(const WeightHistogram& h);

// Writes records.csv, events.csv, summary.json, final_graph.json and
// weights_hist.csv into `dir` (created if needed).
void write_run_outputs(const std::filesystem::path& dir, const RunResult& result);
RunSummary read_summary_file(const std::filesystem::path& path);
std::vector<StructuralEvent> read_events_file(const std::filesystem::path& path);
std::vector<TrainRecord> read_records_file(const std::filesystem::path& path);

// -------------------------------------------------------------- aggregation

// Mean and population standard deviation of the summary metrics, grouped
// per table shape: "growth-ablation" (env x mode), "topology"
// (env x init_hidden), "difficulty" (env), "growth-only" (env x mode).
std::string aggregate_table(const std::vector<RunSummary>& summaries,
                            const std::string& table);

// Recomputes late reward and convergence episode from a records table;
// independent cross-check of the summary values.
std::pair<double, std::optional<std::int64_t>> recompute_summary_metrics(
    const std::vector<TrainRecord>& records, double reward_threshold);

}  // namespace smgrnn
