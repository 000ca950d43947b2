#include "smgrnn/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <tuple>

#include <json.hpp>

#include "smgrnn/checkpoint.hpp"
#include "smgrnn/random.hpp"

namespace smgrnn {

namespace {

// RNG stream tags: one base seed per run, fixed offsets per consumer.
constexpr std::uint64_t kStreamInit = 1;
constexpr std::uint64_t kStreamSpm = 2;
constexpr std::uint64_t kStreamPolicy = 3;
constexpr std::uint64_t kStreamEnv = 4;

std::string fmt_double(double v) {
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc()) throw std::runtime_error("double formatting failed");
    return std::string(buf, p);
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    fields.push_back(cur);
    return fields;
}

double parse_double(const std::string& s) {
    return std::stod(s);
}

std::int64_t parse_int(const std::string& s) {
    return std::stoll(s);
}

}  // namespace

const char* to_string(RunMode mode) {
    switch (mode) {
        case RunMode::Smgrnn: return "smgrnn";
        case RunMode::StaticGraph: return "static_graph";
        case RunMode::GrowthOnly: return "growth_only";
        case RunMode::StaticMlp: return "static_mlp";
    }
    return "smgrnn";
}

RunMode parse_run_mode(const std::string& s) {
    std::string norm = s;
    std::replace(norm.begin(), norm.end(), '-', '_');
    if (norm == "smgrnn") return RunMode::Smgrnn;
    if (norm == "static_graph") return RunMode::StaticGraph;
    if (norm == "growth_only") return RunMode::GrowthOnly;
    if (norm == "static_mlp") return RunMode::StaticMlp;
    throw std::invalid_argument("unknown run mode: " + s);
}

void RunConfig::validate() const {
    if (episodes < 1) throw std::invalid_argument("episodes must be >= 1");
    if (init_hidden < 0) throw std::invalid_argument("init_hidden must be >= 0");
    if (!(density >= 0.0 && density <= 1.0))
        throw std::invalid_argument("density must lie in [0, 1]");
    if (mlp_hidden < 0) throw std::invalid_argument("mlp_hidden must be >= 0");
    if (!(epsilon_greedy >= 0.0 && epsilon_greedy <= 1.0))
        throw std::invalid_argument("epsilon_greedy must lie in [0, 1]");
    if (spm_stride < 1) throw std::invalid_argument("spm_stride must be >= 1");
    spm.validate();
}

std::string RunConfig::to_json() const {
    nlohmann::json j;
    j["env"] = env;
    j["mode"] = to_string(mode);
    j["episodes"] = episodes;
    j["init_hidden"] = init_hidden;
    j["density"] = density;
    j["seed"] = seed;
    j["mlp_hidden"] = mlp_hidden;
    j["epsilon_greedy"] = epsilon_greedy;
    j["spm_stride"] = spm_stride;
    j["expert_path"] = expert_path;
    j["dump_edge_stats"] = dump_edge_stats;
    j["spm"] = {{"window_len", spm.window_len},
                {"p_rand", spm.p_rand},
                {"rho_rand", spm.rho_rand},
                {"eta_prune", spm.eta_prune},
                {"prune_period", spm.prune_period},
                {"tau_w", spm.tau_w},
                {"tau_delta", spm.tau_delta},
                {"lambda_edge", spm.lambda_edge},
                {"w_init", spm.w_init},
                {"max_growth_per_step", spm.max_growth_per_step},
                {"min_samples", spm.min_samples},
                {"force_random_growth", spm.force_random_growth}};
    j["learner"] = {{"lr", learner.lr},
                    {"beta1", learner.beta1},
                    {"beta2", learner.beta2},
                    {"eps", learner.eps},
                    {"grad_clip", learner.grad_clip},
                    {"soft_targets", learner.soft_targets},
                    {"episode_batched", learner.episode_batched}};
    return j.dump(2);
}

RunConfig RunConfig::from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    RunConfig cfg;
    cfg.env = j.value("env", cfg.env);
    if (j.contains("mode")) cfg.mode = parse_run_mode(j.at("mode").get<std::string>());
    cfg.episodes = j.value("episodes", cfg.episodes);
    cfg.init_hidden = j.value("init_hidden", cfg.init_hidden);
    cfg.density = j.value("density", cfg.density);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.mlp_hidden = j.value("mlp_hidden", cfg.mlp_hidden);
    cfg.epsilon_greedy = j.value("epsilon_greedy", cfg.epsilon_greedy);
    cfg.spm_stride = j.value("spm_stride", cfg.spm_stride);
    cfg.expert_path = j.value("expert_path", cfg.expert_path);
    cfg.dump_edge_stats = j.value("dump_edge_stats", cfg.dump_edge_stats);
    if (j.contains("spm")) {
        const auto& s = j.at("spm");
        cfg.spm.window_len = s.value("window_len", cfg.spm.window_len);
        cfg.spm.p_rand = s.value("p_rand", cfg.spm.p_rand);
        cfg.spm.rho_rand = s.value("rho_rand", cfg.spm.rho_rand);
        cfg.spm.eta_prune = s.value("eta_prune", cfg.spm.eta_prune);
        cfg.spm.prune_period = s.value("prune_period", cfg.spm.prune_period);
        cfg.spm.tau_w = s.value("tau_w", cfg.spm.tau_w);
        cfg.spm.tau_delta = s.value("tau_delta", cfg.spm.tau_delta);
        cfg.spm.lambda_edge = s.value("lambda_edge", cfg.spm.lambda_edge);
        cfg.spm.w_init = s.value("w_init", cfg.spm.w_init);
        cfg.spm.max_growth_per_step =
            s.value("max_growth_per_step", cfg.spm.max_growth_per_step);
        cfg.spm.min_samples = s.value("min_samples", cfg.spm.min_samples);
        cfg.spm.force_random_growth =
            s.value("force_random_growth", cfg.spm.force_random_growth);
    }
    if (j.contains("learner")) {
        const auto& l = j.at("learner");
        cfg.learner.lr = l.value("lr", cfg.learner.lr);
        cfg.learner.beta1 = l.value("beta1", cfg.learner.beta1);
        cfg.learner.beta2 = l.value("beta2", cfg.learner.beta2);
        cfg.learner.eps = l.value("eps", cfg.learner.eps);
        cfg.learner.grad_clip = l.value("grad_clip", cfg.learner.grad_clip);
        cfg.learner.soft_targets = l.value("soft_targets", cfg.learner.soft_targets);
        cfg.learner.episode_batched =
            l.value("episode_batched", cfg.learner.episode_batched);
    }
    return cfg;
}

RunConfig RunConfig::from_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::string text((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
    return from_json(text);
}

// ------------------------------------------------------------------ Trainer

Trainer::Trainer(RunConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    env_ = make_env(cfg_.env);
    env_spec_ = env_->spec();
    if (cfg_.expert_path.empty())
        expert_ = make_scripted_expert(cfg_.env);
    else
        expert_ = std::make_unique<MlpExpert>(MlpExpert::load(cfg_.expert_path));

    std::mt19937_64 rng_init = make_rng(derive_seed(cfg_.seed, kStreamInit));
    if (cfg_.mode == RunMode::StaticMlp)
        graph_ = std::make_shared<DynamicGraph>(DynamicGraph::dense_mlp(
            env_spec_.obs_dim, env_spec_.n_actions, cfg_.mlp_hidden, rng_init));
    else
        graph_ = std::make_shared<DynamicGraph>(env_spec_.obs_dim, env_spec_.n_actions,
                                                cfg_.init_hidden, cfg_.density, rng_init);

    store_ = std::make_unique<HistoryStore>(*graph_, cfg_.spm.window_len);
    optim_ = std::make_shared<OptimState>(OptimState::for_graph(*graph_));
    optim_->lr = cfg_.learner.lr;
    optim_->beta1 = cfg_.learner.beta1;
    optim_->beta2 = cfg_.learner.beta2;
    optim_->eps = cfg_.learner.eps;
    optim_->grad_clip = cfg_.learner.grad_clip;

    rng_spm_ = make_rng(derive_seed(cfg_.seed, kStreamSpm));
    rng_policy_ = make_rng(derive_seed(cfg_.seed, kStreamPolicy));
    initial_nodes_ = static_cast<std::int64_t>(graph_->node_count());
    initial_edges_ = static_cast<std::int64_t>(graph_->edge_count());
}

int Trainer::select_action(const std::vector<double>& logits) {
    if (cfg_.epsilon_greedy > 0.0) {
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        if (unit(rng_policy_) < cfg_.epsilon_greedy) {
            std::uniform_int_distribution<int> pick(0, env_spec_.n_actions - 1);
            return pick(rng_policy_);
        }
    }
    return static_cast<int>(std::max_element(logits.begin(), logits.end()) -
                            logits.begin());
}

void Trainer::apply_structural_events(const std::vector<StructuralEvent>& batch) {
    for (const StructuralEvent& ev : batch) {
        bool adds = ev.kind == EventKind::RelayInsert || ev.kind == EventKind::RandomEdge;
        if (ev.node_id != -1) {
            const NodeId ids[] = {ev.node_id};
            if (adds)
                optim_->register_params({}, ids);
            else
                optim_->retire_params({}, ids);
        }
        if (ev.edge_id != -1) {
            const EdgeId ids[] = {ev.edge_id};
            if (adds)
                optim_->register_params(ids, {});
            else
                optim_->retire_params(ids, {});
        }
        events_.push_back(ev);
    }
}

TrainRecord Trainer::run_episode() {
    std::uint64_t episode_seed =
        derive_seed(derive_seed(cfg_.seed, kStreamEnv), static_cast<std::uint64_t>(episode_));
    std::vector<double> obs = env_->reset(episode_seed);

    double ep_return = 0.0;
    double loss_sum = 0.0;
    std::int64_t steps = 0;
    std::size_t events_before = events_.size();
    bool spm_active = cfg_.mode == RunMode::Smgrnn || cfg_.mode == RunMode::GrowthOnly;

    // episode-batched mode accumulates mean gradients and applies one
    // update at episode end
    std::map<EdgeId, double> acc_w;
    std::map<NodeId, double> acc_b;

    bool done = false;
    while (!done) {
        std::vector<double> logits = graph_->forward(obs);
        int student_action = select_action(logits);

        Target target =
            (cfg_.learner.soft_targets && expert_->has_distribution())
                ? Target::soft_actions(expert_->distribution(obs))
                : Target::hard_action(expert_->act(obs));
        loss_sum += loss(logits, target);

        backward_into(*graph_, target, grads_);
        activations_.clear();
        for (const auto& [id, n] : graph_->nodes())
            activations_.emplace_hint(activations_.end(), id, n.activation);

        if (cfg_.learner.episode_batched) {
            for (const auto& [id, gv] : grads_.weight_grad) acc_w[id] += gv;
            for (const auto& [id, gv] : grads_.bias_grad) acc_b[id] += gv;
            store_->record_step({}, activations_);
        } else {
            apply_update_into(*graph_, grads_, *optim_, deltas_);
            store_->record_step(deltas_, activations_);
        }

        ++step_;
        if (spm_active && step_ % cfg_.spm_stride == 0) {
            SpmPhase phase = schedule(step_, cfg_.spm);
            if (phase == SpmPhase::Grow) {
                apply_structural_events(grow_step(*graph_, *store_, cfg_.spm, rng_spm_, step_));
            } else if (cfg_.mode == RunMode::Smgrnn) {
                apply_structural_events(prune_step(*graph_, *store_, cfg_.spm, rng_spm_, step_));
                for (const auto& [id, n] : graph_->nodes()) {
                    if (n.role != NodeRole::Hidden) continue;
                    auto [in_deg, out_deg] = graph_->degrees(id);
                    if (in_deg == 0 || out_deg == 0)
                        throw std::logic_error("orphan hidden node survived a prune step");
                }
            }
            if (cfg_.dump_edge_stats &&
                step_ % static_cast<std::int64_t>(cfg_.spm.prune_period) == 0) {
                for (const auto& [id, e] : graph_->edges()) {
                    EdgeStats s = store_->edge_stats(id);
                    edge_stats_csv_ += std::to_string(step_) + "," + std::to_string(id) +
                                       "," + fmt_double(s.mean) + "," +
                                       fmt_double(s.variance) + "\n";
                }
            }
        }

        Transition t = env_->step(student_action);
        ep_return += t.reward;
        obs = std::move(t.observation);
        done = t.done();
        ++steps;
    }

    if (cfg_.learner.episode_batched && steps > 0) {
        GradientRecord batch;
        batch.graph_version = graph_->version();
        for (const auto& [id, e] : graph_->edges()) {
            auto it = acc_w.find(id);
            batch.weight_grad[id] = it == acc_w.end() ? 0.0 : it->second / steps;
        }
        for (const auto& [id, n] : graph_->nodes()) {
            if (n.role == NodeRole::Input) continue;
            auto it = acc_b.find(id);
            batch.bias_grad[id] = it == acc_b.end() ? 0.0 : it->second / steps;
        }
        apply_update_into(*graph_, batch, *optim_, deltas_);
        store_->record_step(deltas_, {});
    }

    TrainRecord rec;
    rec.episode = ++episode_;
    rec.episodic_return = ep_return;
    rec.mean_loss = steps > 0 ? loss_sum / static_cast<double>(steps) : 0.0;
    rec.nodes = static_cast<std::int64_t>(graph_->node_count());
    rec.edges = static_cast<std::int64_t>(graph_->edge_count());
    rec.params = static_cast<std::int64_t>(graph_->parameter_count());
    for (std::size_t i = events_before; i < events_.size(); ++i) {
        switch (events_[i].kind) {
            case EventKind::RelayInsert: rec.relay_inserts += events_[i].node_id != -1; break;
            case EventKind::RandomEdge: ++rec.random_edges; break;
            case EventKind::EdgePrune: ++rec.edge_prunes; break;
            case EventKind::OrphanRemove: rec.orphan_removals += events_[i].node_id != -1; break;
        }
    }
    return rec;
}

RunResult Trainer::run() {
    while (episode_ < cfg_.episodes) records_.push_back(run_episode());

    RunSummary s;
    s.env = cfg_.env;
    s.mode = cfg_.mode;
    s.seed = cfg_.seed;
    s.episodes = cfg_.episodes;
    s.init_hidden = cfg_.init_hidden;
    s.density = cfg_.density;
    auto [late, conv] = recompute_summary_metrics(records_, env_spec_.reward_threshold);
    s.late_reward = late;
    s.convergence_episode = conv;
    s.final_params = static_cast<std::int64_t>(graph_->parameter_count());
    s.final_hidden = static_cast<std::int64_t>(graph_->hidden_count());
    s.final_nodes = static_cast<std::int64_t>(graph_->node_count());
    s.final_edges = static_cast<std::int64_t>(graph_->edge_count());
    s.initial_nodes = initial_nodes_;
    s.initial_edges = initial_edges_;
    // Throws if the event log fails to account for the final counts.
    s.growth = net_growth(events_, {initial_nodes_, initial_edges_},
                          {s.final_nodes, s.final_edges});

    RunResult result;
    result.records = records_;
    result.summary = s;
    result.events = events_;
    result.final_graph = graph_;
    result.final_optimizer = optim_;
    if (!edge_stats_csv_.empty())
        result.edge_stats_csv = "step,edge_id,mean_dw,var_dw\n" + edge_stats_csv_;
    return result;
}

RunResult run_experiment(const RunConfig& cfg) { return Trainer(cfg).run(); }

std::vector<RunResult> run_seeds(RunConfig base, int n_seeds, std::uint64_t seed_base,
                                 int threads) {
    if (n_seeds < 1) throw std::invalid_argument("n_seeds must be >= 1");
    threads = std::clamp(threads, 1, n_seeds);
    std::vector<RunResult> results(n_seeds);
    std::vector<std::exception_ptr> errors(n_seeds);
    std::atomic<int> next{0};
    auto worker = [&] {
        for (;;) {
            int i = next.fetch_add(1);
            if (i >= n_seeds) return;
            try {
                RunConfig cfg = base;
                cfg.seed = seed_base + static_cast<std::uint64_t>(i);
                results[i] = run_experiment(cfg);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    return results;
}

// ------------------------------------------------------------- histograms

WeightHistogram weight_histogram(const DynamicGraph& g, int n_bins) {
    if (n_bins < 1) throw std::invalid_argument("n_bins must be >= 1");
    WeightHistogram h;
    std::vector<double> mags;
    mags.reserve(g.edge_count());
    for (const auto& [id, e] : g.edges()) mags.push_back(std::abs(e.weight));
    if (mags.empty()) return h;

    double lo = 0.0, hi = 0.0;
    bool any = false;
    for (double m : mags) {
        if (m <= 0.0) continue;
        if (!any) {
            lo = hi = m;
            any = true;
        } else {
            lo = std::min(lo, m);
            hi = std::max(hi, m);
        }
    }
    if (!any || lo == hi) {
        // Degenerate spread: one bin holds everything.
        h.bin_edges = {lo, hi};
        h.counts = {static_cast<std::int64_t>(mags.size())};
        h.cdf = {1.0};
        return h;
    }

    double log_lo = std::log(lo), log_hi = std::log(hi);
    h.bin_edges.resize(n_bins + 1);
    for (int i = 0; i <= n_bins; ++i)
        h.bin_edges[i] = std::exp(log_lo + (log_hi - log_lo) * i / n_bins);
    h.bin_edges.front() = lo;
    h.bin_edges.back() = hi;
    h.counts.assign(n_bins, 0);
    for (double m : mags) {
        int bin = 0;
        if (m > 0.0) {
            double t = (std::log(m) - log_lo) / (log_hi - log_lo);
            bin = std::clamp(static_cast<int>(t * n_bins), 0, n_bins - 1);
        }
        ++h.counts[bin];
    }
    h.cdf.resize(n_bins);
    std::int64_t running = 0;
    for (int i = 0; i < n_bins; ++i) {
        running += h.counts[i];
        h.cdf[i] = static_cast<double>(running) / static_cast<double>(mags.size());
    }
    return h;
}

double weight_mass_below(const DynamicGraph& g, double threshold) {
    if (g.edge_count() == 0) return 0.0;
    std::int64_t below = 0;
    for (const auto& [id, e] : g.edges())
        if (std::abs(e.weight) <= threshold) ++below;
    return static_cast<double>(below) / static_cast<double>(g.edge_count());
}

// ------------------------------------------------------------------ file IO

std::string records_to_csv(const std::vector<TrainRecord>& records) {
    std::string out =
        "episode,return,mean_loss,nodes,edges,params,relay_inserts,random_edges,"
        "edge_prunes,orphan_removals\n";
    for (const TrainRecord& r : records) {
        out += std::to_string(r.episode) + "," + fmt_double(r.episodic_return) + "," +
               fmt_double(r.mean_loss) + "," + std::to_string(r.nodes) + "," +
               std::to_string(r.edges) + "," + std::to_string(r.params) + "," +
               std::to_string(r.relay_inserts) + "," + std::to_string(r.random_edges) +
               "," + std::to_string(r.edge_prunes) + "," +
               std::to_string(r.orphan_removals) + "\n";
    }
    return out;
}

std::vector<TrainRecord> records_from_csv(const std::string& text) {
    std::vector<TrainRecord> records;
    std::istringstream in(text);
    std::string line;
    bool header = true;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (header) {
            header = false;
            continue;
        }
        auto f = split_csv_line(line);
        if (f.size() != 10) throw std::invalid_argument("bad records.csv row: " + line);
        TrainRecord r;
        r.episode = parse_int(f[0]);
        r.episodic_return = parse_double(f[1]);
        r.mean_loss = parse_double(f[2]);
        r.nodes = parse_int(f[3]);
        r.edges = parse_int(f[4]);
        r.params = parse_int(f[5]);
        r.relay_inserts = parse_int(f[6]);
        r.random_edges = parse_int(f[7]);
        r.edge_prunes = parse_int(f[8]);
        r.orphan_removals = parse_int(f[9]);
        records.push_back(r);
    }
    return records;
}

std::string events_to_csv(const std::vector<StructuralEvent>& events) {
    std::string out = "step,kind,node_id,edge_id,src,dst\n";
    auto field = [](std::int64_t v) { return v == -1 ? std::string() : std::to_string(v); };
    for (const StructuralEvent& ev : events) {
        out += std::to_string(ev.step) + "," + to_string(ev.kind) + "," +
               field(ev.node_id) + "," + field(ev.edge_id) + "," + field(ev.src) + "," +
               field(ev.dst) + "\n";
    }
    return out;
}

std::vector<StructuralEvent> events_from_csv(const std::string& text) {
    std::vector<StructuralEvent> events;
    std::istringstream in(text);
    std::string line;
    bool header = true;
    auto field = [](const std::string& s) -> std::int64_t {
        return s.empty() ? -1 : parse_int(s);
    };
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (header) {
            header = false;
            continue;
        }
        auto f = split_csv_line(line);
        if (f.size() != 6) throw std::invalid_argument("bad events.csv row: " + line);
        StructuralEvent ev;
        ev.step = parse_int(f[0]);
        ev.kind = parse_event_kind(f[1]);
        ev.node_id = field(f[2]);
        ev.edge_id = field(f[3]);
        ev.src = field(f[4]);
        ev.dst = field(f[5]);
        events.push_back(ev);
    }
    return events;
}

std::string summary_to_json(const RunSummary& s) {
    nlohmann::json j;
    j["env"] = s.env;
    j["mode"] = to_string(s.mode);
    j["seed"] = s.seed;
    j["episodes"] = s.episodes;
    j["init_hidden"] = s.init_hidden;
    j["density"] = s.density;
    j["late_reward"] = s.late_reward;
    if (s.convergence_episode)
        j["convergence_episode"] = *s.convergence_episode;
    else
        j["convergence_episode"] = nullptr;
    j["final_params"] = s.final_params;
    j["final_hidden"] = s.final_hidden;
    j["final_nodes"] = s.final_nodes;
    j["final_edges"] = s.final_edges;
    j["initial_nodes"] = s.initial_nodes;
    j["initial_edges"] = s.initial_edges;
    j["growth_nodes"] = s.growth.growth_nodes;
    j["growth_edges"] = s.growth.growth_edges;
    return j.dump(2);
}

RunSummary summary_from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    RunSummary s;
    s.env = j.at("env").get<std::string>();
    s.mode = parse_run_mode(j.at("mode").get<std::string>());
    s.seed = j.at("seed").get<std::uint64_t>();
    s.episodes = j.at("episodes").get<std::int64_t>();
    s.init_hidden = j.at("init_hidden").get<int>();
    s.density = j.at("density").get<double>();
    s.late_reward = j.at("late_reward").get<double>();
    if (!j.at("convergence_episode").is_null())
        s.convergence_episode = j.at("convergence_episode").get<std::int64_t>();
    s.final_params = j.at("final_params").get<std::int64_t>();
    s.final_hidden = j.at("final_hidden").get<std::int64_t>();
    s.final_nodes = j.at("final_nodes").get<std::int64_t>();
    s.final_edges = j.at("final_edges").get<std::int64_t>();
    s.initial_nodes = j.at("initial_nodes").get<std::int64_t>();
    s.initial_edges = j.at("initial_edges").get<std::int64_t>();
    s.growth.growth_nodes = j.at("growth_nodes").get<std::int64_t>();
    s.growth.growth_edges = j.at("growth_edges").get<std::int64_t>();
    return s;
}

std::string histogram_to_csv(const WeightHistogram& h) {
    std::string out = "bin_lo,bin_hi,count,cdf\n";
    for (std::size_t i = 0; i < h.counts.size(); ++i) {
        out += fmt_double(h.bin_edges[i]) + "," + fmt_double(h.bin_edges[i + 1]) + "," +
               std::to_string(h.counts[i]) + "," + fmt_double(h.cdf[i]) + "\n";
    }
    return out;
}

namespace {

void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    return std::string((std::istreambuf_iterator<char>(in)),
                       std::istreambuf_iterator<char>());
}

}  // namespace

void write_run_outputs(const std::filesystem::path& dir, const RunResult& result) {
    std::filesystem::create_directories(dir);
    write_file(dir / "records.csv", records_to_csv(result.records));
    write_file(dir / "events.csv", events_to_csv(result.events));
    write_file(dir / "summary.json", summary_to_json(result.summary) + "\n");
    save_checkpoint((dir / "final_graph.json").string(), *result.final_graph,
                    result.final_optimizer.get());
    write_file(dir / "weights_hist.csv",
               histogram_to_csv(weight_histogram(*result.final_graph, 30)));
    if (!result.edge_stats_csv.empty())
        write_file(dir / "edge_stats.csv", result.edge_stats_csv);
}

RunSummary read_summary_file(const std::filesystem::path& path) {
    return summary_from_json(read_file(path));
}

std::vector<StructuralEvent> read_events_file(const std::filesystem::path& path) {
    return events_from_csv(read_file(path));
}

std::vector<TrainRecord> read_records_file(const std::filesystem::path& path) {
    return records_from_csv(read_file(path));
}

// -------------------------------------------------------------- aggregation

std::pair<double, std::optional<std::int64_t>> recompute_summary_metrics(
    const std::vector<TrainRecord>& records, double reward_threshold) {
    if (records.empty()) throw std::invalid_argument("no records");
    std::size_t tail = (records.size() + 3) / 4;  // ceil(n/4)
    double late = 0.0;
    for (std::size_t i = records.size() - tail; i < records.size(); ++i)
        late += records[i].episodic_return;
    late /= static_cast<double>(tail);
    std::optional<std::int64_t> conv;
    for (const TrainRecord& r : records)
        if (r.episodic_return >= reward_threshold) {
            conv = r.episode;
            break;
        }
    return {late, conv};
}

namespace {

struct MetricAcc {
    std::vector<double> values;
    void add(double v) { values.push_back(v); }
    double mean() const {
        if (values.empty()) return 0.0;
        double s = 0.0;
        for (double v : values) s += v;
        return s / static_cast<double>(values.size());
    }
    double pop_std() const {
        if (values.empty()) return 0.0;
        double m = mean(), s = 0.0;
        for (double v : values) s += (v - m) * (v - m);
        return std::sqrt(s / static_cast<double>(values.size()));
    }
};

std::string cell(const MetricAcc& acc, bool with_std = true) {
    if (acc.values.empty()) return with_std ? "," : "";
    std::string out = fmt_double(acc.mean());
    if (with_std) out += "," + fmt_double(acc.pop_std());
    return out;
}

}  // namespace

std::string aggregate_table(const std::vector<RunSummary>& summaries,
                            const std::string& table) {
    struct Group {
        MetricAcc late, conv, final_hidden, growth_nodes, params;
        int n = 0;
        int n_converged = 0;
    };
    std::map<std::tuple<std::string, std::string, int>, Group> groups;

    auto group_key = [&](const RunSummary& s) -> std::tuple<std::string, std::string, int> {
        if (table == "topology") return {s.env, "", s.init_hidden};
        if (table == "difficulty") return {s.env, "", -1};
        return {s.env, to_string(s.mode), -1};  // growth-ablation / growth-only
    };

    for (const RunSummary& s : summaries) {
        if (table == "growth-ablation" && s.mode != RunMode::Smgrnn &&
            s.mode != RunMode::StaticGraph)
            continue;
        Group& g = groups[group_key(s)];
        ++g.n;
        g.late.add(s.late_reward);
        if (s.convergence_episode) {
            g.conv.add(static_cast<double>(*s.convergence_episode));
            ++g.n_converged;
        }
        g.final_hidden.add(static_cast<double>(s.final_hidden));
        g.growth_nodes.add(static_cast<double>(s.growth.growth_nodes));
        g.params.add(static_cast<double>(s.final_params));
    }

    std::string out;
    if (table == "growth-ablation") {
        out = "env,mode,n_runs,late_reward_mean,late_reward_std,conv_episode_mean,"
              "conv_episode_std,n_converged,final_hidden_mean,final_hidden_std\n";
        for (const auto& [key, g] : groups)
            out += std::get<0>(key) + "," + std::get<1>(key) + "," + std::to_string(g.n) +
                   "," + cell(g.late) + "," + cell(g.conv) + "," +
                   std::to_string(g.n_converged) + "," + cell(g.final_hidden) + "\n";
    } else if (table == "topology") {
        out = "env,init_hidden,n_runs,late_reward_mean,late_reward_std,"
              "conv_episode_mean,conv_episode_std,net_growth_nodes_mean,"
              "net_growth_nodes_std\n";
        for (const auto& [key, g] : groups)
            out += std::get<0>(key) + "," + std::to_string(std::get<2>(key)) + "," +
                   std::to_string(g.n) + "," + cell(g.late) + "," + cell(g.conv) + "," +
                   cell(g.growth_nodes) + "\n";
    } else if (table == "difficulty") {
        out = "env,n_runs,final_hidden_mean,final_hidden_std,net_growth_nodes_mean,"
              "net_growth_nodes_std\n";
        for (const auto& [key, g] : groups)
            out += std::get<0>(key) + "," + std::to_string(g.n) + "," +
                   cell(g.final_hidden) + "," + cell(g.growth_nodes) + "\n";
    } else if (table == "growth-only") {
        out = "env,mode,n_runs,late_reward_mean,late_reward_std,conv_episode_mean,"
              "conv_episode_std,params_mean,params_std\n";
        for (const auto& [key, g] : groups)
            out += std::get<0>(key) + "," + std::get<1>(key) + "," + std::to_string(g.n) +
                   "," + cell(g.late) + "," + cell(g.conv) + "," + cell(g.params) + "\n";
    } else {
        throw std::invalid_argument("unknown table: " + table);
    }
    return out;
}

}  // namespace smgrnn
