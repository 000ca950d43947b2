#include "smgrnn/spm.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace smgrnn {

void SpmConfig::validate() const {
    if (window_len == 0) throw std::invalid_argument("window_len must be positive");
    if (!(p_rand >= 0.0 && p_rand <= 1.0))
        throw std::invalid_argument("p_rand must lie in [0, 1]");
    if (!(rho_rand > 0.0 && rho_rand <= 1.0))
        throw std::invalid_argument("rho_rand must lie in (0, 1]");
    if (!(eta_prune > 0.0 && eta_prune <= 1.0))
        throw std::invalid_argument("eta_prune must lie in (0, 1]");
    if (prune_period < 1) throw std::invalid_argument("prune_period must be >= 1");
    if (!(tau_w > 0.0)) throw std::invalid_argument("tau_w must be positive");
    if (!(tau_delta > 0.0)) throw std::invalid_argument("tau_delta must be positive");
    if (!(lambda_edge > 0.0)) throw std::invalid_argument("lambda_edge must be positive");
}

const char* to_string(EventKind kind) {
    switch (kind) {
        case EventKind::RelayInsert: return "relay_insert";
        case EventKind::RandomEdge: return "random_edge";
        case EventKind::EdgePrune: return "edge_prune";
        case EventKind::OrphanRemove: return "orphan_remove";
    }
    return "unknown";
}

EventKind parse_event_kind(const std::string& s) {
    if (s == "relay_insert") return EventKind::RelayInsert;
    if (s == "random_edge") return EventKind::RandomEdge;
    if (s == "edge_prune") return EventKind::EdgePrune;
    if (s == "orphan_remove") return EventKind::OrphanRemove;
    throw std::invalid_argument("unknown event kind: " + s);
}

bool is_unstable(const EdgeStats& stats, const SpmConfig& cfg) {
    double abs_mean = std::abs(stats.mean);
    double sigma = std::sqrt(stats.variance);
    return abs_mean < 0.5 * sigma && stats.variance > cfg.lambda_edge * abs_mean;
}

std::vector<EdgeId> select_unstable_edges(const DynamicGraph& g,
                                          const HistoryStore& store,
                                          const SpmConfig& cfg) {
    struct Candidate {
        EdgeId id;
        double variance;
    };
    std::vector<Candidate> found;
    for (const auto& [id, e] : g.edges()) {
        EdgeStats s = store.edge_stats(id);
        if (s.n < cfg.min_samples) continue;
        if (is_unstable(s, cfg)) found.push_back({id, s.variance});
    }
    std::stable_sort(found.begin(), found.end(), [](const Candidate& a, const Candidate& b) {
        if (a.variance != b.variance) return a.variance > b.variance;
        return a.id < b.id;
    });
    if (found.size() > cfg.max_growth_per_step) found.resize(cfg.max_growth_per_step);
    std::vector<EdgeId> out;
    out.reserve(found.size());
    for (const Candidate& c : found) out.push_back(c.id);
    return out;
}

std::vector<EdgeId> pruning_candidates(const DynamicGraph& g,
                                       const HistoryStore& store,
                                       const SpmConfig& cfg) {
    std::vector<EdgeId> out;
    for (const auto& [id, e] : g.edges()) {
        EdgeStats s = store.edge_stats(id);
        if (s.n < cfg.min_samples) continue;
        if (std::abs(e.weight) <= cfg.tau_w && std::abs(s.mean) <= cfg.tau_delta)
            out.push_back(id);
    }
    return out;
}

namespace {

// Uniform sample of `want` missing legal pairs (src not output, dst not
// input, no self-pair, not already an edge). Rejection sampling against
// the current edge set, with a full enumeration fallback when the pool is
// nearly exhausted.
std::vector<std::pair<NodeId, NodeId>> sample_missing_pairs(const DynamicGraph& g,
                                                            std::size_t want,
                                                            std::mt19937_64& rng) {
    std::vector<NodeId> sources, dests;
    std::size_t n_hidden = 0;
    for (const auto& [id, n] : g.nodes()) {
        if (n.role != NodeRole::Output) sources.push_back(id);
        if (n.role != NodeRole::Input) dests.push_back(id);
        if (n.role == NodeRole::Hidden) ++n_hidden;
    }
    std::int64_t legal = static_cast<std::int64_t>(sources.size()) *
                             static_cast<std::int64_t>(dests.size()) -
                         static_cast<std::int64_t>(n_hidden);
    std::int64_t existing = 0;
    for (const auto& [id, e] : g.edges())
        if (e.src != e.dst) ++existing;
    std::int64_t pool = legal - existing;
    if (pool <= 0) return {};
    want = std::min<std::size_t>(want, static_cast<std::size_t>(pool));

    std::vector<std::pair<NodeId, NodeId>> chosen;
    std::set<std::pair<NodeId, NodeId>> taken;

    auto enumerate_rest = [&]() {
        std::vector<std::pair<NodeId, NodeId>> missing;
        for (NodeId u : sources)
            for (NodeId v : dests) {
                if (u == v) continue;
                if (g.find_edge(u, v) != -1) continue;
                if (taken.count({u, v})) continue;
                missing.push_back({u, v});
            }
        std::size_t need = want - chosen.size();
        for (std::size_t i = 0; i < need && i < missing.size(); ++i) {
            std::uniform_int_distribution<std::size_t> pick(i, missing.size() - 1);
            std::swap(missing[i], missing[pick(rng)]);
            chosen.push_back(missing[i]);
        }
    };

    std::uniform_int_distribution<std::size_t> src_pick(0, sources.size() - 1);
    std::uniform_int_distribution<std::size_t> dst_pick(0, dests.size() - 1);
    std::size_t tries = 0;
    const std::size_t max_tries = 64 * want + 256;
    while (chosen.size() < want) {
        if (tries++ >= max_tries) {
            enumerate_rest();
            break;
        }
        NodeId u = sources[src_pick(rng)];
        NodeId v = dests[dst_pick(rng)];
        if (u == v || g.find_edge(u, v) != -1) continue;
        if (!taken.insert({u, v}).second) continue;
        chosen.push_back({u, v});
    }
    return chosen;
}

}  // namespace

std::vector<StructuralEvent> grow_step(DynamicGraph& g, HistoryStore& store,
                                       const SpmConfig& cfg, std::mt19937_64& rng,
                                       std::int64_t step) {
    std::vector<StructuralEvent> events;

    std::vector<EdgeId> unstable = select_unstable_edges(g, store, cfg);
    for (EdgeId eid : unstable) {
        const Edge orig = g.edge(eid);
        RelayInsertion r = g.insert_relay(eid, cfg.w_init);
        const NodeId added_nodes[] = {r.relay};
        const EdgeId added_edges[] = {r.in_edge, r.out_edge};
        store.on_structural_edit(added_nodes, added_edges, {}, {});
        events.push_back({step, EventKind::RelayInsert, r.relay, -1, orig.src, orig.dst});
        events.push_back({step, EventKind::RelayInsert, -1, r.in_edge, orig.src, r.relay});
        events.push_back({step, EventKind::RelayInsert, -1, r.out_edge, r.relay, orig.dst});
    }

    bool triggered = std::bernoulli_distribution(cfg.p_rand)(rng);
    if (unstable.empty() && cfg.force_random_growth) triggered = true;
    if (triggered) {
        std::size_t batch = std::max<std::size_t>(
            static_cast<std::size_t>(std::floor(cfg.rho_rand *
                                                static_cast<double>(g.node_count()))),
            1);
        for (auto [u, v] : sample_missing_pairs(g, batch, rng)) {
            EdgeId eid = g.add_edge(u, v, cfg.w_init);
            const EdgeId added_edges[] = {eid};
            store.on_structural_edit({}, added_edges, {}, {});
            events.push_back({step, EventKind::RandomEdge, -1, eid, u, v});
        }
    }
    return events;
}

std::vector<StructuralEvent> prune_step(DynamicGraph& g, HistoryStore& store,
                                        const SpmConfig& cfg, std::mt19937_64& rng,
                                        std::int64_t step) {
    std::vector<StructuralEvent> events;

    std::vector<EdgeId> candidates = pruning_candidates(g, store, cfg);
    // ceil with a guard against FP dust: 0.8 * 5 must give 4, not 5.
    std::size_t k = static_cast<std::size_t>(std::ceil(
        cfg.eta_prune * static_cast<double>(candidates.size()) - 1e-9));
    k = std::min(k, candidates.size());
    for (std::size_t i = 0; i < k; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, candidates.size() - 1);
        std::swap(candidates[i], candidates[pick(rng)]);
    }
    std::vector<EdgeId> doomed(candidates.begin(), candidates.begin() + k);
    std::sort(doomed.begin(), doomed.end());
    for (EdgeId eid : doomed) {
        const Edge e = g.edge(eid);
        g.remove_edge(eid);
        const EdgeId removed_edges[] = {eid};
        store.on_structural_edit({}, {}, {}, removed_edges);
        events.push_back({step, EventKind::EdgePrune, -1, eid, e.src, e.dst});
    }

    // Orphan cascade: removing a node can orphan its neighbours, so sweep
    // until a fixed point.
    for (;;) {
        std::vector<NodeId> orphans;
        for (const auto& [id, n] : g.nodes()) {
            if (n.role != NodeRole::Hidden) continue;
            auto [in_deg, out_deg] = g.degrees(id);
            if (in_deg == 0 || out_deg == 0) orphans.push_back(id);
        }
        if (orphans.empty()) break;
        for (NodeId nid : orphans) {
            std::map<EdgeId, Edge> incident;
            for (EdgeId eid : g.in_edges(nid)) incident.emplace(eid, g.edge(eid));
            for (EdgeId eid : g.out_edges(nid)) incident.emplace(eid, g.edge(eid));
            std::vector<EdgeId> removed = g.remove_node(nid);
            const NodeId removed_nodes[] = {nid};
            store.on_structural_edit({}, {}, removed_nodes, removed);
            events.push_back({step, EventKind::OrphanRemove, nid, -1, -1, -1});
            for (EdgeId eid : removed) {
                const Edge& e = incident.at(eid);
                events.push_back({step, EventKind::OrphanRemove, -1, eid, e.src, e.dst});
            }
        }
    }

    // A removed edge may have been the cycle that forced a delayed flag;
    // promote whatever became promotable.
    g.repromote_delayed();
    return events;
}

SpmPhase schedule(std::int64_t step, const SpmConfig& cfg) {
    if (step < 1) throw std::invalid_argument("step counter starts at 1");
    return (step % static_cast<std::int64_t>(cfg.prune_period) == 0) ? SpmPhase::Prune
                                                                     : SpmPhase::Grow;
}

GrowthMetrics net_growth(const std::vector<StructuralEvent>& events) {
    GrowthMetrics m;
    for (const StructuralEvent& ev : events) {
        bool adds = ev.kind == EventKind::RelayInsert || ev.kind == EventKind::RandomEdge;
        if (ev.node_id != -1) m.growth_nodes += adds ? 1 : -1;
        if (ev.edge_id != -1) m.growth_edges += adds ? 1 : -1;
    }
    return m;
}

GrowthMetrics net_growth(const std::vector<StructuralEvent>& events,
                         std::pair<std::int64_t, std::int64_t> initial_counts,
                         std::pair<std::int64_t, std::int64_t> final_counts) {
    GrowthMetrics m = net_growth(events);
    if (initial_counts.first + m.growth_nodes != final_counts.first ||
        initial_counts.second + m.growth_edges != final_counts.second)
        throw std::logic_error("event log does not account for the final node/edge counts");
    return m;
}

}  // namespace smgrnn
