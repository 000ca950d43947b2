#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "smgrnn/graph.hpp"
#include "smgrnn/stats.hpp"

namespace smgrnn {

// Structural-plasticity hyperparameters. Defaults are the values used for
// every experiment; window_len, p_rand, rho_rand, eta_prune, prune_period,
// tau_w, tau_delta and lambda_edge form the published set, the rest are
// module knobs.
struct SpmConfig {
    std::size_t window_len = 100;       // T, steps of history per buffer
    double p_rand = 0.25;               // random growth trigger probability
    double rho_rand = 0.01;             // random growth batch ratio
    double eta_prune = 0.8;             // fraction of the removal set pruned
    std::size_t prune_period = 30;      // s, prune every s-th step
    double tau_w = 0.1;                 // weak-edge weight threshold
    double tau_delta = 1e-4;            // stalled-update threshold
    double lambda_edge = 0.1;           // variance scaling for instability
    double w_init = 0.01;               // weight for grown edges
    std::size_t max_growth_per_step = 4;  // relay insertions per grow step
    std::size_t min_samples = 100;      // stats gate; new elements survive this long
    bool force_random_growth = true;    // force the trigger when nothing is unstable

    void validate() const;  // throws std::invalid_argument on bad ranges
};

enum class EventKind { RelayInsert, RandomEdge, EdgePrune, OrphanRemove };

const char* to_string(EventKind kind);
EventKind parse_event_kind(const std::string& s);

// One structural element change. A relay insertion emits one node row and
// two edge rows; an orphan removal emits one node row plus a row per
// incident edge. Summing rows reproduces the run's net node/edge growth.
struct StructuralEvent {
    std::int64_t step = 0;
    EventKind kind = EventKind::RandomEdge;
    NodeId node_id = -1;  // -1 unless the row concerns a node
    EdgeId edge_id = -1;  // -1 unless the row concerns an edge
    NodeId src = -1;
    NodeId dst = -1;
};

struct GrowthMetrics {
    std::int64_t growth_nodes = 0;
    std::int64_t growth_edges = 0;
    bool operator==(const GrowthMetrics&) const = default;
};

enum class SpmPhase { Grow, Prune };

// Instability test on one edge's update statistics:
// |mean| < sigma/2 and variance > lambda_edge * |mean|, both strict.
bool is_unstable(const EdgeStats& stats, const SpmConfig& cfg);

// Live edges with at least min_samples recorded updates that pass
// is_unstable, sorted by descending variance (ties by ascending id),
// truncated to max_growth_per_step.
std::vector<EdgeId> select_unstable_edges(const DynamicGraph& g,
                                          const HistoryStore& store,
                                          const SpmConfig& cfg);

// Candidate removal set: edges with |w| <= tau_w, |mean update| <= tau_delta
// and a full sample gate, in ascending id order.
std::vector<EdgeId> pruning_candidates(const DynamicGraph& g,
                                       const HistoryStore& store,
                                       const SpmConfig& cfg);

// Relay insertion on every selected unstable edge, then the Bernoulli
// exploratory-growth trigger (forced when nothing was selected); new
// elements are registered in the store.
std::vector<StructuralEvent> grow_step(DynamicGraph& g, HistoryStore& store,
                                       const SpmConfig& cfg, std::mt19937_64& rng,
                                       std::int64_t step);

// Removes ceil(eta_prune * |candidates|) edges uniformly at random, then
// cascades orphan-node removal to a fixed point and re-promotes delayed
// edges whose cycle vanished.
std::vector<StructuralEvent> prune_step(DynamicGraph& g, HistoryStore& store,
                                        const SpmConfig& cfg, std::mt19937_64& rng,
                                        std::int64_t step);

// Prune on every prune_period-th step, grow otherwise. Steps count from 1.
SpmPhase schedule(std::int64_t step, const SpmConfig& cfg);

// Net growth summed from the event log.
GrowthMetrics net_growth(const std::vector<StructuralEvent>& events);

// Same, but verifies the bookkeeping identity
// initial + log-sum == final; throws std::logic_error on mismatch.
GrowthMetrics net_growth(const std::vector<StructuralEvent>& events,
                         std::pair<std::int64_t, std::int64_t> initial_counts,
                         std::pair<std::int64_t, std::int64_t> final_counts);

}  // namespace smgrnn
