#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace smgrnn {

// Stable identifiers: assigned monotonically, never reused within one
// network's lifetime. History buffers and optimizer moments are keyed by
// these, so they survive unrelated structural edits.
using NodeId = std::int64_t;
using EdgeId = std::int64_t;

enum class NodeRole { Input, Hidden, Output };

struct Node {
    NodeId id = -1;
    NodeRole role = NodeRole::Hidden;
    double bias = 0.0;
    double activation = 0.0;
    double prev_activation = 0.0;  // value from the previous forward pass
};

// `delayed` edges are evaluated against the source's previous-step
// activation; they carry every connection that would otherwise close a
// cycle in the non-delayed subgraph.
struct Edge {
    EdgeId id = -1;
    NodeId src = -1;
    NodeId dst = -1;
    double weight = 0.0;
    bool delayed = false;
};

struct RelayInsertion {
    NodeId relay = -1;
    EdgeId in_edge = -1;   // src -> relay
    EdgeId out_edge = -1;  // relay -> dst
};

// Mutable directed-graph policy network. Input and output nodes are fixed
// at construction; hidden nodes and edges come and go. The non-delayed
// subgraph is kept acyclic at all times and evaluated in topological order.
class DynamicGraph {
public:
    // Random initial topology: every allowed pair (input->hidden,
    // input->output, hidden->hidden ascending, hidden->output) is
    // instantiated independently with probability `density`; weights are
    // N(0, 0.1^2). Any output left without an incoming edge gets one from a
    // uniformly chosen input.
    DynamicGraph(int n_inputs, int n_outputs, int n_hidden, double density,
                 std::mt19937_64& rng);
    DynamicGraph(int n_inputs, int n_outputs, int n_hidden, double density,
                 std::uint64_t seed);

    // Dense single-hidden-layer network (no skip connections); with
    // n_hidden == 0 this is a direct input->output linear policy.
    static DynamicGraph dense_mlp(int n_inputs, int n_outputs, int n_hidden,
                                  std::mt19937_64& rng);

    // Rebuild from raw parts (checkpoint load). Validates all invariants;
    // a self-loop is accepted only if delayed.
    static DynamicGraph restore(std::vector<Node> nodes, std::vector<Edge> edges,
                                std::vector<NodeId> input_ids,
                                std::vector<NodeId> output_ids,
                                NodeId next_node_id, EdgeId next_edge_id);

    const std::map<NodeId, Node>& nodes() const { return nodes_; }
    const std::map<EdgeId, Edge>& edges() const { return edges_; }
    const std::vector<NodeId>& input_ids() const { return input_ids_; }
    const std::vector<NodeId>& output_ids() const { return output_ids_; }
    const std::vector<NodeId>& topo_order() const { return topo_order_; }
    NodeId next_node_id() const { return next_node_id_; }
    EdgeId next_edge_id() const { return next_edge_id_; }

    bool has_node(NodeId id) const { return nodes_.count(id) != 0; }
    bool has_edge(EdgeId id) const { return edges_.count(id) != 0; }
    const Node& node(NodeId id) const;
    const Edge& edge(EdgeId id) const;
    // -1 if no edge connects the ordered pair.
    EdgeId find_edge(NodeId src, NodeId dst) const;

    std::size_t node_count() const { return nodes_.size(); }
    std::size_t edge_count() const { return edges_.size(); }
    std::size_t hidden_count() const;
    // Trainable parameters: one weight per edge plus one bias per hidden
    // and output node.
    std::size_t parameter_count() const;

    std::pair<int, int> degrees(NodeId id) const;
    const std::vector<EdgeId>& in_edges(NodeId id) const;
    const std::vector<EdgeId>& out_edges(NodeId id) const;

    // Single synchronous evaluation pass. Inputs are pinned to the
    // observation, non-input nodes are evaluated in topological order of
    // the non-delayed subgraph (hidden: tanh, output: identity); delayed
    // edges read their source's activation from the previous call.
    std::vector<double> forward(std::span<const double> observation);
    void reset_activations();

    // Structural edits. All keep the invariants: indices consistent,
    // non-delayed subgraph acyclic, stable IDs never reused.
    RelayInsertion insert_relay(EdgeId edge_id, double w_init);
    EdgeId add_edge(NodeId src, NodeId dst, double weight);
    void remove_edge(EdgeId edge_id);
    std::vector<EdgeId> remove_node(NodeId node_id);
    // Flip delayed edges back to non-delayed where the cycle that forced
    // the flag has vanished. Returns the flipped edges.
    std::vector<EdgeId> repromote_delayed();

    double weight(EdgeId id) const { return edge(id).weight; }
    void set_weight(EdgeId id, double w);
    double bias(NodeId id) const { return node(id).bias; }
    void set_bias(NodeId id, double b);

    // Bumped by every structural edit; lets callers cache per-topology
    // scratch (gradient records reuse their key sets between edits).
    std::uint64_t version() const { return version_; }

    // Full consistency check against a rescan of the edge map; throws on
    // any violation. Test hook; cheap enough to call in fuzz loops.
    void check_invariants() const;

private:
    DynamicGraph() = default;

    EdgeId add_edge_raw(NodeId src, NodeId dst, double weight);
    // True iff `to` is reachable from `from` along non-delayed edges.
    bool reaches_non_delayed(NodeId from, NodeId to) const;
    void insert_adjacency(const Edge& e);
    void erase_adjacency(const Edge& e);
    void recompute_topo_order();

    std::map<NodeId, Node> nodes_;
    std::map<EdgeId, Edge> edges_;
    std::map<NodeId, std::vector<EdgeId>> in_edges_;   // sorted by EdgeId
    std::map<NodeId, std::vector<EdgeId>> out_edges_;  // sorted by EdgeId
    std::vector<NodeId> input_ids_;
    std::vector<NodeId> output_ids_;
    std::vector<NodeId> topo_order_;
    NodeId next_node_id_ = 0;
    EdgeId next_edge_id_ = 0;
    std::uint64_t version_ = 1;
};

}  // namespace smgrnn
