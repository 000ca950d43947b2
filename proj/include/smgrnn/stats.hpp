#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <vector>

#include "smgrnn/graph.hpp"

namespace smgrnn {

// Fixed-capacity FIFO of reals with O(1) running mean/variance.
class RollingWindow {
public:
    explicit RollingWindow(std::size_t capacity);

    void push(double v);
    std::size_t size() const { return count_; }
    std::size_t capacity() const { return buf_.size(); }
    double sum() const { return sum_; }
    double sum_sq() const { return sum_sq_; }
    double mean() const;      // 0 when empty
    double variance() const;  // population (1/n) form, clamped at 0

    // Contents oldest-first; test oracle hook.
    std::vector<double> values() const;

private:
    std::vector<double> buf_;  // ring buffer
    std::size_t head_ = 0;     // slot of the oldest element
    std::size_t count_ = 0;
    double sum_ = 0.0;
    double sum_sq_ = 0.0;
};

struct EdgeStats {
    double mean = 0.0;
    double variance = 0.0;
    std::size_t n = 0;
};

// Per-edge windows of applied weight updates and per-node windows of
// activations. Keys are exactly the live IDs of the associated graph;
// stable IDs mean a surviving element keeps its history across edits and
// a re-created connection always starts fresh.
class HistoryStore {
public:
    explicit HistoryStore(std::size_t window_len);
    HistoryStore(const DynamicGraph& g, std::size_t window_len);

    std::size_t window_len() const { return window_len_; }

    void record_step(const std::map<EdgeId, double>& weight_updates,
                     const std::map<NodeId, double>& activations);

    EdgeStats edge_stats(EdgeId id) const;
    EdgeStats node_stats(NodeId id) const;

    void on_structural_edit(std::span<const NodeId> added_nodes,
                            std::span<const EdgeId> added_edges,
                            std::span<const NodeId> removed_nodes,
                            std::span<const EdgeId> removed_edges);

    bool has_edge(EdgeId id) const { return edge_windows_.count(id) != 0; }
    bool has_node(NodeId id) const { return node_windows_.count(id) != 0; }
    std::size_t edge_count() const { return edge_windows_.size(); }
    std::size_t node_count() const { return node_windows_.size(); }
    const RollingWindow& edge_window(EdgeId id) const;
    std::vector<EdgeId> edge_ids() const;
    std::vector<NodeId> node_ids() const;

private:
    std::size_t window_len_;
    std::map<EdgeId, RollingWindow> edge_windows_;
    std::map<NodeId, RollingWindow> node_windows_;
};

}  // namespace smgrnn
