#include "smgrnn/stats.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace smgrnn {

RollingWindow::RollingWindow(std::size_t capacity) : buf_(capacity) {
    if (capacity == 0) throw std::invalid_argument("window capacity must be positive");
}

void RollingWindow::push(double v) {
    if (count_ == buf_.size()) {
        double old = buf_[head_];
        sum_ -= old;
        sum_sq_ -= old * old;
        buf_[head_] = v;
        head_ = (head_ + 1) % buf_.size();
    } else {
        buf_[(head_ + count_) % buf_.size()] = v;
        ++count_;
    }
    sum_ += v;
    sum_sq_ += v * v;
}

double RollingWindow::mean() const {
    return count_ == 0 ? 0.0 : sum_ / static_cast<double>(count_);
}

double RollingWindow::variance() const {
    if (count_ == 0) return 0.0;
    double m = mean();
    double v = sum_sq_ / static_cast<double>(count_) - m * m;
    return std::max(v, 0.0);
}

std::vector<double> RollingWindow::values() const {
    std::vector<double> out;
    out.reserve(count_);
    for (std::size_t i = 0; i < count_; ++i)
        out.push_back(buf_[(head_ + i) % buf_.size()]);
    return out;
}

HistoryStore::HistoryStore(std::size_t window_len) : window_len_(window_len) {
    if (window_len == 0) throw std::invalid_argument("window length must be positive");
}

HistoryStore::HistoryStore(const DynamicGraph& g, std::size_t window_len)
    : HistoryStore(window_len) {
    for (const auto& [id, e] : g.edges())
        edge_windows_.emplace(id, RollingWindow(window_len_));
    for (const auto& [id, n] : g.nodes())
        node_windows_.emplace(id, RollingWindow(window_len_));
}

void HistoryStore::record_step(const std::map<EdgeId, double>& weight_updates,
                               const std::map<NodeId, double>& activations) {
    for (const auto& [id, dw] : weight_updates) {
        auto it = edge_windows_.find(id);
        if (it == edge_windows_.end())
            throw std::out_of_range("record_step: edge " + std::to_string(id) +
                                    " not tracked");
        it->second.push(dw);
    }
    for (const auto& [id, a] : activations) {
        auto it = node_windows_.find(id);
        if (it == node_windows_.end())
            throw std::out_of_range("record_step: node " + std::to_string(id) +
                                    " not tracked");
        it->second.push(a);
    }
}

EdgeStats HistoryStore::edge_stats(EdgeId id) const {
    auto it = edge_windows_.find(id);
    if (it == edge_windows_.end())
        throw std::out_of_range("edge_stats: edge " + std::to_string(id) + " not tracked");
    return {it->second.mean(), it->second.variance(), it->second.size()};
}

EdgeStats HistoryStore::node_stats(NodeId id) const {
    auto it = node_windows_.find(id);
    if (it == node_windows_.end())
        throw std::out_of_range("node_stats: node " + std::to_string(id) + " not tracked");
    return {it->second.mean(), it->second.variance(), it->second.size()};
}

void HistoryStore::on_structural_edit(std::span<const NodeId> added_nodes,
                                      std::span<const EdgeId> added_edges,
                                      std::span<const NodeId> removed_nodes,
                                      std::span<const EdgeId> removed_edges) {
    for (EdgeId id : removed_edges)
        if (edge_windows_.erase(id) == 0)
            throw std::invalid_argument("retiring unknown edge " + std::to_string(id));
    for (NodeId id : removed_nodes)
        if (node_windows_.erase(id) == 0)
            throw std::invalid_argument("retiring unknown node " + std::to_string(id));
    for (EdgeId id : added_edges)
        if (!edge_windows_.emplace(id, RollingWindow(window_len_)).second)
            throw std::invalid_argument("edge " + std::to_string(id) + " already tracked");
    for (NodeId id : added_nodes)
        if (!node_windows_.emplace(id, RollingWindow(window_len_)).second)
            throw std::invalid_argument("node " + std::to_string(id) + " already tracked");
}

const RollingWindow& HistoryStore::edge_window(EdgeId id) const {
    auto it = edge_windows_.find(id);
    if (it == edge_windows_.end())
        throw std::out_of_range("edge_window: edge " + std::to_string(id) + " not tracked");
    return it->second;
}

std::vector<EdgeId> HistoryStore::edge_ids() const {
    std::vector<EdgeId> out;
    out.reserve(edge_windows_.size());
    for (const auto& [id, w] : edge_windows_) out.push_back(id);
    return out;
}

std::vector<NodeId> HistoryStore::node_ids() const {
    std::vector<NodeId> out;
    out.reserve(node_windows_.size());
    for (const auto& [id, w] : node_windows_) out.push_back(id);
    return out;
}

}  // namespace smgrnn
