#include "smgrnn/graph.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include "smgrnn/random.hpp"

namespace smgrnn {

namespace {

std::string id_str(std::int64_t id) { return std::to_string(id); }

}  // namespace

DynamicGraph::DynamicGraph(int n_inputs, int n_outputs, int n_hidden,
                           double density, std::mt19937_64& rng) {
    if (n_inputs < 1) throw std::invalid_argument("graph needs at least one input node");
    if (n_outputs < 1) throw std::invalid_argument("graph needs at least one output node");
    if (n_hidden < 0) throw std::invalid_argument("negative hidden node count");
    if (!(density >= 0.0 && density <= 1.0))
        throw std::invalid_argument("connection density must lie in [0, 1]");

    for (int i = 0; i < n_inputs; ++i) {
        NodeId id = next_node_id_++;
        nodes_[id] = Node{id, NodeRole::Input, 0.0, 0.0, 0.0};
        input_ids_.push_back(id);
        in_edges_[id];
        out_edges_[id];
    }
    for (int i = 0; i < n_outputs; ++i) {
        NodeId id = next_node_id_++;
        nodes_[id] = Node{id, NodeRole::Output, 0.0, 0.0, 0.0};
        output_ids_.push_back(id);
        in_edges_[id];
        out_edges_[id];
    }
    std::vector<NodeId> hidden;
    for (int i = 0; i < n_hidden; ++i) {
        NodeId id = next_node_id_++;
        nodes_[id] = Node{id, NodeRole::Hidden, 0.0, 0.0, 0.0};
        hidden.push_back(id);
        in_edges_[id];
        out_edges_[id];
    }

    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> weight_dist(0.0, 0.1);

    // Allowed pairs, enumerated in ascending (src, dst) order so edge IDs
    // are deterministic under a fixed seed. Hidden->hidden only in
    // ascending ID order, which keeps the initial graph acyclic.
    for (const auto& [src, src_node] : nodes_) {
        if (src_node.role == NodeRole::Output) continue;
        for (const auto& [dst, dst_node] : nodes_) {
            if (dst_node.role == NodeRole::Input) continue;
            if (src == dst) continue;
            if (src_node.role == NodeRole::Hidden &&
                dst_node.role == NodeRole::Hidden && src > dst)
                continue;
            if (unit(rng) < density) add_edge_raw(src, dst, weight_dist(rng));
        }
    }

    // An output without any incoming edge would receive zero gradient
    // forever; wire it to one uniformly chosen input.
    for (NodeId out : output_ids_) {
        if (!in_edges_.at(out).empty()) continue;
        std::uniform_int_distribution<std::size_t> pick(0, input_ids_.size() - 1);
        add_edge_raw(input_ids_[pick(rng)], out, weight_dist(rng));
    }
    recompute_topo_order();
}

DynamicGraph::DynamicGraph(int n_inputs, int n_outputs, int n_hidden,
                           double density, std::uint64_t seed) {
    std::mt19937_64 rng = make_rng(seed);
    *this = DynamicGraph(n_inputs, n_outputs, n_hidden, density, rng);
}

DynamicGraph DynamicGraph::dense_mlp(int n_inputs, int n_outputs, int n_hidden,
                                     std::mt19937_64& rng) {
    DynamicGraph g(n_inputs, n_outputs, 0, 0.0, rng);
    // Drop any repair edge: the layered net is wired below.
    std::vector<EdgeId> stray;
    for (const auto& [id, e] : g.edges_) stray.push_back(id);
    for (EdgeId id : stray) g.remove_edge(id);

    std::normal_distribution<double> weight_dist(0.0, 0.1);
    std::vector<NodeId> hidden;
    for (int i = 0; i < n_hidden; ++i) {
        NodeId id = g.next_node_id_++;
        g.nodes_[id] = Node{id, NodeRole::Hidden, 0.0, 0.0, 0.0};
        g.in_edges_[id];
        g.out_edges_[id];
        hidden.push_back(id);
    }
    if (n_hidden == 0) {
        for (NodeId i : g.input_ids_)
            for (NodeId o : g.output_ids_) g.add_edge_raw(i, o, weight_dist(rng));
    } else {
        for (NodeId i : g.input_ids_)
            for (NodeId h : hidden) g.add_edge_raw(i, h, weight_dist(rng));
        for (NodeId h : hidden)
            for (NodeId o : g.output_ids_) g.add_edge_raw(h, o, weight_dist(rng));
    }
    g.recompute_topo_order();
    return g;
}

DynamicGraph DynamicGraph::restore(std::vector<Node> nodes, std::vector<Edge> edges,
                                   std::vector<NodeId> input_ids,
                                   std::vector<NodeId> output_ids,
                                   NodeId next_node_id, EdgeId next_edge_id) {
    DynamicGraph g;
    for (const Node& n : nodes) {
        if (n.id < 0 || n.id >= next_node_id)
            throw std::invalid_argument("node id " + id_str(n.id) + " outside counter range");
        if (!g.nodes_.emplace(n.id, n).second)
            throw std::invalid_argument("duplicate node id " + id_str(n.id));
        g.in_edges_[n.id];
        g.out_edges_[n.id];
    }
    auto role_matches = [&](const std::vector<NodeId>& ids, NodeRole role) {
        for (NodeId id : ids) {
            auto it = g.nodes_.find(id);
            if (it == g.nodes_.end() || it->second.role != role) return false;
        }
        return true;
    };
    if (input_ids.empty() || output_ids.empty())
        throw std::invalid_argument("restore requires input and output nodes");
    if (!role_matches(input_ids, NodeRole::Input) ||
        !role_matches(output_ids, NodeRole::Output))
        throw std::invalid_argument("input/output id lists disagree with node roles");
    std::size_t fixed = 0;
    for (const auto& [id, n] : g.nodes_)
        if (n.role != NodeRole::Hidden) ++fixed;
    if (fixed != input_ids.size() + output_ids.size())
        throw std::invalid_argument("unlisted input/output node present");
    g.input_ids_ = std::move(input_ids);
    g.output_ids_ = std::move(output_ids);

    for (const Edge& e : edges) {
        if (e.id < 0 || e.id >= next_edge_id)
            throw std::invalid_argument("edge id " + id_str(e.id) + " outside counter range");
        if (!g.nodes_.count(e.src) || !g.nodes_.count(e.dst))
            throw std::invalid_argument("edge " + id_str(e.id) + " references a missing node");
        if (e.src == e.dst && !e.delayed)
            throw std::invalid_argument("non-delayed self-loop on node " + id_str(e.src));
        if (g.nodes_.at(e.dst).role == NodeRole::Input)
            throw std::invalid_argument("edge into input node " + id_str(e.dst));
        if (g.nodes_.at(e.src).role == NodeRole::Output)
            throw std::invalid_argument("edge out of output node " + id_str(e.src));
        if (g.find_edge(e.src, e.dst) != -1)
            throw std::invalid_argument("duplicate edge for pair (" + id_str(e.src) +
                                        ", " + id_str(e.dst) + ")");
        if (!g.edges_.emplace(e.id, e).second)
            throw std::invalid_argument("duplicate edge id " + id_str(e.id));
        g.insert_adjacency(e);
    }
    g.next_node_id_ = next_node_id;
    g.next_edge_id_ = next_edge_id;
    g.recompute_topo_order();  // throws if the non-delayed subgraph has a cycle
    return g;
}

const Node& DynamicGraph::node(NodeId id) const {
    auto it = nodes_.find(id);
    if (it == nodes_.end()) throw std::out_of_range("unknown node id " + id_str(id));
    return it->second;
}

const Edge& DynamicGraph::edge(EdgeId id) const {
    auto it = edges_.find(id);
    if (it == edges_.end()) throw std::out_of_range("unknown edge id " + id_str(id));
    return it->second;
}

EdgeId DynamicGraph::find_edge(NodeId src, NodeId dst) const {
    auto it = out_edges_.find(src);
    if (it == out_edges_.end()) return -1;
    for (EdgeId eid : it->second)
        if (edges_.at(eid).dst == dst) return eid;
    return -1;
}

std::size_t DynamicGraph::hidden_count() const {
    return nodes_.size() - input_ids_.size() - output_ids_.size();
}

std::size_t DynamicGraph::parameter_count() const {
    return edges_.size() + hidden_count() + output_ids_.size();
}

std::pair<int, int> DynamicGraph::degrees(NodeId id) const {
    node(id);
    return {static_cast<int>(in_edges_.at(id).size()),
            static_cast<int>(out_edges_.at(id).size())};
}

const std::vector<EdgeId>& DynamicGraph::in_edges(NodeId id) const {
    auto it = in_edges_.find(id);
    if (it == in_edges_.end()) throw std::out_of_range("unknown node id " + id_str(id));
    return it->second;
}

const std::vector<EdgeId>& DynamicGraph::out_edges(NodeId id) const {
    auto it = out_edges_.find(id);
    if (it == out_edges_.end()) throw std::out_of_range("unknown node id " + id_str(id));
    return it->second;
}

std::vector<double> DynamicGraph::forward(std::span<const double> observation) {
    if (observation.size() != input_ids_.size())
        throw std::invalid_argument("observation size " + id_str(observation.size()) +
                                    " does not match input count " +
                                    id_str(input_ids_.size()));
    for (double v : observation)
        if (!std::isfinite(v)) throw std::invalid_argument("non-finite observation");

    // Synchronous update: delayed edges read the activations of the
    // previous call, captured here before anything is overwritten.
    for (auto& [id, n] : nodes_) n.prev_activation = n.activation;
    for (std::size_t i = 0; i < input_ids_.size(); ++i)
        nodes_.at(input_ids_[i]).activation = observation[i];

    for (NodeId nid : topo_order_) {
        Node& n = nodes_.at(nid);
        if (n.role == NodeRole::Input) continue;
        double pre = n.bias;
        for (EdgeId eid : in_edges_.at(nid)) {
            const Edge& e = edges_.at(eid);
            const Node& src = nodes_.at(e.src);
            pre += e.weight * (e.delayed ? src.prev_activation : src.activation);
        }
        n.activation = (n.role == NodeRole::Hidden) ? std::tanh(pre) : pre;
    }

    std::vector<double> out(output_ids_.size());
    for (std::size_t i = 0; i < output_ids_.size(); ++i)
        out[i] = nodes_.at(output_ids_[i]).activation;
    return out;
}

void DynamicGraph::reset_activations() {
    for (auto& [id, n] : nodes_) {
        n.activation = 0.0;
        n.prev_activation = 0.0;
    }
}

RelayInsertion DynamicGraph::insert_relay(EdgeId edge_id, double w_init) {
    const Edge orig = edge(edge_id);  // copy; throws on unknown id
    NodeId relay = next_node_id_++;
    nodes_[relay] = Node{relay, NodeRole::Hidden, 0.0, 0.0, 0.0};
    in_edges_[relay];
    out_edges_[relay];
    // src -> relay can never close a cycle (the relay has no out-edges
    // yet); relay -> dst is delayed exactly when dst reaches src.
    EdgeId in_edge = add_edge_raw(orig.src, relay, w_init);
    EdgeId out_edge = add_edge_raw(relay, orig.dst, w_init);
    return RelayInsertion{relay, in_edge, out_edge};
}

EdgeId DynamicGraph::add_edge(NodeId src, NodeId dst, double weight) {
    const Node& s = node(src);
    const Node& d = node(dst);
    if (src == dst) throw std::invalid_argument("self-loop rejected on node " + id_str(src));
    if (s.role == NodeRole::Output)
        throw std::invalid_argument("output node " + id_str(src) + " cannot be an edge source");
    if (d.role == NodeRole::Input)
        throw std::invalid_argument("input node " + id_str(dst) + " cannot be an edge destination");
    if (find_edge(src, dst) != -1)
        throw std::invalid_argument("edge (" + id_str(src) + ", " + id_str(dst) +
                                    ") already present");
    return add_edge_raw(src, dst, weight);
}

EdgeId DynamicGraph::add_edge_raw(NodeId src, NodeId dst, double weight) {
    bool delayed = (src == dst) || reaches_non_delayed(dst, src);
    EdgeId id = next_edge_id_++;
    Edge e{id, src, dst, weight, delayed};
    edges_[id] = e;
    insert_adjacency(e);
    recompute_topo_order();
    return id;
}

void DynamicGraph::remove_edge(EdgeId edge_id) {
    const Edge e = edge(edge_id);
    erase_adjacency(e);
    edges_.erase(edge_id);
    recompute_topo_order();
}

std::vector<EdgeId> DynamicGraph::remove_node(NodeId node_id) {
    const Node& n = node(node_id);
    if (n.role != NodeRole::Hidden)
        throw std::invalid_argument("only hidden nodes can be removed (node " +
                                    id_str(node_id) + ")");
    std::set<EdgeId> incident(in_edges_.at(node_id).begin(), in_edges_.at(node_id).end());
    incident.insert(out_edges_.at(node_id).begin(), out_edges_.at(node_id).end());
    std::vector<EdgeId> removed(incident.begin(), incident.end());
    for (EdgeId eid : removed) {
        erase_adjacency(edges_.at(eid));
        edges_.erase(eid);
    }
    nodes_.erase(node_id);
    in_edges_.erase(node_id);
    out_edges_.erase(node_id);
    recompute_topo_order();
    return removed;
}

std::vector<EdgeId> DynamicGraph::repromote_delayed() {
    std::vector<EdgeId> flipped;
    for (auto& [id, e] : edges_) {
        if (!e.delayed || e.src == e.dst) continue;
        if (!reaches_non_delayed(e.dst, e.src)) {
            e.delayed = false;
            flipped.push_back(id);
        }
    }
    if (!flipped.empty()) recompute_topo_order();
    return flipped;
}

void DynamicGraph::set_weight(EdgeId id, double w) {
    auto it = edges_.find(id);
    if (it == edges_.end()) throw std::out_of_range("unknown edge id " + id_str(id));
    it->second.weight = w;
}

void DynamicGraph::set_bias(NodeId id, double b) {
    auto it = nodes_.find(id);
    if (it == nodes_.end()) throw std::out_of_range("unknown node id " + id_str(id));
    if (it->second.role == NodeRole::Input)
        throw std::invalid_argument("input nodes carry no bias");
    it->second.bias = b;
}

bool DynamicGraph::reaches_non_delayed(NodeId from, NodeId to) const {
    if (from == to) return true;
    std::vector<NodeId> stack{from};
    std::set<NodeId> seen{from};
    while (!stack.empty()) {
        NodeId cur = stack.back();
        stack.pop_back();
        for (EdgeId eid : out_edges_.at(cur)) {
            const Edge& e = edges_.at(eid);
            if (e.delayed) continue;
            if (e.dst == to) return true;
            if (seen.insert(e.dst).second) stack.push_back(e.dst);
        }
    }
    return false;
}

void DynamicGraph::insert_adjacency(const Edge& e) {
    auto& in = in_edges_[e.dst];
    in.insert(std::lower_bound(in.begin(), in.end(), e.id), e.id);
    auto& out = out_edges_[e.src];
    out.insert(std::lower_bound(out.begin(), out.end(), e.id), e.id);
}

void DynamicGraph::erase_adjacency(const Edge& e) {
    auto& in = in_edges_.at(e.dst);
    in.erase(std::find(in.begin(), in.end(), e.id));
    auto& out = out_edges_.at(e.src);
    out.erase(std::find(out.begin(), out.end(), e.id));
}

void DynamicGraph::recompute_topo_order() {
    ++version_;
    // Kahn over the non-delayed subgraph, smallest ready id first so the
    // order (and with it every evaluation) is deterministic.
    std::map<NodeId, int> indeg;
    for (const auto& [id, n] : nodes_) indeg[id] = 0;
    for (const auto& [id, e] : edges_)
        if (!e.delayed) ++indeg[e.dst];
    std::set<NodeId> ready;
    for (const auto& [id, d] : indeg)
        if (d == 0) ready.insert(id);
    topo_order_.clear();
    topo_order_.reserve(nodes_.size());
    while (!ready.empty()) {
        NodeId id = *ready.begin();
        ready.erase(ready.begin());
        topo_order_.push_back(id);
        for (EdgeId eid : out_edges_.at(id)) {
            const Edge& e = edges_.at(eid);
            if (e.delayed) continue;
            if (--indeg[e.dst] == 0) ready.insert(e.dst);
        }
    }
    if (topo_order_.size() != nodes_.size())
        throw std::logic_error("cycle in non-delayed subgraph");
}

void DynamicGraph::check_invariants() const {
    std::map<NodeId, std::vector<EdgeId>> in, out;
    for (const auto& [id, n] : nodes_) {
        in[id];
        out[id];
    }
    for (const auto& [id, e] : edges_) {
        if (e.id != id) throw std::logic_error("edge map key disagrees with edge id");
        if (!nodes_.count(e.src) || !nodes_.count(e.dst))
            throw std::logic_error("edge references a dead node");
        if (e.src == e.dst && !e.delayed)
            throw std::logic_error("non-delayed self-loop");
        if (nodes_.at(e.dst).role == NodeRole::Input)
            throw std::logic_error("edge into an input node");
        if (nodes_.at(e.src).role == NodeRole::Output)
            throw std::logic_error("edge out of an output node");
        in[e.dst].push_back(id);
        out[e.src].push_back(id);
    }
    for (auto& [id, v] : in) std::sort(v.begin(), v.end());
    for (auto& [id, v] : out) std::sort(v.begin(), v.end());
    if (in != in_edges_ || out != out_edges_)
        throw std::logic_error("adjacency indices disagree with edge map rescan");

    // Pair uniqueness.
    std::set<std::pair<NodeId, NodeId>> pairs;
    for (const auto& [id, e] : edges_)
        if (!pairs.emplace(e.src, e.dst).second)
            throw std::logic_error("duplicate (src, dst) pair");

    // topo_order_ must be a valid topological order of the non-delayed
    // subgraph covering every node.
    if (topo_order_.size() != nodes_.size())
        throw std::logic_error("topo order does not cover all nodes");
    std::map<NodeId, std::size_t> pos;
    for (std::size_t i = 0; i < topo_order_.size(); ++i) pos[topo_order_[i]] = i;
    if (pos.size() != nodes_.size()) throw std::logic_error("topo order repeats a node");
    for (const auto& [id, e] : edges_)
        if (!e.delayed && pos.at(e.src) >= pos.at(e.dst))
            throw std::logic_error("topo order violates a non-delayed edge");

    for (NodeId id : input_ids_)
        if (node(id).role != NodeRole::Input) throw std::logic_error("input role mismatch");
    for (NodeId id : output_ids_)
        if (node(id).role != NodeRole::Output) throw std::logic_error("output role mismatch");
}

}  // namespace smgrnn
