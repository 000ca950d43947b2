#include "smgrnn/checkpoint.hpp"

#include <fstream>
#include <stdexcept>

namespace smgrnn {

namespace {

const char* role_name(NodeRole role) {
    switch (role) {
        case NodeRole::Input: return "input";
        case NodeRole::Hidden: return "hidden";
        case NodeRole::Output: return "output";
    }
    return "hidden";
}

NodeRole parse_role(const std::string& s) {
    if (s == "input") return NodeRole::Input;
    if (s == "hidden") return NodeRole::Hidden;
    if (s == "output") return NodeRole::Output;
    throw std::invalid_argument("unknown node role: " + s);
}

}  // namespace

nlohmann::json graph_to_json(const DynamicGraph& g) {
    nlohmann::json j;
    j["nodes"] = nlohmann::json::array();
    for (const auto& [id, n] : g.nodes())
        j["nodes"].push_back({{"id", n.id}, {"role", role_name(n.role)}, {"bias", n.bias}});
    j["edges"] = nlohmann::json::array();
    for (const auto& [id, e] : g.edges())
        j["edges"].push_back({{"id", e.id},
                              {"src", e.src},
                              {"dst", e.dst},
                              {"weight", e.weight},
                              {"delayed", e.delayed}});
    j["input_ids"] = g.input_ids();
    j["output_ids"] = g.output_ids();
    j["id_counters"] = {{"next_node_id", g.next_node_id()},
                        {"next_edge_id", g.next_edge_id()}};
    return j;
}

DynamicGraph graph_from_json(const nlohmann::json& j) {
    std::vector<Node> nodes;
    for (const auto& jn : j.at("nodes")) {
        Node n;
        n.id = jn.at("id").get<NodeId>();
        n.role = parse_role(jn.at("role").get<std::string>());
        n.bias = jn.at("bias").get<double>();
        nodes.push_back(n);
    }
    std::vector<Edge> edges;
    for (const auto& je : j.at("edges")) {
        Edge e;
        e.id = je.at("id").get<EdgeId>();
        e.src = je.at("src").get<NodeId>();
        e.dst = je.at("dst").get<NodeId>();
        e.weight = je.at("weight").get<double>();
        e.delayed = je.at("delayed").get<bool>();
        edges.push_back(e);
    }
    return DynamicGraph::restore(
        std::move(nodes), std::move(edges),
        j.at("input_ids").get<std::vector<NodeId>>(),
        j.at("output_ids").get<std::vector<NodeId>>(),
        j.at("id_counters").at("next_node_id").get<NodeId>(),
        j.at("id_counters").at("next_edge_id").get<EdgeId>());
}

nlohmann::json optim_to_json(const OptimState& opt) {
    nlohmann::json j;
    j["lr"] = opt.lr;
    j["beta1"] = opt.beta1;
    j["beta2"] = opt.beta2;
    j["eps"] = opt.eps;
    j["grad_clip"] = opt.grad_clip;
    j["edges"] = nlohmann::json::array();
    for (const auto& [id, m] : opt.edge_state)
        j["edges"].push_back({{"id", id}, {"m", m.m}, {"v", m.v}, {"t", m.t}});
    j["biases"] = nlohmann::json::array();
    for (const auto& [id, m] : opt.bias_state)
        j["biases"].push_back({{"id", id}, {"m", m.m}, {"v", m.v}, {"t", m.t}});
    return j;
}

OptimState optim_from_json(const nlohmann::json& j) {
    OptimState opt;
    opt.lr = j.at("lr").get<double>();
    opt.beta1 = j.at("beta1").get<double>();
    opt.beta2 = j.at("beta2").get<double>();
    opt.eps = j.at("eps").get<double>();
    opt.grad_clip = j.at("grad_clip").get<double>();
    for (const auto& jm : j.at("edges"))
        opt.edge_state[jm.at("id").get<EdgeId>()] = {jm.at("m").get<double>(),
                                                     jm.at("v").get<double>(),
                                                     jm.at("t").get<std::int64_t>()};
    for (const auto& jm : j.at("biases"))
        opt.bias_state[jm.at("id").get<NodeId>()] = {jm.at("m").get<double>(),
                                                     jm.at("v").get<double>(),
                                                     jm.at("t").get<std::int64_t>()};
    return opt;
}

void save_checkpoint(const std::string& path, const DynamicGraph& g,
                     const OptimState* opt) {
    nlohmann::json j = graph_to_json(g);
    if (opt) j["optimizer"] = optim_to_json(*opt);
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << j.dump(2) << '\n';
}

DynamicGraph load_graph(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path);
    nlohmann::json j;
    in >> j;
    return graph_from_json(j);
}

}  // namespace smgrnn
