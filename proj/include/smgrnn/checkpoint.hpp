#pragma once

#include <string>

#include <json.hpp>

#include "smgrnn/graph.hpp"
#include "smgrnn/learner.hpp"

namespace smgrnn {

// Checkpoint document:
//   {nodes: [{id, role, bias}], edges: [{id, src, dst, weight, delayed}],
//    input_ids, output_ids, id_counters: {next_node_id, next_edge_id}}
// Activation state is not stored; a loaded graph starts from reset
// activations and then reproduces forward() bit-identically.
nlohmann::json graph_to_json(const DynamicGraph& g);
DynamicGraph graph_from_json(const nlohmann::json& j);

// Optimizer moments keyed by the same stable IDs, stored under an
// "optimizer" section of the same document.
nlohmann::json optim_to_json(const OptimState& opt);
OptimState optim_from_json(const nlohmann::json& j);

void save_checkpoint(const std::string& path, const DynamicGraph& g,
                     const OptimState* opt = nullptr);
DynamicGraph load_graph(const std::string& path);

}  // namespace smgrnn
