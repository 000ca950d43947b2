#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "smgrnn/graph.hpp"

namespace smgrnn {

enum class LossKind { MseContinuous, CrossEntropyDiscrete };

// Distillation target for one state. Discrete targets are the expert's
// greedy action by default; soft targets carry the expert's full action
// distribution when it exposes one.
struct Target {
    LossKind kind = LossKind::CrossEntropyDiscrete;
    int action = -1;             // CrossEntropyDiscrete, hard label
    std::vector<double> values;  // MSE targets, or soft CE probabilities
    bool soft = false;

    static Target mse(std::vector<double> targets);
    static Target hard_action(int action);
    static Target soft_actions(std::vector<double> probs);
};

std::vector<double> softmax(std::span<const double> logits);
double mse_loss(std::span<const double> outputs, std::span<const double> targets);
double cross_entropy_loss(std::span<const double> logits, int action);
double soft_cross_entropy_loss(std::span<const double> logits,
                               std::span<const double> probs);
double loss(std::span<const double> outputs, const Target& target);

// Gradients for every live weight plus every hidden/output bias. Keyed by
// stable IDs; `graph_version` tags the topology the key sets belong to so
// repeated calls can reuse the maps without reallocating.
struct GradientRecord {
    std::map<EdgeId, double> weight_grad;
    std::map<NodeId, double> bias_grad;
    std::uint64_t graph_version = 0;
};

// Exact reverse-mode pass through the non-delayed subgraph; delayed-edge
// inputs are previous-step constants (their weights still receive a
// gradient through the stored source value). Requires a preceding
// forward() on the same graph state.
GradientRecord backward(const DynamicGraph& g, const Target& target);
void backward_into(const DynamicGraph& g, const Target& target, GradientRecord& rec);

// Adam moments keyed by stable IDs; entries exist exactly for the live
// parameter set and survive unrelated structural edits.
struct OptimState {
    struct Moments {
        double m = 0.0;
        double v = 0.0;
        std::int64_t t = 0;
    };

    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double grad_clip = 5.0;  // global-norm clip; <= 0 disables

    std::map<EdgeId, Moments> edge_state;
    std::map<NodeId, Moments> bias_state;

    static OptimState for_graph(const DynamicGraph& g);
    void register_params(std::span<const EdgeId> edges, std::span<const NodeId> nodes);
    void retire_params(std::span<const EdgeId> edges, std::span<const NodeId> nodes);
};

// One optimizer update over all weights and biases. Returns the applied
// per-edge deltas (exactly w_after - w_before) for history recording.
std::map<EdgeId, double> apply_update(DynamicGraph& g, const GradientRecord& grads,
                                      OptimState& opt);
void apply_update_into(DynamicGraph& g, const GradientRecord& grads, OptimState& opt,
                       std::map<EdgeId, double>& deltas);

}  // namespace smgrnn
