#include "smgrnn/learner.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace smgrnn {

Target Target::mse(std::vector<double> targets) {
    Target t;
    t.kind = LossKind::MseContinuous;
    t.values = std::move(targets);
    return t;
}

Target Target::hard_action(int action) {
    Target t;
    t.kind = LossKind::CrossEntropyDiscrete;
    t.action = action;
    return t;
}

Target Target::soft_actions(std::vector<double> probs) {
    Target t;
    t.kind = LossKind::CrossEntropyDiscrete;
    t.soft = true;
    t.values = std::move(probs);
    return t;
}

std::vector<double> softmax(std::span<const double> logits) {
    if (logits.empty()) throw std::invalid_argument("softmax over empty logits");
    double m = *std::max_element(logits.begin(), logits.end());
    std::vector<double> p(logits.size());
    double z = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        p[i] = std::exp(logits[i] - m);
        z += p[i];
    }
    for (double& v : p) v /= z;
    return p;
}

double mse_loss(std::span<const double> outputs, std::span<const double> targets) {
    if (outputs.size() != targets.size())
        throw std::invalid_argument("MSE dimension mismatch");
    if (outputs.empty()) throw std::invalid_argument("MSE over empty vectors");
    double acc = 0.0;
    for (std::size_t i = 0; i < outputs.size(); ++i) {
        double d = outputs[i] - targets[i];
        acc += d * d;
    }
    return acc / static_cast<double>(outputs.size());
}

double cross_entropy_loss(std::span<const double> logits, int action) {
    if (logits.size() < 2)
        throw std::invalid_argument("discrete cross-entropy needs at least two logits");
    if (action < 0 || action >= static_cast<int>(logits.size()))
        throw std::invalid_argument("action index out of range");
    double m = *std::max_element(logits.begin(), logits.end());
    double z = 0.0;
    for (double v : logits) z += std::exp(v - m);
    return std::log(z) + m - logits[action];
}

double soft_cross_entropy_loss(std::span<const double> logits,
                               std::span<const double> probs) {
    if (logits.size() != probs.size())
        throw std::invalid_argument("soft cross-entropy dimension mismatch");
    if (logits.size() < 2)
        throw std::invalid_argument("discrete cross-entropy needs at least two logits");
    double m = *std::max_element(logits.begin(), logits.end());
    double z = 0.0;
    for (double v : logits) z += std::exp(v - m);
    double log_z = std::log(z) + m;
    double acc = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i)
        acc += probs[i] * (log_z - logits[i]);
    return acc;
}

double loss(std::span<const double> outputs, const Target& target) {
    switch (target.kind) {
        case LossKind::MseContinuous:
            return mse_loss(outputs, target.values);
        case LossKind::CrossEntropyDiscrete:
            return target.soft ? soft_cross_entropy_loss(outputs, target.values)
                               : cross_entropy_loss(outputs, target.action);
    }
    throw std::logic_error("unhandled loss kind");
}

namespace {

// dL/d(logit) at the output layer.
std::vector<double> output_deltas(const DynamicGraph& g, const Target& target) {
    const auto& outs = g.output_ids();
    std::vector<double> logits(outs.size());
    for (std::size_t i = 0; i < outs.size(); ++i)
        logits[i] = g.node(outs[i]).activation;

    std::vector<double> delta(outs.size());
    if (target.kind == LossKind::MseContinuous) {
        if (target.values.size() != outs.size())
            throw std::invalid_argument("MSE dimension mismatch");
        for (std::size_t i = 0; i < outs.size(); ++i)
            delta[i] = 2.0 * (logits[i] - target.values[i]) /
                       static_cast<double>(outs.size());
    } else {
        std::vector<double> p = softmax(logits);
        if (target.soft) {
            if (target.values.size() != outs.size())
                throw std::invalid_argument("soft target dimension mismatch");
            for (std::size_t i = 0; i < outs.size(); ++i)
                delta[i] = p[i] - target.values[i];
        } else {
            if (target.action < 0 || target.action >= static_cast<int>(outs.size()))
                throw std::invalid_argument("action index out of range");
            for (std::size_t i = 0; i < outs.size(); ++i)
                delta[i] = p[i] - (static_cast<int>(i) == target.action ? 1.0 : 0.0);
        }
    }
    return delta;
}

}  // namespace

void backward_into(const DynamicGraph& g, const Target& target, GradientRecord& rec) {
    if (rec.graph_version != g.version()) {
        rec.weight_grad.clear();
        rec.bias_grad.clear();
        for (const auto& [id, e] : g.edges()) rec.weight_grad[id] = 0.0;
        for (const auto& [id, n] : g.nodes())
            if (n.role != NodeRole::Input) rec.bias_grad[id] = 0.0;
        rec.graph_version = g.version();
    }

    std::vector<double> out_delta = output_deltas(g, target);
    const auto& outs = g.output_ids();
    auto out_index = [&](NodeId id) {
        for (std::size_t i = 0; i < outs.size(); ++i)
            if (outs[i] == id) return i;
        throw std::logic_error("output node missing from output_ids");
    };

    // bias_grad doubles as dL/d(pre-activation) storage: for hidden and
    // output nodes they are the same quantity.
    const auto& order = g.topo_order();
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        const Node& n = g.node(*it);
        if (n.role == NodeRole::Input) continue;
        double dpre;
        if (n.role == NodeRole::Output) {
            dpre = out_delta[out_index(n.id)];
        } else {
            double dact = 0.0;
            for (EdgeId eid : g.out_edges(n.id)) {
                const Edge& e = g.edge(eid);
                if (e.delayed) continue;  // truncated: no path into the future
                dact += e.weight * rec.bias_grad.at(e.dst);
            }
            dpre = dact * (1.0 - n.activation * n.activation);
        }
        if (!std::isfinite(dpre))
            throw std::runtime_error("non-finite gradient at node " +
                                     std::to_string(n.id));
        rec.bias_grad.at(n.id) = dpre;
    }

    for (const auto& [id, e] : g.edges()) {
        const Node& src = g.node(e.src);
        double upstream = rec.bias_grad.at(e.dst);
        double input = e.delayed ? src.prev_activation : src.activation;
        double gw = upstream * input;
        if (!std::isfinite(gw))
            throw std::runtime_error("non-finite gradient at node " +
                                     std::to_string(e.dst));
        rec.weight_grad.at(id) = gw;
    }
}

GradientRecord backward(const DynamicGraph& g, const Target& target) {
    GradientRecord rec;
    backward_into(g, target, rec);
    return rec;
}

OptimState OptimState::for_graph(const DynamicGraph& g) {
    OptimState opt;
    for (const auto& [id, e] : g.edges()) opt.edge_state[id];
    for (const auto& [id, n] : g.nodes())
        if (n.role != NodeRole::Input) opt.bias_state[id];
    return opt;
}

void OptimState::register_params(std::span<const EdgeId> edges,
                                 std::span<const NodeId> nodes) {
    for (EdgeId id : edges) edge_state[id];
    for (NodeId id : nodes) bias_state[id];
}

void OptimState::retire_params(std::span<const EdgeId> edges,
                               std::span<const NodeId> nodes) {
    for (EdgeId id : edges) edge_state.erase(id);
    for (NodeId id : nodes) bias_state.erase(id);
}

namespace {

double adam_delta(OptimState& opt, OptimState::Moments& mo, double g) {
    mo.m = opt.beta1 * mo.m + (1.0 - opt.beta1) * g;
    mo.v = opt.beta2 * mo.v + (1.0 - opt.beta2) * g * g;
    ++mo.t;
    double m_hat = mo.m / (1.0 - std::pow(opt.beta1, static_cast<double>(mo.t)));
    double v_hat = mo.v / (1.0 - std::pow(opt.beta2, static_cast<double>(mo.t)));
    return -opt.lr * m_hat / (std::sqrt(v_hat) + opt.eps);
}

}  // namespace

void apply_update_into(DynamicGraph& g, const GradientRecord& grads, OptimState& opt,
                       std::map<EdgeId, double>& deltas) {
    double scale = 1.0;
    if (opt.grad_clip > 0.0) {
        double sq = 0.0;
        for (const auto& [id, gv] : grads.weight_grad) sq += gv * gv;
        for (const auto& [id, gv] : grads.bias_grad) sq += gv * gv;
        double norm = std::sqrt(sq);
        if (norm > opt.grad_clip) scale = opt.grad_clip / norm;
    }

    // Reuse the caller's delta map when its key set already matches; the
    // training loop calls this once per step and topology edits are rare.
    bool fast = deltas.size() == grads.weight_grad.size();
    if (fast) {
        auto dit = deltas.begin();
        for (const auto& [id, gv] : grads.weight_grad) {
            if (dit->first != id) {
                fast = false;
                break;
            }
            ++dit;
        }
    }
    if (!fast) {
        deltas.clear();
        for (const auto& [id, gv] : grads.weight_grad)
            deltas.emplace_hint(deltas.end(), id, 0.0);
    }

    auto dit = deltas.begin();
    for (const auto& [id, gv] : grads.weight_grad) {
        double d = adam_delta(opt, opt.edge_state[id], gv * scale);
        g.set_weight(id, g.weight(id) + d);
        dit->second = d;
        ++dit;
    }
    for (const auto& [id, gv] : grads.bias_grad) {
        double d = adam_delta(opt, opt.bias_state[id], gv * scale);
        g.set_bias(id, g.bias(id) + d);
    }
}

std::map<EdgeId, double> apply_update(DynamicGraph& g, const GradientRecord& grads,
                                      OptimState& opt) {
    std::map<EdgeId, double> deltas;
    apply_update_into(g, grads, opt, deltas);
    return deltas;
}

}  // namespace smgrnn
