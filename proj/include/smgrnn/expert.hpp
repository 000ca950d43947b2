#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "smgrnn/envs.hpp"

namespace smgrnn {

// Frozen teacher policy. Pure function of the observation; never acts on
// the environment during distillation.
class ExpertPolicy {
public:
    virtual ~ExpertPolicy() = default;
    virtual int act(std::span<const double> obs) const = 0;
    virtual bool has_distribution() const { return false; }
    virtual std::vector<double> distribution(std::span<const double> obs) const;
};

// Linear pole stabilizer: push right iff 3*theta + theta_dot + 0.1*x +
// 0.1*x_dot > 0.
class CartPoleScriptedExpert final : public ExpertPolicy {
public:
    int act(std::span<const double> obs) const override;
};

// Energy-shaping swing-up: pump with the sign of theta1_dot while below
// the target energy, damp above it; zero velocity breaks the tie toward
// positive torque.
class AcrobotScriptedExpert final : public ExpertPolicy {
public:
    int act(std::span<const double> obs) const override;
};

class XorExpert final : public ExpertPolicy {
public:
    int act(std::span<const double> obs) const override;
};

// Truth-table label for inputs in {-1, +1} encoding.
int xor_expert(double a, double b);

std::unique_ptr<ExpertPolicy> make_scripted_expert(const std::string& env_name);

// Fixed tanh MLP, greedy over output logits. Layer l maps layer_sizes[l]
// inputs to layer_sizes[l+1] outputs with row-major weights.
class MlpExpert final : public ExpertPolicy {
public:
    std::vector<int> layer_sizes;
    std::vector<std::vector<double>> weights;
    std::vector<std::vector<double>> biases;

    std::vector<double> forward(std::span<const double> obs) const;
    int act(std::span<const double> obs) const override;
    bool has_distribution() const override { return true; }
    std::vector<double> distribution(std::span<const double> obs) const override;

    std::size_t parameter_count() const;
    std::vector<double> flatten() const;
    static MlpExpert from_flat(const std::vector<int>& layer_sizes,
                               std::span<const double> params);

    std::string to_json() const;
    static MlpExpert from_json(const std::string& text);
    void save(const std::string& path) const;
    static MlpExpert load(const std::string& path);
};

struct ExpertTrainResult {
    MlpExpert expert;
    double mean_return = 0.0;      // final validation over 20 episodes
    bool reached_threshold = false;
    std::int64_t episodes_used = 0;
    int iterations = 0;
};

// Cross-entropy-method search over the flattened MLP weights (population
// 64, 10% elites). Stops when the return saturates at the environment's
// threshold, improvement stalls, or the episode budget runs out; a result
// below threshold is reported, not thrown.
ExpertTrainResult train_mlp_expert(Env& env, int hidden_size,
                                   std::int64_t budget_episodes, std::uint64_t seed);

// Mean return of a policy over `episodes` seeded episodes.
double evaluate_policy(Env& env, const ExpertPolicy& policy, int episodes,
                       std::uint64_t seed_base);

}  // namespace smgrnn
