#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace smgrnn {

struct EnvSpec {
    std::string name;
    int obs_dim = 0;
    int n_actions = 0;
    int max_steps = 0;
    double reward_threshold = 0.0;  // convergence criterion on episodic return
};

struct Transition {
    std::vector<double> observation;
    double reward = 0.0;
    bool terminated = false;
    bool truncated = false;
    bool done() const { return terminated || truncated; }
};

// Episodic control task. reset(seed) is a pure function of the seed;
// identical seeds and action sequences give bit-identical trajectories.
class Env {
public:
    virtual ~Env() = default;
    virtual const EnvSpec& spec() const = 0;
    virtual std::vector<double> reset(std::uint64_t seed) = 0;
    virtual Transition step(int action) = 0;
};

// Pole balancing: Euler integration at dt = 0.02, force of +-10 N,
// reward +1 per step, termination at |theta| > 12 deg or |x| > 2.4,
// truncation at 500 steps. Observation (x, x_dot, theta, theta_dot).
class CartPoleEnv final : public Env {
public:
    const EnvSpec& spec() const override;
    std::vector<double> reset(std::uint64_t seed) override;
    Transition step(int action) override;

    // State accessors used by the integration-oracle tests.
    std::array<double, 4> state() const { return {x_, x_dot_, theta_, theta_dot_}; }
    void set_state(double x, double x_dot, double theta, double theta_dot);

private:
    std::vector<double> observation() const;
    double x_ = 0, x_dot_ = 0, theta_ = 0, theta_dot_ = 0;
    int steps_ = 0;
    bool done_ = true;
};

// Two-link underactuated swing-up: single RK4 step at dt = 0.2, torque in
// {-1, 0, +1} on the second joint, reward -1 per non-terminal step,
// termination when -cos(theta1) - cos(theta1 + theta2) > 1. Observation
// (cos t1, sin t1, cos t2, sin t2, t1_dot, t2_dot).
class AcrobotEnv final : public Env {
public:
    const EnvSpec& spec() const override;
    std::vector<double> reset(std::uint64_t seed) override;
    Transition step(int action) override;

    // State accessors used by the scripted expert tests.
    std::array<double, 4> state() const { return {theta1_, theta2_, dtheta1_, dtheta2_}; }
    void set_state(double t1, double t2, double dt1, double dt2);

private:
    std::vector<double> observation() const;
    double theta1_ = 0, theta2_ = 0, dtheta1_ = 0, dtheta2_ = 0;
    int steps_ = 0;
    bool done_ = true;
};

// XOR as a four-step episode: the patterns (in {-1,+1} encoding) are
// presented in fixed order and the reward is 1 per correct classification,
// so a return of 4 is 100% accuracy.
class XorEnv final : public Env {
public:
    const EnvSpec& spec() const override;
    std::vector<double> reset(std::uint64_t seed) override;
    Transition step(int action) override;

private:
    int idx_ = 0;
    bool done_ = true;
};

std::unique_ptr<Env> make_env(const std::string& name);

// The four (input, class) pairs in {-1,+1} encoding.
std::vector<std::pair<std::array<double, 2>, int>> xor_dataset();

}  // namespace smgrnn
