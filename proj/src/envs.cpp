#include "smgrnn/envs.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "smgrnn/random.hpp"

namespace smgrnn {

namespace {

constexpr double kPi = std::numbers::pi;

void check_action(int action, const EnvSpec& spec, bool done) {
    if (done) throw std::logic_error(spec.name + ": step() after episode end");
    if (action < 0 || action >= spec.n_actions)
        throw std::invalid_argument(spec.name + ": action " + std::to_string(action) +
                                    " out of range");
}

double wrap_pi(double x) {
    x = std::fmod(x + kPi, 2.0 * kPi);
    if (x < 0) x += 2.0 * kPi;
    return x - kPi;
}

}  // namespace

// ---------------------------------------------------------------- CartPole

const EnvSpec& CartPoleEnv::spec() const {
    static const EnvSpec s{"cartpole", 4, 2, 500, 475.0};
    return s;
}

std::vector<double> CartPoleEnv::reset(std::uint64_t seed) {
    std::mt19937_64 rng = make_rng(seed);
    std::uniform_real_distribution<double> init(-0.05, 0.05);
    x_ = init(rng);
    x_dot_ = init(rng);
    theta_ = init(rng);
    theta_dot_ = init(rng);
    steps_ = 0;
    done_ = false;
    return observation();
}

void CartPoleEnv::set_state(double x, double x_dot, double theta, double theta_dot) {
    x_ = x;
    x_dot_ = x_dot;
    theta_ = theta;
    theta_dot_ = theta_dot;
    steps_ = 0;
    done_ = false;
}

Transition CartPoleEnv::step(int action) {
    check_action(action, spec(), done_);

    constexpr double gravity = 9.8;
    constexpr double mass_cart = 1.0;
    constexpr double mass_pole = 0.1;
    constexpr double total_mass = mass_cart + mass_pole;
    constexpr double length = 0.5;  // half the pole
    constexpr double pole_mass_length = mass_pole * length;
    constexpr double force_mag = 10.0;
    constexpr double tau = 0.02;
    constexpr double theta_limit = 12.0 * kPi / 180.0;
    constexpr double x_limit = 2.4;

    double force = action == 1 ? force_mag : -force_mag;
    double cos_t = std::cos(theta_);
    double sin_t = std::sin(theta_);
    double temp = (force + pole_mass_length * theta_dot_ * theta_dot_ * sin_t) / total_mass;
    double theta_acc = (gravity * sin_t - cos_t * temp) /
                       (length * (4.0 / 3.0 - mass_pole * cos_t * cos_t / total_mass));
    double x_acc = temp - pole_mass_length * theta_acc * cos_t / total_mass;

    x_ += tau * x_dot_;
    x_dot_ += tau * x_acc;
    theta_ += tau * theta_dot_;
    theta_dot_ += tau * theta_acc;
    ++steps_;

    Transition t;
    t.terminated = std::abs(x_) > x_limit || std::abs(theta_) > theta_limit;
    t.truncated = !t.terminated && steps_ >= spec().max_steps;
    t.reward = 1.0;
    done_ = t.terminated || t.truncated;
    t.observation = observation();
    return t;
}

std::vector<double> CartPoleEnv::observation() const {
    return {x_, x_dot_, theta_, theta_dot_};
}

// ----------------------------------------------------------------- Acrobot

namespace {

// Two-link pendulum parameters: unit masses and lengths, centers of mass
// at the link midpoints, unit inertia, g = 9.8.
constexpr double kM1 = 1.0, kM2 = 1.0;
constexpr double kL1 = 1.0;
constexpr double kLc1 = 0.5, kLc2 = 0.5;
constexpr double kI1 = 1.0, kI2 = 1.0;
constexpr double kG = 9.8;

std::array<double, 4> acrobot_dsdt(const std::array<double, 4>& s, double torque) {
    double theta1 = s[0], theta2 = s[1], dtheta1 = s[2], dtheta2 = s[3];
    double d1 = kM1 * kLc1 * kLc1 +
                kM2 * (kL1 * kL1 + kLc2 * kLc2 + 2.0 * kL1 * kLc2 * std::cos(theta2)) +
                kI1 + kI2;
    double d2 = kM2 * (kLc2 * kLc2 + kL1 * kLc2 * std::cos(theta2)) + kI2;
    double phi2 = kM2 * kLc2 * kG * std::cos(theta1 + theta2 - kPi / 2.0);
    double phi1 = -kM2 * kL1 * kLc2 * dtheta2 * dtheta2 * std::sin(theta2) -
                  2.0 * kM2 * kL1 * kLc2 * dtheta2 * dtheta1 * std::sin(theta2) +
                  (kM1 * kLc1 + kM2 * kL1) * kG * std::cos(theta1 - kPi / 2.0) + phi2;
    double ddtheta2 =
        (torque + d2 / d1 * phi1 - kM2 * kL1 * kLc2 * dtheta1 * dtheta1 * std::sin(theta2) -
         phi2) /
        (kM2 * kLc2 * kLc2 + kI2 - d2 * d2 / d1);
    double ddtheta1 = -(d2 * ddtheta2 + phi1) / d1;
    return {dtheta1, dtheta2, ddtheta1, ddtheta2};
}

std::array<double, 4> rk4_step(const std::array<double, 4>& y, double torque, double dt) {
    auto add = [](const std::array<double, 4>& a, const std::array<double, 4>& b,
                  double h) {
        std::array<double, 4> r;
        for (int i = 0; i < 4; ++i) r[i] = a[i] + h * b[i];
        return r;
    };
    std::array<double, 4> k1 = acrobot_dsdt(y, torque);
    std::array<double, 4> k2 = acrobot_dsdt(add(y, k1, dt / 2.0), torque);
    std::array<double, 4> k3 = acrobot_dsdt(add(y, k2, dt / 2.0), torque);
    std::array<double, 4> k4 = acrobot_dsdt(add(y, k3, dt), torque);
    std::array<double, 4> r;
    for (int i = 0; i < 4; ++i)
        r[i] = y[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    return r;
}

}  // namespace

const EnvSpec& AcrobotEnv::spec() const {
    static const EnvSpec s{"acrobot", 6, 3, 500, -100.0};
    return s;
}

std::vector<double> AcrobotEnv::reset(std::uint64_t seed) {
    std::mt19937_64 rng = make_rng(seed);
    std::uniform_real_distribution<double> init(-0.1, 0.1);
    theta1_ = init(rng);
    theta2_ = init(rng);
    dtheta1_ = init(rng);
    dtheta2_ = init(rng);
    steps_ = 0;
    done_ = false;
    return observation();
}

void AcrobotEnv::set_state(double t1, double t2, double dt1, double dt2) {
    theta1_ = t1;
    theta2_ = t2;
    dtheta1_ = dt1;
    dtheta2_ = dt2;
    steps_ = 0;
    done_ = false;
}

Transition AcrobotEnv::step(int action) {
    check_action(action, spec(), done_);

    constexpr double dt = 0.2;
    double torque = static_cast<double>(action - 1);  // {-1, 0, +1}
    std::array<double, 4> next = rk4_step({theta1_, theta2_, dtheta1_, dtheta2_}, torque, dt);
    theta1_ = wrap_pi(next[0]);
    theta2_ = wrap_pi(next[1]);
    dtheta1_ = std::clamp(next[2], -4.0 * kPi, 4.0 * kPi);
    dtheta2_ = std::clamp(next[3], -9.0 * kPi, 9.0 * kPi);
    ++steps_;

    Transition t;
    t.terminated = -std::cos(theta1_) - std::cos(theta1_ + theta2_) > 1.0;
    t.truncated = !t.terminated && steps_ >= spec().max_steps;
    t.reward = t.terminated ? 0.0 : -1.0;
    done_ = t.terminated || t.truncated;
    t.observation = observation();
    return t;
}

std::vector<double> AcrobotEnv::observation() const {
    return {std::cos(theta1_), std::sin(theta1_), std::cos(theta2_),
            std::sin(theta2_), dtheta1_, dtheta2_};
}

// --------------------------------------------------------------------- XOR

std::vector<std::pair<std::array<double, 2>, int>> xor_dataset() {
    return {{{-1.0, -1.0}, 0}, {{-1.0, +1.0}, 1}, {{+1.0, -1.0}, 1}, {{+1.0, +1.0}, 0}};
}

const EnvSpec& XorEnv::spec() const {
    static const EnvSpec s{"xor", 2, 2, 4, 4.0};
    return s;
}

std::vector<double> XorEnv::reset(std::uint64_t) {
    idx_ = 0;
    done_ = false;
    auto p = xor_dataset()[0].first;
    return {p[0], p[1]};
}

Transition XorEnv::step(int action) {
    check_action(action, spec(), done_);
    auto data = xor_dataset();
    Transition t;
    t.reward = action == data[idx_].second ? 1.0 : 0.0;
    ++idx_;
    t.terminated = idx_ >= static_cast<int>(data.size());
    done_ = t.terminated;
    auto p = data[std::min<std::size_t>(idx_, data.size() - 1)].first;
    t.observation = {p[0], p[1]};
    return t;
}

std::unique_ptr<Env> make_env(const std::string& name) {
    if (name == "cartpole") return std::make_unique<CartPoleEnv>();
    if (name == "acrobot") return std::make_unique<AcrobotEnv>();
    if (name == "xor") return std::make_unique<XorEnv>();
    throw std::invalid_argument("unknown environment: " + name);
}

}  // namespace smgrnn
