#include "mimic/fixtures.hpp"

#include <stdexcept>

#include "mimic/markov_chain.hpp"
#include "mimic/path_measure.hpp"

namespace mimic::fixtures {
namespace {

PathLaw homogeneous_law(const Eigen::VectorXd& initial, const Eigen::MatrixXd& kernel, int horizon) {
    const auto m = static_cast<std::size_t>(initial.size());
    return law_of(MarkovChainModel(StateSpace::range(m), initial,
                                   std::vector<Eigen::MatrixXd>(static_cast<std::size_t>(horizon), kernel)),
                  horizon);
}

void require_control(const std::string& control, std::initializer_list<const char*> known) {
    for (const char* k : known)
        if (control == k) return;
    throw std::invalid_argument("unknown control '" + control + "'");
}

}  // namespace

PathLaw memory_chain() {
    const PathShape shape(2, 0, 2);
    std::vector<double> prob(shape.size(), 0.0);
    for (std::size_t path = 0; path < shape.size(); ++path)
        if (shape.state_at(path, 0) == shape.state_at(path, 2)) prob[path] = 0.25;
    return PathLaw(StateSpace::range(2), std::nullopt, 2, std::move(prob));
}

PathLaw already_markov() {
    Eigen::MatrixXd kernel(2, 2);
    kernel << 0.9, 0.1, 0.3, 0.7;
    return homogeneous_law(Eigen::Vector2d(0.4, 0.6), kernel, 2);
}

PathLaw product_uniform(std::size_t states, int horizon) {
    const auto m = static_cast<Eigen::Index>(states);
    return homogeneous_law(Eigen::VectorXd::Constant(m, 1.0 / static_cast<double>(states)),
                           Eigen::MatrixXd::Constant(m, m, 1.0 / static_cast<double>(states)), horizon);
}

PathLaw lazy_uniform_walk(std::size_t states, int horizon) {
    const auto m = static_cast<Eigen::Index>(states);
    const double share = 1.0 / static_cast<double>(states);
    const Eigen::MatrixXd kernel =
        0.5 * Eigen::MatrixXd::Identity(m, m) + Eigen::MatrixXd::Constant(m, m, 0.5 * share);
    return homogeneous_law(Eigen::VectorXd::Constant(m, share), kernel, horizon);
}

MarginalConstraintSet memory_chain_constraints() {
    const PathLaw law = memory_chain();
    std::vector<MarginalConstraint> constraints;
    for (int t = 0; t <= law.horizon(); ++t) constraints.push_back({t, marginal(law, t)});
    return MarginalConstraintSet(product_uniform(2, 2), std::move(constraints));
}

MarginalConstraintSet terminal_skew_constraints() {
    return MarginalConstraintSet(product_uniform(2, 2), {{2, Eigen::Vector2d(0.75, 0.25)}});
}

ControlledChain history_dependent_chain() {
    Eigen::MatrixXd stay(2, 2), move(2, 2);
    stay << 0.9, 0.1, 0.3, 0.7;
    move << 0.2, 0.8, 0.6, 0.4;
    HistoryControl control;
    control.initial_memory = [](int x0) { return std::int64_t{x0}; };
    control.update = [](std::int64_t memory, int, int, int) { return memory; };
    control.action_probabilities = [](std::int64_t memory, int, int) {
        return memory == 0 ? Eigen::Vector2d(1.0, 0.0) : Eigen::Vector2d(0.0, 1.0);
    };
    return ControlledChain(StateSpace::range(2), ActionSpace::range(2), Eigen::Vector2d(0.5, 0.5), {stay, move},
                           std::move(control));
}

Eigen::MatrixXd indicator_cost() {
    Eigen::MatrixXd cost(2, 2);
    cost << 0.0, 0.0, 1.0, 1.0;
    return cost;
}

DiffusionModel running_max_model(const RunningMaxParams& p) {
    require_control(p.control, {"running-max", "current-state", "constant-up"});
    if (!(p.sigma >= 0.0)) throw std::invalid_argument("sigma must be non-negative");
    const double mu = p.mu, variance = p.sigma * p.sigma, x0 = p.x0, c = p.threshold;
    PathControl control;
    if (p.control == "running-max") {
        control.memory_size = 1;
        control.start = [](std::span<const double> x, std::span<double> memory) { memory[0] = x[0]; };
        control.observe = [](std::span<const double> x, std::span<double> memory) {
            memory[0] = std::max(memory[0], x[0]);
        };
        control.probabilities = [c](std::span<const double>, double, std::span<const double> memory,
                                    std::span<double> probs) {
            const bool up = memory[0] > c;
            probs[0] = up ? 0.0 : 1.0;
            probs[1] = up ? 1.0 : 0.0;
        };
    } else if (p.control == "current-state") {
        control.probabilities = [c](std::span<const double> x, double, std::span<const double>,
                                    std::span<double> probs) {
            const bool up = x[0] > c;
            probs[0] = up ? 0.0 : 1.0;
            probs[1] = up ? 1.0 : 0.0;
        };
    } else {
        control.probabilities = [](std::span<const double>, double, std::span<const double>,
                                   std::span<double> probs) {
            probs[0] = 0.0;
            probs[1] = 1.0;
        };
    }
    DiffusionModel model{.dim = 1,
                         .actions = ActionSpace({"down", "up"}),
                         .drift = [mu](std::span<const double>, std::size_t u,
                                       std::span<double> b) { b[0] = u == 1 ? mu : -mu; },
                         .drift_bound = std::abs(mu),
                         .diffusion = [variance](std::span<const double>, std::span<double> a) { a[0] = variance; },
                         .control = std::move(control),
                         .initial = [x0](Rng&, std::span<double> x) { x[0] = x0; },
                         .horizon = p.horizon,
                         .steps = p.steps};
    return model;
}

JumpModel birth_death_model(const BirthDeathParams& p) {
    require_control(p.control, {"running-max", "current-state"});
    if (!(p.slow_rate >= 0.0 && p.fast_rate >= 0.0)) throw std::invalid_argument("rates must be non-negative");
    if (!(p.slow_up >= 0.0 && p.slow_up <= 1.0 && p.fast_up >= 0.0 && p.fast_up <= 1.0))
        throw std::invalid_argument("up probabilities must lie in [0, 1]");
    const double level = p.switch_level, x0 = p.x0;
    const double rates[2] = {p.slow_rate, p.fast_rate};
    const double ups[2] = {p.slow_up, p.fast_up};
    PathControl control;
    if (p.control == "running-max") {
        control.memory_size = 1;
        control.start = [](std::span<const double> x, std::span<double> memory) { memory[0] = x[0]; };
        control.observe = [](std::span<const double> x, std::span<double> memory) {
            memory[0] = std::max(memory[0], x[0]);
        };
        control.probabilities = [level](std::span<const double>, double, std::span<const double> memory,
                                        std::span<double> probs) {
            const bool fast = memory[0] >= level;
            probs[0] = fast ? 0.0 : 1.0;
            probs[1] = fast ? 1.0 : 0.0;
        };
    } else {
        control.probabilities = [level](std::span<const double> x, double, std::span<const double>,
                                        std::span<double> probs) {
            const bool fast = x[0] >= level;
            probs[0] = fast ? 0.0 : 1.0;
            probs[1] = fast ? 1.0 : 0.0;
        };
    }
    JumpModel model{.actions = ActionSpace({"slow", "fast"}),
                    .intensity = [r0 = rates[0], r1 = rates[1]](double, std::size_t u) { return u == 1 ? r1 : r0; },
                    .intensity_bound = std::max(p.slow_rate, p.fast_rate),
                    .jump = [u0 = ups[0], u1 = ups[1]](double, std::size_t u, Rng& rng) {
                        const double up = u == 1 ? u1 : u0;
                        return std::uniform_real_distribution<double>(0.0, 1.0)(rng) < up ? 1.0 : -1.0;
                    },
                    .control = std::move(control),
                    .initial = [x0](Rng&) { return x0; },
                    .horizon = p.horizon,
                    .steps = p.steps};
    return model;
}

DiffusionModel brownian_model(int dim, double horizon, int steps) {
    if (dim < 1) throw std::invalid_argument("dimension must be positive");
    PathControl control;
    control.probabilities = [](std::span<const double>, double, std::span<const double>, std::span<double> probs) {
        probs[0] = 1.0;
    };
    DiffusionModel model{.dim = dim,
                         .actions = ActionSpace({"none"}),
                         .drift = [](std::span<const double>, std::size_t, std::span<double> b) {
                             std::fill(b.begin(), b.end(), 0.0);
                         },
                         .drift_bound = 0.0,
                         .diffusion = [dim](std::span<const double>, std::span<double> a) {
                             std::fill(a.begin(), a.end(), 0.0);
                             for (int i = 0; i < dim; ++i) a[static_cast<std::size_t>(i * dim + i)] = 1.0;
                         },
                         .control = std::move(control),
                         .initial = [](Rng&, std::span<double> x) { std::fill(x.begin(), x.end(), 0.0); },
                         .horizon = horizon,
                         .steps = steps};
    return model;
}

DiffusionModel deterministic_line_model(double x0, double horizon, int steps) {
    PathControl control;
    control.probabilities = [](std::span<const double>, double, std::span<const double>, std::span<double> probs) {
        probs[0] = 0.0;
        probs[1] = 1.0;
    };
    DiffusionModel model{.dim = 1,
                         .actions = ActionSpace({"-1", "+1"}),
                         .drift = [](std::span<const double>, std::size_t u,
                                     std::span<double> b) { b[0] = u == 1 ? 1.0 : -1.0; },
                         .drift_bound = 1.0,
                         .diffusion = [](std::span<const double>, std::span<double> a) { a[0] = 0.0; },
                         .control = std::move(control),
                         .initial = [x0](Rng&, std::span<double> x) { x[0] = x0; },
                         .horizon = horizon,
                         .steps = steps};
    return model;
}

JumpModel frozen_jump_model(double x0, double horizon, int steps) {
    PathControl control;
    control.probabilities = [](std::span<const double>, double, std::span<const double>, std::span<double> probs) {
        probs[0] = 1.0;
    };
    JumpModel model{.actions = ActionSpace({"none"}),
                    .intensity = [](double, std::size_t) { return 0.0; },
                    .intensity_bound = 0.0,
                    .jump = [](double, std::size_t, Rng&) { return 1.0; },
                    .control = std::move(control),
                    .initial = [x0](Rng&) { return x0; },
                    .horizon = horizon,
                    .steps = steps};
    return model;
}

std::vector<std::string> discrete_names() {
    return {"memory-chain", "already-markov", "product-uniform", "terminal-skew", "fixture-hd"};
}

std::vector<std::string> sde_names() { return {"running-max", "birth-death", "brownian", "line"}; }

}  // namespace mimic::fixtures
