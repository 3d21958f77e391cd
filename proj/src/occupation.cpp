#include "mimic/occupation.hpp"

#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>

#include "mimic/markov_chain.hpp"

namespace mimic {
namespace {

void require_discount(double beta) {
    if (!(beta > 0.0 && beta < 1.0)) throw std::invalid_argument("discount must lie in (0, 1)");
}

Eigen::VectorXd checked_probabilities(const HistoryControl& control, std::int64_t memory, int x, int n,
                                      Eigen::Index num_actions) {
    Eigen::VectorXd probs = control.action_probabilities(memory, x, n);
    if (probs.size() != num_actions) throw std::invalid_argument("control returned wrong number of actions");
    require_probability_vector(probs, "control output");
    return probs;
}

/// Solves (I - beta P)^T y = rhs, or (I - beta P) y = rhs when !transpose.
Eigen::VectorXd resolvent_solve(const Eigen::MatrixXd& kernel, double beta, const Eigen::VectorXd& rhs,
                                bool transpose) {
    Eigen::MatrixXd system = Eigen::MatrixXd::Identity(kernel.rows(), kernel.cols()) - beta * kernel;
    if (transpose) system.transposeInPlace();
    Eigen::FullPivLU<Eigen::MatrixXd> lu(system);
    if (!lu.isInvertible()) throw std::runtime_error("resolvent system is singular");
    return lu.solve(rhs);
}

using HistoryNodes = std::map<std::pair<std::int64_t, int>, double>;

HistoryNodes initial_nodes(const ControlledChain& chain, const HistoryControl& control) {
    HistoryNodes nodes;
    for (Eigen::Index x = 0; x < chain.initial().size(); ++x)
        if (chain.initial()(x) > 0.0)
            nodes[{control.initial_memory(static_cast<int>(x)), static_cast<int>(x)}] += chain.initial()(x);
    return nodes;
}

/// Advances the (memory, state) distribution by one step, calling
/// `visit(x, u, mass)` for each state-action pair charged at step n.
template <class Visit>
HistoryNodes advance(const ControlledChain& chain, const HistoryControl& control, const HistoryNodes& nodes,
                     int n, Visit&& visit) {
    const auto a = static_cast<Eigen::Index>(chain.actions().size());
    const auto m = static_cast<Eigen::Index>(chain.states().size());
    HistoryNodes next;
    for (const auto& [key, mass] : nodes) {
        const auto [memory, x] = key;
        const Eigen::VectorXd probs = checked_probabilities(control, memory, x, n, a);
        for (Eigen::Index u = 0; u < a; ++u) {
            if (!(probs(u) > 0.0)) continue;
            visit(x, static_cast<int>(u), mass * probs(u));
            const auto& dyn = chain.dynamics()[static_cast<std::size_t>(u)];
            for (Eigen::Index y = 0; y < m; ++y) {
                const double p = dyn(x, y);
                if (!(p > 0.0)) continue;
                next[{control.update(memory, x, static_cast<int>(u), static_cast<int>(y)), static_cast<int>(y)}] +=
                    mass * probs(u) * p;
            }
        }
    }
    if (next.size() > kMaxHistoryNodes)
        throw std::length_error("history enumeration exceeds " + std::to_string(kMaxHistoryNodes) +
                                " (memory, state) pairs");
    return next;
}

}  // namespace

ControlledChain::ControlledChain(StateSpace states, ActionSpace actions, Eigen::VectorXd initial,
                                 std::vector<Eigen::MatrixXd> dynamics, Control control)
    : states_(std::move(states)),
      actions_(std::move(actions)),
      initial_(std::move(initial)),
      dynamics_(std::move(dynamics)),
      control_(std::move(control)) {
    const auto m = static_cast<Eigen::Index>(states_.size());
    if (initial_.size() != m) throw std::invalid_argument("initial law has wrong dimension");
    require_probability_vector(initial_, "initial law");
    if (dynamics_.size() != actions_.size()) throw std::invalid_argument("need one dynamics matrix per action");
    for (const auto& d : dynamics_) {
        if (d.rows() != m || d.cols() != m) throw std::invalid_argument("dynamics matrix has wrong shape");
        require_row_stochastic(d, "dynamics");
    }
    if (stationary()) {
        const auto& p = policy();
        if (p.rows() != m || p.cols() != static_cast<Eigen::Index>(actions_.size()))
            throw std::invalid_argument("policy has wrong shape");
        require_row_stochastic(p, "policy");
    } else {
        const auto& h = std::get<HistoryControl>(control_);
        if (!h.initial_memory || !h.update || !h.action_probabilities)
            throw std::invalid_argument("history control is incomplete");
    }
}

Eigen::MatrixXd ControlledChain::state_kernel(const Eigen::MatrixXd& policy) const {
    const auto m = static_cast<Eigen::Index>(states_.size());
    Eigen::MatrixXd kernel = Eigen::MatrixXd::Zero(m, m);
    for (std::size_t u = 0; u < dynamics_.size(); ++u)
        kernel += policy.col(static_cast<Eigen::Index>(u)).asDiagonal() * dynamics_[u];
    return kernel;
}

OccupationMeasure disintegrate(Eigen::MatrixXd joint, double beta) {
    OccupationMeasure occ;
    occ.beta = beta;
    occ.eta = joint.rowwise().sum();
    occ.policy = joint;
    occ.null_states.assign(static_cast<std::size_t>(joint.rows()), false);
    for (Eigen::Index x = 0; x < joint.rows(); ++x) {
        if (occ.eta(x) > 0.0) {
            occ.policy.row(x) /= occ.eta(x);
        } else {
            occ.policy.row(x).setConstant(1.0 / static_cast<double>(joint.cols()));
            occ.null_states[static_cast<std::size_t>(x)] = true;
        }
    }
    occ.joint = std::move(joint);
    return occ;
}

OccupationMeasure occupation_measure(const ControlledChain& chain, double beta, double horizon_tol) {
    require_discount(beta);
    if (chain.stationary()) {
        const Eigen::VectorXd eta =
            resolvent_solve(chain.state_kernel(chain.policy()), beta, (1.0 - beta) * chain.initial(), true);
        return disintegrate(eta.asDiagonal() * chain.policy(), beta);
    }

    if (!(horizon_tol > 0.0 && horizon_tol < 1.0)) throw std::invalid_argument("horizon tolerance must lie in (0, 1)");
    const auto steps = static_cast<std::size_t>(std::max(1.0, std::ceil(std::log(horizon_tol) / std::log(beta))));
    const auto& control = std::get<HistoryControl>(chain.control());
    Eigen::MatrixXd joint = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(chain.states().size()),
                                                  static_cast<Eigen::Index>(chain.actions().size()));
    HistoryNodes nodes = initial_nodes(chain, control);
    double weight = 1.0 - beta;
    for (std::size_t n = 0; n < steps; ++n) {
        nodes = advance(chain, control, nodes, static_cast<int>(n),
                        [&](int x, int u, double mass) { joint(x, u) += weight * mass; });
        weight *= beta;
    }
    joint /= 1.0 - std::pow(beta, static_cast<double>(steps));
    OccupationMeasure occ = disintegrate(std::move(joint), beta);
    occ.enumerated_steps = steps;
    return occ;
}

ControlledChain stationary_mimic(const OccupationMeasure& occ, const std::vector<Eigen::MatrixXd>& dynamics,
                                 const Eigen::VectorXd& initial, const StateSpace& states,
                                 const ActionSpace& actions) {
    return ControlledChain(states, actions, initial, dynamics, occ.policy);
}

Eigen::MatrixXd state_marginals(const ControlledChain& chain, int steps) {
    if (steps < 0) throw std::invalid_argument("step count must be non-negative");
    const auto m = static_cast<Eigen::Index>(chain.states().size());
    Eigen::MatrixXd out(m, steps + 1);
    if (chain.stationary()) {
        const Eigen::MatrixXd kernel = chain.state_kernel(chain.policy());
        Eigen::RowVectorXd law = chain.initial().transpose();
        for (int n = 0; n <= steps; ++n) {
            out.col(n) = law.transpose();
            law = law * kernel;
        }
        return out;
    }
    const auto& control = std::get<HistoryControl>(chain.control());
    HistoryNodes nodes = initial_nodes(chain, control);
    for (int n = 0; n <= steps; ++n) {
        out.col(n).setZero();
        for (const auto& [key, mass] : nodes) out(key.second, n) += mass;
        if (n < steps) nodes = advance(chain, control, nodes, n, [](int, int, double) {});
    }
    return out;
}

ResolventReport resolvent_check(const ControlledChain& chain, const ControlledChain& mimic, double beta,
                                const Eigen::MatrixXd& cost) {
    require_discount(beta);
    if (!mimic.stationary()) throw std::invalid_argument("mimic must use a stationary policy");
    if (cost.rows() != static_cast<Eigen::Index>(chain.states().size()) ||
        cost.cols() != static_cast<Eigen::Index>(chain.actions().size()))
        throw std::invalid_argument("cost table has wrong shape");

    ResolventReport report;
    const Eigen::VectorXd policy_cost = mimic.policy().cwiseProduct(cost).rowwise().sum();
    report.psi = resolvent_solve(mimic.state_kernel(mimic.policy()), beta, (1.0 - beta) * policy_cost, false);
    report.resolvent_side = report.psi.dot(chain.initial());
    report.original_side = occupation_measure(chain, beta).joint.cwiseProduct(cost).sum();
    report.discrepancy = std::abs(report.original_side - report.resolvent_side);
    report.passed = report.discrepancy <= kResolventTolerance;
    return report;
}

double total_variation(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) throw std::invalid_argument("shape mismatch");
    return 0.5 * (a - b).cwiseAbs().sum();
}

double discount_from_rate(double alpha, double dt) {
    if (!(alpha > 0.0) || !(dt > 0.0)) throw std::invalid_argument("rate and step must be positive");
    return std::exp(-alpha * dt);
}

}  // namespace mimic
