#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "mimic/labels.hpp"

namespace mimic {

/// History-dependent relaxed control on a finite chain.
///
/// The history enters only through a memory key: `initial_memory(x_0)`,
/// then `update(memory, x_n, u_n, x_{n+1})` after each step. Any causal
/// functional of (x_0, u_0, ..., x_n) can be written this way (the key may
/// encode the whole history); exact evaluation merges histories that share a
/// key, so compact keys keep it cheap.
struct HistoryControl {
    std::function<std::int64_t(int x0)> initial_memory;
    std::function<std::int64_t(std::int64_t memory, int x, int u, int next_x)> update;
    /// Probability vector over actions at step n.
    std::function<Eigen::VectorXd(std::int64_t memory, int x, int n)> action_probabilities;
};

/// Controlled finite chain: P(X_{n+1} = y | X_n = x, U_n = u) = dynamics[u](x, y).
/// The control is either history dependent or a stationary relaxed policy
/// (states x actions, row-stochastic).
class ControlledChain {
public:
    using Control = std::variant<Eigen::MatrixXd, HistoryControl>;

    ControlledChain(StateSpace states, ActionSpace actions, Eigen::VectorXd initial,
                    std::vector<Eigen::MatrixXd> dynamics, Control control);

    const StateSpace& states() const noexcept { return states_; }
    const ActionSpace& actions() const noexcept { return actions_; }
    const Eigen::VectorXd& initial() const noexcept { return initial_; }
    const std::vector<Eigen::MatrixXd>& dynamics() const noexcept { return dynamics_; }
    const Control& control() const noexcept { return control_; }

    bool stationary() const noexcept { return std::holds_alternative<Eigen::MatrixXd>(control_); }
    const Eigen::MatrixXd& policy() const { return std::get<Eigen::MatrixXd>(control_); }

    /// Transition matrix of the state process under a stationary policy.
    Eigen::MatrixXd state_kernel(const Eigen::MatrixXd& policy) const;

private:
    StateSpace states_;
    ActionSpace actions_;
    Eigen::VectorXd initial_;
    std::vector<Eigen::MatrixXd> dynamics_;
    Control control_;
};

/// Normalized discounted occupation measure
/// mu(x, u) = (1 - beta) sum_n beta^n P(X_n = x, U_n = u) and its
/// disintegration into the state marginal and a stationary relaxed policy.
struct OccupationMeasure {
    double beta = 0.0;
    Eigen::MatrixXd joint;
    Eigen::VectorXd eta;
    Eigen::MatrixXd policy;
    /// States with eta = 0; their policy rows are uniform.
    std::vector<bool> null_states;
    /// Steps enumerated for history-dependent controls (0 for a linear solve).
    std::size_t enumerated_steps = 0;
};

inline constexpr double kDefaultHorizonTolerance = 1e-12;
/// Cap on distinct (memory, state) pairs carried per step.
inline constexpr std::size_t kMaxHistoryNodes = 1'000'000;

/// Exact for stationary policies (linear solve with I - beta P). For
/// history-dependent controls, forward enumeration for N steps with
/// beta^N <= horizon_tol, renormalized by 1 - beta^N.
OccupationMeasure occupation_measure(const ControlledChain& chain, double beta,
                                     double horizon_tol = kDefaultHorizonTolerance);

/// Builds the disintegration from a joint state-action table.
OccupationMeasure disintegrate(Eigen::MatrixXd joint, double beta);

/// The chain with the same dynamics and initial law driven by the stationary
/// policy of `occ`.
ControlledChain stationary_mimic(const OccupationMeasure& occ, const std::vector<Eigen::MatrixXd>& dynamics,
                                 const Eigen::VectorXd& initial, const StateSpace& states,
                                 const ActionSpace& actions);

/// Laws of X_0, ..., X_steps (one column each).
Eigen::MatrixXd state_marginals(const ControlledChain& chain, int steps);

struct ResolventReport {
    /// (1 - beta) E[sum_n beta^n k(X_n, U_n)] under the original chain.
    double original_side = 0.0;
    /// sum_x psi(x) nu(x), psi solving the mimic's resolvent equation.
    double resolvent_side = 0.0;
    double discrepancy = 0.0;
    bool passed = false;
    Eigen::VectorXd psi;
};

inline constexpr double kResolventTolerance = 1e-10;

/// Solves psi = (1 - beta) (I - beta P_mimic)^{-1} k_mimic and compares the
/// discounted cost of the original chain with psi integrated against the
/// initial law.
ResolventReport resolvent_check(const ControlledChain& chain, const ControlledChain& mimic, double beta,
                                const Eigen::MatrixXd& cost);

double total_variation(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

/// beta = exp(-alpha * dt).
double discount_from_rate(double alpha, double dt = 1.0);

}  // namespace mimic
