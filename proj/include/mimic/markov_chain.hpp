#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "mimic/labels.hpp"

namespace mimic {

/// Time-inhomogeneous Markov chain: initial law, one row-stochastic kernel
/// per step and, optionally, a relaxed Markov control (one states x actions
/// row-stochastic matrix per step).
class MarkovChainModel {
public:
    MarkovChainModel(StateSpace states, Eigen::VectorXd initial, std::vector<Eigen::MatrixXd> kernels);
    MarkovChainModel(StateSpace states, ActionSpace actions, Eigen::VectorXd initial,
                     std::vector<Eigen::MatrixXd> kernels, std::vector<Eigen::MatrixXd> policy);

    const StateSpace& states() const noexcept { return states_; }
    const std::optional<ActionSpace>& actions() const noexcept { return actions_; }
    bool controlled() const noexcept { return actions_.has_value(); }

    const Eigen::VectorXd& initial() const noexcept { return initial_; }
    const std::vector<Eigen::MatrixXd>& kernels() const noexcept { return kernels_; }
    /// Empty for uncontrolled chains.
    const std::vector<Eigen::MatrixXd>& policy() const noexcept { return policy_; }

    int num_steps() const noexcept { return static_cast<int>(kernels_.size()); }

private:
    void validate() const;

    StateSpace states_;
    std::optional<ActionSpace> actions_;
    Eigen::VectorXd initial_;
    std::vector<Eigen::MatrixXd> kernels_;
    std::vector<Eigen::MatrixXd> policy_;
};

/// Throws std::invalid_argument unless every row is a probability vector
/// within `kNormalizationTolerance`.
void require_row_stochastic(const Eigen::MatrixXd& matrix, const char* what);
void require_probability_vector(const Eigen::VectorXd& vector, const char* what);

}  // namespace mimic
