#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "mimic/path_law.hpp"

namespace mimic {

struct MarginalConstraint {
    int time = 0;
    Eigen::VectorXd target;
};

/// Laws dominated by a Markov reference whose marginals at the constrained
/// times equal the given targets.
///
/// Construction checks that each target is a probability vector, that the
/// reference is Markov, and that each target is supported where the
/// reference marginal is (otherwise no dominated law can meet it).
class MarginalConstraintSet {
public:
    MarginalConstraintSet(PathLaw reference, std::vector<MarginalConstraint> constraints);

    const PathLaw& reference() const noexcept { return reference_; }
    const std::vector<MarginalConstraint>& constraints() const noexcept { return constraints_; }

    /// Largest total-variation gap between a law's marginals and the targets.
    double residual(const PathLaw& law) const;
    bool satisfied_by(const PathLaw& law, double tol) const { return residual(law) <= tol; }

private:
    PathLaw reference_;
    std::vector<MarginalConstraint> constraints_;
};

struct EntropyMinOptions {
    double tol = 1e-9;
    std::size_t max_iters = 100'000;
    /// Starting law; must be dominated by the reference. Defaults to it.
    std::optional<PathLaw> start;
    /// Called with the path weights after each full cycle.
    std::function<void(std::span<const double>)> on_cycle;
};

struct EntropyMinDiagnostics {
    std::size_t iterations = 0;
    double residual = 0.0;
    double entropy = 0.0;
    /// Entropy relative to the reference and constraint residual after each
    /// full cycle (index 0 is the starting law).
    std::vector<double> entropy_history;
    std::vector<double> residual_history;
    /// Largest conditional total-variation gap at each interior time.
    std::vector<double> markov_gaps;
    bool markov = false;
};

struct EntropyMinResult {
    PathLaw law;
    EntropyMinDiagnostics diagnostics;
};

/// Cyclic iterative proportional fitting: for each constrained time, rescale
/// path probabilities by target / current marginal at that time; stop when
/// every constraint is met within `tol` in total variation. Throws
/// ConvergenceError after `max_iters` cycles.
EntropyMinResult minimize_entropy(const MarginalConstraintSet& set, const EntropyMinOptions& options = {});

struct OracleOptions {
    /// Stop once the objective improvement over one step drops below this.
    double tol = 1e-13;
    std::size_t max_iters = 200'000;
};

/// Independent minimizer of D(. || reference) over the constraint set:
/// projected gradient descent over the simplex restricted to the feasible
/// affine set, with a diagonal metric and backtracking steps. Limited to
/// path spaces of at most 10^4 entries.
PathLaw brute_force_minimizer(const MarginalConstraintSet& set, const OracleOptions& options = {});

inline constexpr std::size_t kOracleMaxPaths = 10'000;

struct GaugeReport {
    double epsilon = 0.0;
    /// sup over candidates of E_0[Lambda^(1 + epsilon)].
    double sup_moment = 0.0;
    std::vector<double> moments;
};

/// Moment bound used to guarantee the minimum is attained; finite for any
/// finite path space.
GaugeReport gauge_check(const std::vector<PathLaw>& candidates, const PathLaw& reference, double epsilon);

}  // namespace mimic
