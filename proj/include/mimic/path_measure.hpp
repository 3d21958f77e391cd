#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "mimic/markov_chain.hpp"
#include "mimic/path_law.hpp"

namespace mimic {

/// Law of X_t.
Eigen::VectorXd marginal(const PathLaw& law, int t);

/// Joint law of (X_t, X_{t+1}); rows index X_t.
Eigen::MatrixXd pair_marginal(const PathLaw& law, int t);

/// Joint law of (X_t, U_t) for a controlled law, 0 <= t < T.
Eigen::MatrixXd state_action_marginal(const PathLaw& law, int t);

/// Conditional law of X_{t+1} given X_t. Rows for states of probability
/// zero at time t are set to the uniform vector and flagged.
struct TransitionKernel {
    Eigen::MatrixXd matrix;
    std::vector<bool> null_rows;
};

TransitionKernel transition_kernel(const PathLaw& law, int t);

/// The Markov chain with the law's initial distribution and one-step
/// conditional kernels. Its law has the same one-dimensional and
/// consecutive-pair marginals as `law`. For controlled laws the chain also
/// carries the relaxed Markov control P(U_t = u | X_t = x), so the
/// state-action marginals are reproduced as well.
MarkovChainModel markov_mimic(const PathLaw& law);

/// Exact path law of the first `horizon` steps of a chain.
PathLaw law_of(const MarkovChainModel& chain, int horizon);

/// Relative entropy D(p || p0) in nats with 0 log 0 = 0. Throws
/// DominationError when p charges a path p0 does not.
double relative_entropy(const PathLaw& p, const PathLaw& p0);

double total_variation(const PathLaw& a, const PathLaw& b);

/// Per-prefix likelihood ratio dP_t / dP0_t, where a prefix is the
/// trajectory up to and including x_t.
class LikelihoodRatio {
public:
    /// Throws std::invalid_argument unless E_0[ratio] = 1 within 1e-10.
    LikelihoodRatio(PathLaw base, int time_index, std::vector<double> values);

    const PathLaw& base() const noexcept { return base_; }
    int time_index() const noexcept { return time_index_; }
    std::span<const double> values() const noexcept { return values_; }

    std::size_t prefix_of(std::size_t path) const { return path / tail_; }
    double at_path(std::size_t path) const { return values_[prefix_of(path)]; }

    double expectation() const;

    /// E_0[ratio | trajectory up to x_t] for t <= time_index().
    LikelihoodRatio conditioned_on_prefix(int t) const;

private:
    PathLaw base_;
    int time_index_;
    std::size_t tail_;
    std::vector<double> values_;
};

/// dP_t / dP0_t on trajectories up to x_t. Zero where P0 has no mass.
LikelihoodRatio radon_nikodym(const PathLaw& p, const PathLaw& p0, int t);

struct MarkovPointTest {
    bool markov = true;
    /// Largest total-variation distance between the future law given the
    /// full prefix and given x_s alone.
    double gap = 0.0;
    /// Coordinates (x_0, [u_0,] ..., x_s) of the worst prefix.
    std::vector<std::size_t> witness;
};

/// Whether past and future are conditionally independent given X_s, up to
/// total-variation tolerance `tol`. Requires 0 < s < T.
MarkovPointTest is_markov_point(const PathLaw& law, int s, double tol);

/// True when every interior time is a Markov point.
bool is_markov(const PathLaw& law, double tol);

/// Keeps the law of the trajectory up to x_s and replaces the conditional
/// law of the remainder by its conditional law given x_s alone. Requires
/// 0 < s < T.
PathLaw markovianize(const PathLaw& law, int s);

/// Cross-check of the density of markovianize(p, s) against p0.
///
/// `discrepancy` compares the directly computed density with the suffix
/// average E_0[dP/dP0 | x_s, ..., x_T]. `corrected_discrepancy` compares it
/// with Lambda_s * E_0[dP/dP0 | x_s, ..., x_T] / E_0[Lambda_s | x_s], which is
/// the exact density for any p; the two coincide when Lambda_s depends on
/// x_s only. Both are maxima over paths charged by p0.
struct MarkovianizedDensityReport {
    double discrepancy = 0.0;
    double corrected_discrepancy = 0.0;
    bool passed = false;
    bool corrected_passed = false;
    std::vector<double> direct;
    std::vector<double> suffix_average;
    std::vector<double> corrected;
};

inline constexpr double kDensityTolerance = 1e-10;

/// Requires p << p0, p0 Markov, 0 < s < T.
MarkovianizedDensityReport verify_markovianized_density(const PathLaw& p, const PathLaw& p0, int s);

}  // namespace mimic
