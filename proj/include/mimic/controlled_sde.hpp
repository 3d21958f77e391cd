#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <random>
#include <span>
#include <variant>
#include <vector>

#include "mimic/labels.hpp"

namespace mimic {

using Rng = std::mt19937_64;

/// Seed of the independent random substream used by path `stream`.
std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t stream);

/// Relaxed control that may depend on the whole discretized path.
///
/// The path enters through a fixed-size memory: `start` initializes it from
/// x_0 and `observe` folds in each new grid state. `probabilities` writes the
/// probability vector over actions used on the step starting at time t.
struct PathControl {
    std::size_t memory_size = 0;
    std::function<void(std::span<const double> x0, std::span<double> memory)> start;
    std::function<void(std::span<const double> x, std::span<double> memory)> observe;
    std::function<void(std::span<const double> x, double t, std::span<const double> memory,
                       std::span<double> probs)>
        probabilities;
};

/// dX = b(X, U) dt + a(X)^{1/2} dW on R^d, simulated by Euler-Maruyama on a
/// uniform grid; the action is sampled at the start of each step.
struct DiffusionModel {
    int dim = 1;
    ActionSpace actions;
    std::function<void(std::span<const double> x, std::size_t u, std::span<double> drift)> drift;
    /// Every drift component must stay within +-drift_bound.
    double drift_bound = 0.0;
    /// Writes a(x) row-major; must be symmetric positive semidefinite.
    std::function<void(std::span<const double> x, std::span<double> a)> diffusion;
    PathControl control;
    std::function<void(Rng& rng, std::span<double> x0)> initial;
    double horizon = 1.0;
    int steps = 256;
};

/// Pure-jump process on the real line with jump intensity lambda(x, u) and
/// jump-size law gamma(x, u, .), simulated by thinning against
/// `intensity_bound`. The action is resampled at each grid time.
struct JumpModel {
    ActionSpace actions;
    std::function<double(double x, std::size_t u)> intensity;
    double intensity_bound = 0.0;
    std::function<double(double x, std::size_t u, Rng& rng)> jump;
    PathControl control;
    std::function<double(Rng& rng)> initial;
    double horizon = 1.0;
    int steps = 256;
};

using SdeModel = std::variant<DiffusionModel, JumpModel>;

int model_dim(const SdeModel& model);
int model_steps(const SdeModel& model);
double model_dt(const SdeModel& model);
const ActionSpace& model_actions(const SdeModel& model);

struct SimulationOptions {
    std::size_t paths = 1;
    std::uint64_t seed = 0;
    /// 0 picks the hardware concurrency. Results do not depend on it.
    unsigned threads = 1;
    /// Keep full trajectories (needed for projection).
    bool record_paths = true;
    /// Number of equally spaced marginal slices in (0, horizon].
    int slices = 8;
};

/// Full sample paths. States are stored [path][step][coordinate] for steps
/// 0..steps; actions [path][step] for steps 0..steps-1.
struct Trajectories {
    int dim = 1;
    int steps = 0;
    double dt = 0.0;
    std::size_t paths = 0;
    std::size_t num_actions = 0;
    std::vector<double> states;
    std::vector<std::uint8_t> actions;

    double state(std::size_t path, int step, int coord = 0) const {
        return states[(path * static_cast<std::size_t>(steps + 1) + static_cast<std::size_t>(step)) *
                          static_cast<std::size_t>(dim) +
                      static_cast<std::size_t>(coord)];
    }
    std::size_t action(std::size_t path, int step) const {
        return actions[path * static_cast<std::size_t>(steps) + static_cast<std::size_t>(step)];
    }
};

/// Sorted samples of each coordinate at each slice; samples[slice * dim + coord].
struct EmpiricalMarginals {
    std::vector<double> times;
    std::vector<int> steps;
    int dim = 1;
    std::size_t paths = 0;
    std::vector<std::vector<double>> samples;

    std::span<const double> slice(std::size_t k, int coord = 0) const {
        return samples[k * static_cast<std::size_t>(dim) + static_cast<std::size_t>(coord)];
    }
};

struct SimulationResult {
    std::optional<Trajectories> trajectories;
    EmpiricalMarginals marginals;
    /// Mimic runs only: lookups that fell outside every bin and were clamped.
    std::size_t escapes = 0;
};

/// Simulates `options.paths` independent paths. Path i draws from the
/// substream substream_seed(seed, i), so output is bit-identical for any
/// thread count. Throws std::domain_error when a(x) is not positive
/// semidefinite, a drift exceeds its bound, or an intensity its bound.
SimulationResult simulate(const SdeModel& model, const SimulationOptions& options);

/// Per-step estimate of P(U_n = u | X_n in bin) on a fixed-width grid.
struct PolicySlice {
    double lower = 0.0;
    double upper = 0.0;
    std::size_t bins = 1;
    /// Merged group of each grid bin.
    std::vector<std::size_t> group_of_bin;
    /// Per group: probability vector over actions and sample count.
    std::vector<std::vector<double>> probabilities;
    std::vector<std::size_t> counts;
    bool merged = false;

    /// Grid bin of x (clamped) and whether x fell outside [lower, upper].
    std::size_t bin_of(double x, bool& escaped) const;
};

struct ProjectedPolicy {
    double dt = 0.0;
    std::size_t num_actions = 0;
    std::vector<PolicySlice> slices;

    bool any_merged() const;
};

struct ProjectionOptions {
    std::size_t bins = 32;
    std::size_t min_count = 50;
    double lower_quantile = 0.001;
    double upper_quantile = 0.999;
};

/// Markovian projection of the realized actions: for each step, action
/// frequencies within fixed-width bins spanning the empirical quantile
/// range of X_n. Bins below `min_count` are merged into their adjacent
/// neighbour (the smaller one) until every group reaches the threshold or a
/// single group remains. One-dimensional states only.
ProjectedPolicy project_control(const Trajectories& paths, const ProjectionOptions& options = {});

/// Policy that is uniform over actions at every state and step.
ProjectedPolicy uniform_policy(int steps, double dt, std::size_t num_actions);

/// Same simulator with the control replaced by the table lookup
/// policy(bin(x_n), n).
SimulationResult simulate_mimic(const SdeModel& model, const ProjectedPolicy& policy,
                                const SimulationOptions& options);

struct SliceComparison {
    double time = 0.0;
    int coord = 0;
    double statistic = 0.0;
    double p_value = 1.0;
    double critical = 0.0;
    bool passed = true;
};

struct MarginalComparison {
    double level = 0.0;
    /// Per-slice level after the Bonferroni correction.
    double slice_level = 0.0;
    std::vector<SliceComparison> slices;
    bool passed = true;

    double max_statistic() const;
};

/// Two-sample Kolmogorov-Smirnov test at every slice; passes when every
/// slice passes at level / (number of slices).
MarginalComparison compare_marginals(const EmpiricalMarginals& a, const EmpiricalMarginals& b, double level);

/// CSV with header "time,coord,value"; values sorted within each slice.
void write_marginals_csv(std::ostream& out, const EmpiricalMarginals& marginals);

}  // namespace mimic
