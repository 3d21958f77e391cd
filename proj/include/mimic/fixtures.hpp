#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mimic/controlled_sde.hpp"
#include "mimic/entropy_min.hpp"
#include "mimic/occupation.hpp"
#include "mimic/path_law.hpp"

namespace mimic::fixtures {

/// Two states, T = 2: X_0 and X_1 independent uniform, X_2 = X_0.
/// Every marginal is uniform but time 1 is not a Markov point.
PathLaw memory_chain();

/// Two-state time-homogeneous Markov chain observed for T = 2 steps.
PathLaw already_markov();

/// i.i.d. uniform coordinates.
PathLaw product_uniform(std::size_t states = 2, int horizon = 2);

/// Markov law with uniform initial state and kernel I/2 + 1/(2m).
PathLaw lazy_uniform_walk(std::size_t states, int horizon);

/// All marginals of memory_chain() against the product-uniform reference.
MarginalConstraintSet memory_chain_constraints();

/// Product-uniform reference (two states, T = 2) with X_2 pinned to (3/4, 1/4).
MarginalConstraintSet terminal_skew_constraints();

/// Two states, two actions; the action equals X_0 forever.
ControlledChain history_dependent_chain();

/// k(x, u) = 1{x = 1} on the two-state chain above.
Eigen::MatrixXd indicator_cost();

struct RunningMaxParams {
    double mu = 1.0;
    double sigma = 1.0;
    double x0 = 0.0;
    /// Action "up" is taken iff the running maximum exceeds this level.
    double threshold = 0.5;
    double horizon = 1.0;
    int steps = 256;
    /// "running-max" (path dependent), "current-state" (up iff x > threshold)
    /// or "constant-up".
    std::string control = "running-max";
};

/// dX = mu U dt + sigma dW with actions {down = -1, up = +1}.
DiffusionModel running_max_model(const RunningMaxParams& params = {});

struct BirthDeathParams {
    double slow_rate = 1.0;
    double fast_rate = 3.0;
    double slow_up = 0.5;
    double fast_up = 0.65;
    /// The fast regime is used iff the running maximum has reached this level.
    double switch_level = 2.0;
    double x0 = 0.0;
    double horizon = 2.0;
    int steps = 256;
    /// "running-max" or "current-state" (fast iff x >= switch_level).
    std::string control = "running-max";
};

/// Continuous-time walk on the integers with actions {slow, fast}: jumps at
/// rate slow_rate or fast_rate, up with probability slow_up or fast_up.
JumpModel birth_death_model(const BirthDeathParams& params = {});

/// Zero drift, identity diffusion, started at the origin.
DiffusionModel brownian_model(int dim = 1, double horizon = 1.0, int steps = 256);

/// b(x, u) = u on actions {-1, +1} with a = 0 and the control fixed at +1.
DiffusionModel deterministic_line_model(double x0 = 0.0, double horizon = 1.0, int steps = 256);

/// Jump model with zero intensity.
JumpModel frozen_jump_model(double x0 = 0.0, double horizon = 1.0, int steps = 16);

/// Names accepted by the discrete subcommands and the SDE configuration.
std::vector<std::string> discrete_names();
std::vector<std::string> sde_names();

}  // namespace mimic::fixtures
