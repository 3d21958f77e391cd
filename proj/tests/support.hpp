#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "mimic/entropy_min.hpp"
#include "mimic/occupation.hpp"
#include "mimic/path_law.hpp"

namespace support {

using Rng = std::mt19937_64;

/// Random law on m states over T steps; roughly `zero_fraction` of the
/// paths get probability zero. With `actions > 0` the law is controlled.
mimic::PathLaw random_law(Rng& rng, std::size_t m, int horizon, double zero_fraction = 0.2,
                          std::size_t actions = 0);

/// Law of a random time-inhomogeneous chain with strictly positive entries.
mimic::PathLaw random_positive_markov_law(Rng& rng, std::size_t m, int horizon);

/// Random feasible instance: positive Markov reference, targets taken from a
/// random positive law at a random non-empty subset of times.
mimic::MarginalConstraintSet random_constraint_set(Rng& rng, std::size_t m, int horizon);

/// Random chain whose control reads the memory (x_0, parity of visits to
/// state 0, last action). m <= 3 states and a <= 2 actions.
mimic::ControlledChain random_history_chain(Rng& rng, std::size_t m, std::size_t a);

/// Exact discounted occupation measure computed on the (memory, state)
/// product chain by a single linear solve over all reachable pairs.
Eigen::MatrixXd product_chain_occupation(const mimic::ControlledChain& chain, double beta);

/// Direct sums over decoded coordinates, independent of the library.
double oracle_prob_of_states(const mimic::PathLaw& law, const std::vector<std::pair<int, std::size_t>>& fixed);

}  // namespace support
