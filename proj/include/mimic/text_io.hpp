#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>

#include <Eigen/Dense>

#include "mimic/entropy_min.hpp"
#include "mimic/markov_chain.hpp"
#include "mimic/occupation.hpp"
#include "mimic/path_law.hpp"

namespace mimic {

// Plain-text tables. Every document starts with `kind <name>`; blank lines and
// text after '#' are ignored. Numbers are written in the shortest form (at
// most 17 significant digits) that reads back to the same double, so a
// write/read round trip is exact.
//
//   kind pathlaw                     kind markov-chain
//   horizon 2                        horizon 2
//   states a b                       states a b
//   actions l r        (optional)    actions l r          (optional)
//   path a l b r a 0.25              initial 0.5 0.5
//                                    kernel 0 a 0.9 0.1   (step, from, row)
//                                    policy 0 a 1 0       (step, state, row)
//
//   kind constraint-set              kind controlled-chain
//   (pathlaw lines: the reference)   states a b
//   constraint 2 0.75 0.25           actions l r
//                                    initial 1 0
//                                    dynamics l a 0 1     (action, from, row)
//                                    policy a 0.5 0.5     (state, row)
//                                    cost a 1 0           (optional; state, row)
//
// Path lines list every coordinate label in order; omitted paths have
// probability zero.

/// Shortest decimal text that parses back to exactly `value`.
std::string format_double(double value);

/// Kind declared by the first non-comment line.
std::string document_kind(std::string_view text);

void write_path_law(std::ostream& out, const PathLaw& law);
PathLaw read_path_law(std::string_view text);

void write_markov_chain(std::ostream& out, const MarkovChainModel& chain);
MarkovChainModel read_markov_chain(std::string_view text);

void write_constraint_set(std::ostream& out, const MarginalConstraintSet& set);
MarginalConstraintSet read_constraint_set(std::string_view text);

struct ControlledChainInput {
    ControlledChain chain;
    std::optional<Eigen::MatrixXd> cost;
};

/// Stationary policies only; history-dependent controls have no text form.
void write_controlled_chain(std::ostream& out, const ControlledChain& chain,
                            const std::optional<Eigen::MatrixXd>& cost = std::nullopt);
ControlledChainInput read_controlled_chain(std::string_view text);

}  // namespace mimic
