#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "mimic/labels.hpp"

namespace mimic {

/// Tolerance for "sums to one" on exact path-level tables.
inline constexpr double kNormalizationTolerance = 1e-12;

/// Hard cap on dense path tables.
inline constexpr std::size_t kMaxPathEntries = 10'000'000;

/// Mixed-radix layout of finite trajectories.
///
/// A trajectory is the coordinate tuple (x_0, u_0, x_1, u_1, ..., x_T) for
/// controlled processes and (x_0, ..., x_T) otherwise. Paths are numbered in
/// row-major order, so the first k coordinates of path i form the prefix
/// number i / tail(k) and the remaining ones the suffix number i % tail(k).
class PathShape {
public:
    PathShape(std::size_t num_states, std::size_t num_actions, int horizon);

    int horizon() const noexcept { return horizon_; }
    std::size_t num_states() const noexcept { return num_states_; }
    /// Zero for uncontrolled processes.
    std::size_t num_actions() const noexcept { return num_actions_; }
    bool controlled() const noexcept { return num_actions_ > 0; }

    std::size_t num_coords() const noexcept { return radix_.size(); }
    std::size_t radix(std::size_t coord) const { return radix_.at(coord); }
    std::size_t size() const noexcept { return tail_.front(); }
    /// Number of tuples formed by coordinates [coord, num_coords()).
    std::size_t tail(std::size_t coord) const { return tail_.at(coord); }

    std::size_t state_coord(int t) const;
    std::size_t action_coord(int t) const;

    std::size_t coordinate(std::size_t path, std::size_t coord) const {
        return (path / tail_[coord + 1]) % radix_[coord];
    }
    std::size_t state_at(std::size_t path, int t) const { return coordinate(path, state_coord(t)); }
    std::size_t action_at(std::size_t path, int t) const { return coordinate(path, action_coord(t)); }

    std::vector<std::size_t> decode(std::size_t path) const;
    std::size_t encode(std::span<const std::size_t> coords) const;

    bool operator==(const PathShape&) const = default;

private:
    std::size_t num_states_;
    std::size_t num_actions_;
    int horizon_;
    std::vector<std::size_t> radix_;
    std::vector<std::size_t> tail_;
};

/// Dense probability table over all trajectories of a finite-horizon,
/// finite-state (optionally controlled) discrete-time process.
class PathLaw {
public:
    /// Validates non-negativity, normalization (1e-12) and table size.
    PathLaw(StateSpace states, std::optional<ActionSpace> actions, int horizon,
            std::vector<double> prob);

    /// Builds a law from non-negative weights by dividing by their total.
    static PathLaw normalized(StateSpace states, std::optional<ActionSpace> actions, int horizon,
                              std::vector<double> weights);

    int horizon() const noexcept { return shape_.horizon(); }
    const StateSpace& states() const noexcept { return states_; }
    const std::optional<ActionSpace>& actions() const noexcept { return actions_; }
    bool controlled() const noexcept { return shape_.controlled(); }
    const PathShape& shape() const noexcept { return shape_; }

    std::size_t size() const noexcept { return prob_.size(); }
    double operator[](std::size_t path) const { return prob_[path]; }
    std::span<const double> probabilities() const noexcept { return prob_; }

    /// Same state space, action space and horizon.
    bool same_space(const PathLaw& other) const;

private:
    StateSpace states_;
    std::optional<ActionSpace> actions_;
    PathShape shape_;
    std::vector<double> prob_;
};

}  // namespace mimic
