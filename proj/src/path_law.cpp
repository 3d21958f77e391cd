#include "mimic/path_law.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace mimic {

PathShape::PathShape(std::size_t num_states, std::size_t num_actions, int horizon)
    : num_states_(num_states), num_actions_(num_actions), horizon_(horizon) {
    if (num_states == 0) throw std::invalid_argument("state space must not be empty");
    if (horizon < 0) throw std::invalid_argument("horizon must be non-negative");
    for (int t = 0; t <= horizon; ++t) {
        radix_.push_back(num_states);
        if (controlled() && t < horizon) radix_.push_back(num_actions);
    }
    tail_.assign(radix_.size() + 1, 1);
    for (std::size_t k = radix_.size(); k-- > 0;) {
        if (tail_[k + 1] > kMaxPathEntries / radix_[k])
            throw std::length_error("path table exceeds " + std::to_string(kMaxPathEntries) +
                                    " entries");
        tail_[k] = tail_[k + 1] * radix_[k];
    }
}

std::size_t PathShape::state_coord(int t) const {
    if (t < 0 || t > horizon_) throw std::out_of_range("time index " + std::to_string(t) +
                                                       " outside [0, " + std::to_string(horizon_) + "]");
    return controlled() ? 2 * static_cast<std::size_t>(t) : static_cast<std::size_t>(t);
}

std::size_t PathShape::action_coord(int t) const {
    if (!controlled()) throw std::logic_error("uncontrolled path has no action coordinates");
    if (t < 0 || t >= horizon_)
        throw std::out_of_range("action time index " + std::to_string(t) + " outside [0, " +
                                std::to_string(horizon_) + ")");
    return 2 * static_cast<std::size_t>(t) + 1;
}

std::vector<std::size_t> PathShape::decode(std::size_t path) const {
    std::vector<std::size_t> coords(num_coords());
    for (std::size_t k = num_coords(); k-- > 0;) {
        coords[k] = path % radix_[k];
        path /= radix_[k];
    }
    return coords;
}

std::size_t PathShape::encode(std::span<const std::size_t> coords) const {
    if (coords.size() != num_coords()) throw std::invalid_argument("coordinate count mismatch");
    std::size_t path = 0;
    for (std::size_t k = 0; k < coords.size(); ++k) {
        if (coords[k] >= radix_[k]) throw std::out_of_range("coordinate out of range");
        path = path * radix_[k] + coords[k];
    }
    return path;
}

PathLaw::PathLaw(StateSpace states, std::optional<ActionSpace> actions, int horizon,
                 std::vector<double> prob)
    : states_(std::move(states)),
      actions_(std::move(actions)),
      shape_(states_.size(), actions_ ? actions_->size() : 0, horizon),
      prob_(std::move(prob)) {
    if (prob_.size() != shape_.size())
        throw std::invalid_argument("path table has " + std::to_string(prob_.size()) +
                                    " entries, expected " + std::to_string(shape_.size()));
    for (double p : prob_)
        if (!(p >= 0.0) || !std::isfinite(p))
            throw std::invalid_argument("path probabilities must be finite and non-negative");
    const double total = std::accumulate(prob_.begin(), prob_.end(), 0.0);
    if (std::abs(total - 1.0) > kNormalizationTolerance)
        throw std::invalid_argument("path probabilities sum to " + std::to_string(total) +
                                    ", not 1");
}

PathLaw PathLaw::normalized(StateSpace states, std::optional<ActionSpace> actions, int horizon,
                            std::vector<double> weights) {
    const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    if (!(total > 0.0) || !std::isfinite(total))
        throw std::invalid_argument("weights must have positive finite total");
    for (double& w : weights) w /= total;
    return PathLaw(std::move(states), std::move(actions), horizon, std::move(weights));
}

bool PathLaw::same_space(const PathLaw& other) const {
    return states_ == other.states_ && actions_ == other.actions_ && shape_ == other.shape_;
}

}  // namespace mimic
