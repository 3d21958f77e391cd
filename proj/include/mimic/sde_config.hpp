#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>

#include "mimic/controlled_sde.hpp"

namespace mimic {

/// A controlled-SDE mimic experiment: model from the built-in registry plus
/// sampling, projection and testing settings.
struct SdeExperiment {
    SdeExperiment(std::string name, SdeModel m) : model_name(std::move(name)), model(std::move(m)) {}

    std::string model_name;
    SdeModel model;
    std::size_t paths = 100'000;
    std::optional<std::uint64_t> seed;
    int slices = 8;
    double level = 0.01;
    ProjectionOptions projection;
};

/// Parses `key = value` lines ('#' starts a comment). Keys:
///   model      running-max | birth-death | brownian | line   (required)
///   control    model-specific control name
///   dim        state dimension (only brownian accepts dim > 1)
///   horizon, steps or dt, paths, seed, slices, level, bins, min_count
///   running-max: mu, sigma, x0, threshold
///   birth-death: slow_rate, fast_rate, slow_up, fast_up, switch_level, x0
/// Throws ParseError with the offending line number.
SdeExperiment parse_sde_config(std::string_view text);

/// Default experiment for a registry name.
SdeExperiment sde_fixture(const std::string& name);

}  // namespace mimic
