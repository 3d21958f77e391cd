#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace mimic {

/// Ordered set of distinct, non-empty identifiers. The tag keeps state and
/// action spaces from being mixed up.
template <class Tag>
class LabelSet {
public:
    explicit LabelSet(std::vector<std::string> labels) : labels_(std::move(labels)) {
        if (labels_.empty()) throw std::invalid_argument("label set must not be empty");
        for (std::size_t i = 0; i < labels_.size(); ++i) {
            if (labels_[i].empty()) throw std::invalid_argument("empty label");
            for (std::size_t j = 0; j < i; ++j)
                if (labels_[i] == labels_[j])
                    throw std::invalid_argument("duplicate label '" + labels_[i] + "'");
        }
    }

    /// Labels "0", "1", ..., "n-1".
    static LabelSet range(std::size_t n) {
        std::vector<std::string> labels;
        labels.reserve(n);
        for (std::size_t i = 0; i < n; ++i) labels.push_back(std::to_string(i));
        return LabelSet(std::move(labels));
    }

    std::size_t size() const noexcept { return labels_.size(); }
    const std::string& operator[](std::size_t i) const { return labels_.at(i); }
    const std::vector<std::string>& labels() const noexcept { return labels_; }

    std::optional<std::size_t> find(std::string_view label) const {
        for (std::size_t i = 0; i < labels_.size(); ++i)
            if (labels_[i] == label) return i;
        return std::nullopt;
    }

    bool operator==(const LabelSet&) const = default;

private:
    std::vector<std::string> labels_;
};

struct StateTag {};
struct ActionTag {};

using StateSpace = LabelSet<StateTag>;
using ActionSpace = LabelSet<ActionTag>;

}  // namespace mimic
