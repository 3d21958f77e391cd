#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

namespace mimic {

/// Ordered `key = value` report. The first written line is a timestamp
/// comment; everything after it depends only on the inputs.
class Report {
public:
    explicit Report(std::string title) : title_(std::move(title)) {}

    void add(const std::string& key, const std::string& value);
    void add(const std::string& key, const char* value) { add(key, std::string(value)); }
    void add(const std::string& key, double value);
    void add(const std::string& key, bool value);
    void add(const std::string& key, std::int64_t value);
    void add(const std::string& key, std::uint64_t value);
    template <class T>
        requires(std::is_integral_v<T> && !std::is_same_v<T, bool>)
    void add(const std::string& key, T value) {
        if constexpr (std::is_signed_v<T>) add(key, static_cast<std::int64_t>(value));
        else add(key, static_cast<std::uint64_t>(value));
    }

    /// Free-text line written as `note = ...`.
    void note(const std::string& text) { add("note", text); }

    const std::vector<std::pair<std::string, std::string>>& entries() const noexcept { return entries_; }
    /// Value of the first entry with this key, or empty.
    std::string value(const std::string& key) const;

    void write(std::ostream& out, bool timestamp = true) const;

private:
    std::string title_;
    std::vector<std::pair<std::string, std::string>> entries_;
};

/// UTC time as YYYY-MM-DDTHH:MM:SSZ.
std::string utc_timestamp();

}  // namespace mimic
