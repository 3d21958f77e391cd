#include "mimic/report.hpp"

#include <chrono>
#include <ctime>
#include <ostream>
#include <stdexcept>

#include "mimic/text_io.hpp"

namespace mimic {

void Report::add(const std::string& key, const std::string& value) {
    if (key.empty() || key.find_first_of(" =\n") != std::string::npos)
        throw std::invalid_argument("invalid report key '" + key + "'");
    if (value.find('\n') != std::string::npos) throw std::invalid_argument("report values must be single-line");
    entries_.emplace_back(key, value);
}

void Report::add(const std::string& key, double value) { add(key, format_double(value)); }
void Report::add(const std::string& key, bool value) { add(key, std::string(value ? "true" : "false")); }
void Report::add(const std::string& key, std::int64_t value) { add(key, std::to_string(value)); }
void Report::add(const std::string& key, std::uint64_t value) { add(key, std::to_string(value)); }

std::string Report::value(const std::string& key) const {
    for (const auto& [k, v] : entries_)
        if (k == key) return v;
    return {};
}

void Report::write(std::ostream& out, bool timestamp) const {
    if (timestamp) out << "# generated " << utc_timestamp() << '\n';
    out << "report = " << title_ << '\n';
    for (const auto& [k, v] : entries_) out << k << " = " << v << '\n';
}

std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buffer[32];
    std::strftime(buffer, sizeof buffer, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buffer;
}

}  // namespace mimic
