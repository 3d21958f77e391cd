#include "mimic/sde_config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>

#include "mimic/errors.hpp"
#include "mimic/fixtures.hpp"

namespace mimic {
namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

struct Entry {
    std::string value;
    std::size_t line;
};

class Settings {
public:
    explicit Settings(std::map<std::string, Entry> entries) : entries_(std::move(entries)) {}

    bool has(const std::string& key) const { return entries_.count(key) > 0; }

    std::string text(const std::string& key, const std::string& fallback) {
        used_.insert(key);
        const auto it = entries_.find(key);
        return it == entries_.end() ? fallback : it->second.value;
    }

    double number(const std::string& key, double fallback) {
        used_.insert(key);
        const auto it = entries_.find(key);
        if (it == entries_.end()) return fallback;
        double v = 0.0;
        const std::string& s = it->second.value;
        const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v))
            throw ParseError(it->second.line, key + ": expected a number, got '" + s + "'");
        return v;
    }

    template <class Int>
    Int integer(const std::string& key, Int fallback) {
        used_.insert(key);
        const auto it = entries_.find(key);
        if (it == entries_.end()) return fallback;
        Int v{};
        const std::string& s = it->second.value;
        const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc{} || ptr != s.data() + s.size())
            throw ParseError(it->second.line, key + ": expected an integer, got '" + s + "'");
        return v;
    }

    std::size_t line(const std::string& key) const {
        const auto it = entries_.find(key);
        return it == entries_.end() ? 0 : it->second.line;
    }

    /// Rejects keys that no reader consumed.
    void finish() const {
        for (const auto& [key, entry] : entries_)
            if (!used_.count(key)) throw ParseError(entry.line, "unknown or inapplicable key '" + key + "'");
    }

private:
    std::map<std::string, Entry> entries_;
    std::set<std::string> used_;
};

std::map<std::string, Entry> parse_entries(std::string_view text) {
    std::map<std::string, Entry> entries;
    std::size_t number = 0;
    while (!text.empty()) {
        ++number;
        const auto end = text.find('\n');
        std::string_view raw = text.substr(0, end);
        text = end == std::string_view::npos ? std::string_view{} : text.substr(end + 1);
        if (const auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
        raw = trim(raw);
        if (raw.empty()) continue;
        const auto eq = raw.find('=');
        if (eq == std::string_view::npos) throw ParseError(number, "expected 'key = value'");
        const std::string key(trim(raw.substr(0, eq)));
        const std::string value(trim(raw.substr(eq + 1)));
        if (key.empty() || value.empty()) throw ParseError(number, "expected 'key = value'");
        if (!entries.emplace(key, Entry{value, number}).second) throw ParseError(number, "duplicate key '" + key + "'");
    }
    return entries;
}

int steps_from(Settings& s, double horizon, int fallback) {
    if (s.has("steps") && s.has("dt")) throw ParseError(s.line("dt"), "give either steps or dt, not both");
    if (!s.has("dt")) return s.integer<int>("steps", fallback);
    const double dt = s.number("dt", 0.0);
    if (!(dt > 0.0)) throw ParseError(s.line("dt"), "dt must be positive");
    const double ratio = horizon / dt;
    const double rounded = std::round(ratio);
    if (rounded < 1.0 || std::abs(ratio - rounded) > 1e-9 * rounded)
        throw ParseError(s.line("dt"), "dt must divide the horizon");
    return static_cast<int>(rounded);
}

SdeExperiment finish(Settings& s, SdeExperiment e);

SdeExperiment build(Settings& s) {
    struct {
        std::string model_name;
        std::optional<SdeModel> model;
    } e;
    e.model_name = s.text("model", "");
    if (e.model_name.empty()) throw ParseError(0, "missing 'model' key");
    const std::size_t model_line = s.line("model");
    const int dim = s.integer<int>("dim", 1);

    auto wrap = [&](auto&& make) {
        try {
            return make();
        } catch (const ParseError&) {
            throw;
        } catch (const std::invalid_argument& err) {
            throw ParseError(model_line, err.what());
        }
    };

    if (e.model_name != "brownian" && dim != 1)
        throw ParseError(s.line("dim"), "model '" + e.model_name + "' is one-dimensional");
    if (e.model_name == "running-max") {
        fixtures::RunningMaxParams p;
        p.mu = s.number("mu", p.mu);
        p.sigma = s.number("sigma", p.sigma);
        p.x0 = s.number("x0", p.x0);
        p.threshold = s.number("threshold", p.threshold);
        p.horizon = s.number("horizon", p.horizon);
        p.steps = steps_from(s, p.horizon, p.steps);
        p.control = s.text("control", p.control);
        e.model = wrap([&] { return fixtures::running_max_model(p); });
    } else if (e.model_name == "birth-death") {
        fixtures::BirthDeathParams p;
        p.slow_rate = s.number("slow_rate", p.slow_rate);
        p.fast_rate = s.number("fast_rate", p.fast_rate);
        p.slow_up = s.number("slow_up", p.slow_up);
        p.fast_up = s.number("fast_up", p.fast_up);
        p.switch_level = s.number("switch_level", p.switch_level);
        p.x0 = s.number("x0", p.x0);
        p.horizon = s.number("horizon", p.horizon);
        p.steps = steps_from(s, p.horizon, p.steps);
        p.control = s.text("control", p.control);
        e.model = wrap([&] { return fixtures::birth_death_model(p); });
    } else if (e.model_name == "brownian") {
        const double horizon = s.number("horizon", 1.0);
        const int steps = steps_from(s, horizon, 256);
        e.model = wrap([&] { return fixtures::brownian_model(dim, horizon, steps); });
    } else if (e.model_name == "line") {
        const double x0 = s.number("x0", 0.0);
        const double horizon = s.number("horizon", 1.0);
        const int steps = steps_from(s, horizon, 256);
        e.model = wrap([&] { return fixtures::deterministic_line_model(x0, horizon, steps); });
    } else {
        throw ParseError(model_line, "unknown model '" + e.model_name + "'");
    }
    if (!(std::visit([](const auto& m) { return m.horizon; }, *e.model) > 0.0) || model_steps(*e.model) < 1)
        throw ParseError(model_line, "horizon and steps must be positive");
    return finish(s, SdeExperiment{e.model_name, std::move(*e.model)});
}

SdeExperiment finish(Settings& s, SdeExperiment e) {
    e.paths = s.integer<std::size_t>("paths", e.paths);
    if (e.paths < 1) throw ParseError(s.line("paths"), "paths must be at least 1");
    if (s.has("seed")) e.seed = s.integer<std::uint64_t>("seed", 0);
    e.slices = s.integer<int>("slices", e.slices);
    if (e.slices < 1 || e.slices > model_steps(e.model))
        throw ParseError(s.line("slices"), "slices must lie in [1, steps]");
    e.level = s.number("level", e.level);
    if (!(e.level > 0.0 && e.level < 1.0)) throw ParseError(s.line("level"), "level must lie in (0, 1)");
    e.projection.bins = s.integer<std::size_t>("bins", e.projection.bins);
    if (e.projection.bins < 1) throw ParseError(s.line("bins"), "bins must be at least 1");
    e.projection.min_count = s.integer<std::size_t>("min_count", e.projection.min_count);
    s.finish();
    return e;
}

}  // namespace

SdeExperiment parse_sde_config(std::string_view text) {
    Settings settings(parse_entries(text));
    return build(settings);
}

SdeExperiment sde_fixture(const std::string& name) {
    const auto names = fixtures::sde_names();
    if (std::find(names.begin(), names.end(), name) == names.end())
        throw std::invalid_argument("unknown SDE fixture '" + name + "'");
    return parse_sde_config("model = " + name + "\n");
}

}  // namespace mimic
