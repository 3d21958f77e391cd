#include "mimic/controlled_sde.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>
#include <thread>

#include <Eigen/Dense>

#include "mimic/ks_test.hpp"
#include "mimic/text_io.hpp"

namespace mimic {
namespace {

constexpr double kProbabilitySlack = 1e-9;
constexpr double kBoundSlack = 1e-12;

std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

void validate_common(std::size_t num_actions, double horizon, int steps, const PathControl& control) {
    if (num_actions == 0 || num_actions > 255) throw std::invalid_argument("need between 1 and 255 actions");
    if (!(horizon > 0.0) || steps < 1) throw std::invalid_argument("horizon and step count must be positive");
    if (!control.probabilities) throw std::invalid_argument("control has no probability function");
}

void validate(const DiffusionModel& m) {
    validate_common(m.actions.size(), m.horizon, m.steps, m.control);
    if (m.dim < 1) throw std::invalid_argument("dimension must be positive");
    if (!m.drift || !m.diffusion || !m.initial) throw std::invalid_argument("diffusion model is incomplete");
    if (!(m.drift_bound >= 0.0)) throw std::invalid_argument("drift bound must be non-negative");
}

void validate(const JumpModel& m) {
    validate_common(m.actions.size(), m.horizon, m.steps, m.control);
    if (!m.intensity || !m.jump || !m.initial) throw std::invalid_argument("jump model is incomplete");
    if (!(m.intensity_bound >= 0.0) || !std::isfinite(m.intensity_bound))
        throw std::invalid_argument("intensity bound must be finite and non-negative");
}

std::span<const double> checked(std::span<const double> probs) {
    double sum = 0.0;
    for (double p : probs) {
        if (!(p >= -kProbabilitySlack)) throw std::invalid_argument("control produced a negative probability");
        sum += p;
    }
    if (std::abs(sum - 1.0) > kProbabilitySlack) throw std::invalid_argument("control probabilities do not sum to 1");
    return probs;
}

std::size_t sample_action(std::span<const double> probs, Rng& rng) {
    const double target = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    double cumulative = 0.0;
    for (std::size_t u = 0; u + 1 < probs.size(); ++u) {
        cumulative += std::max(probs[u], 0.0);
        if (target < cumulative) return u;
    }
    // Skip trailing zero-probability actions that rounding could otherwise select.
    std::size_t u = probs.size() - 1;
    while (u > 0 && !(probs[u] > 0.0)) --u;
    return u;
}

class HistoryChooser {
public:
    HistoryChooser(const PathControl& control, std::size_t num_actions)
        : control_(control), memory_(control.memory_size), probs_(num_actions) {}

    void start(std::span<const double> x) {
        std::fill(memory_.begin(), memory_.end(), 0.0);
        if (control_.start) control_.start(x, memory_);
    }
    std::span<const double> probabilities(std::span<const double> x, int, double t) {
        control_.probabilities(x, t, memory_, probs_);
        return checked(probs_);
    }
    void observe(std::span<const double> x) {
        if (control_.observe) control_.observe(x, memory_);
    }
    std::size_t escapes() const { return 0; }

private:
    const PathControl& control_;
    std::vector<double> memory_;
    std::vector<double> probs_;
};

class TableChooser {
public:
    explicit TableChooser(const ProjectedPolicy& policy) : policy_(policy) {}

    void start(std::span<const double>) {}
    std::span<const double> probabilities(std::span<const double> x, int step, double) {
        const PolicySlice& slice = policy_.slices[static_cast<std::size_t>(step)];
        bool escaped = false;
        const std::size_t bin = slice.bin_of(x[0], escaped);
        if (escaped) ++escapes_;
        return slice.probabilities[slice.group_of_bin[bin]];
    }
    void observe(std::span<const double>) {}
    std::size_t escapes() const { return escapes_; }

private:
    const ProjectedPolicy& policy_;
    std::size_t escapes_ = 0;
};

class DiffusionStepper {
public:
    explicit DiffusionStepper(const DiffusionModel& m)
        : m_(m),
          dt_(m.horizon / m.steps),
          x_(static_cast<std::size_t>(m.dim)),
          b_(static_cast<std::size_t>(m.dim)),
          a_(static_cast<std::size_t>(m.dim * m.dim)),
          z_(m.dim) {}

    std::span<double> state() { return x_; }
    void init(Rng& rng) {
        // The distribution caches a spare variate; paths must not share it.
        normal_.reset();
        m_.initial(rng, x_);
    }

    void step(std::size_t u, Rng& rng) {
        m_.drift(x_, u, b_);
        const double bound = m_.drift_bound * (1.0 + kBoundSlack);
        for (double bi : b_)
            if (!(std::abs(bi) <= bound))
                throw std::domain_error("drift " + std::to_string(bi) + " exceeds declared bound " +
                                        std::to_string(m_.drift_bound));
        m_.diffusion(x_, a_);
        if (m_.dim == 1) {
            const double a = a_[0];
            if (!(a >= -kBoundSlack)) throw std::domain_error("diffusion coefficient is negative");
            const double z = normal_(rng);
            x_[0] += b_[0] * dt_ + std::sqrt(std::max(a, 0.0) * dt_) * z;
            return;
        }
        for (int i = 0; i < m_.dim; ++i) z_(i) = normal_(rng);
        const Eigen::Map<const Eigen::MatrixXd> a(a_.data(), m_.dim, m_.dim);
        const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
        if ((a - a.transpose()).cwiseAbs().maxCoeff() > kBoundSlack * scale)
            throw std::domain_error("diffusion matrix is not symmetric");
        const Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
        if (ldlt.info() != Eigen::Success || ldlt.vectorD().minCoeff() < -kBoundSlack * scale)
            throw std::domain_error("diffusion matrix is not positive semidefinite");
        const Eigen::VectorXd root_d = ldlt.vectorD().cwiseMax(0.0).cwiseSqrt();
        const Eigen::MatrixXd lower = ldlt.matrixL();
        const Eigen::VectorXd noise =
            ldlt.transpositionsP().transpose() * (lower * root_d.cwiseProduct(z_)) * std::sqrt(dt_);
        for (int i = 0; i < m_.dim; ++i) x_[static_cast<std::size_t>(i)] += b_[static_cast<std::size_t>(i)] * dt_ + noise(i);
    }

private:
    const DiffusionModel& m_;
    double dt_;
    std::vector<double> x_, b_, a_;
    Eigen::VectorXd z_;
    std::normal_distribution<double> normal_;
};

class JumpStepper {
public:
    explicit JumpStepper(const JumpModel& m) : m_(m), dt_(m.horizon / m.steps), x_(1) {}

    std::span<double> state() { return x_; }
    void init(Rng& rng) { x_[0] = m_.initial(rng); }

    void step(std::size_t u, Rng& rng) {
        const double bound = m_.intensity_bound;
        if (bound == 0.0) {
            check_intensity(u);
            return;
        }
        std::exponential_distribution<double> gap(bound);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        double s = gap(rng);
        while (s < dt_) {
            const double rate = check_intensity(u);
            if (unit(rng) * bound < rate) x_[0] += m_.jump(x_[0], u, rng);
            s += gap(rng);
        }
    }

private:
    double check_intensity(std::size_t u) const {
        const double rate = m_.intensity(x_[0], u);
        if (!(rate >= 0.0) || rate > m_.intensity_bound * (1.0 + kBoundSlack))
            throw std::domain_error("intensity " + std::to_string(rate) + " outside [0, " +
                                    std::to_string(m_.intensity_bound) + "]");
        return rate;
    }

    const JumpModel& m_;
    double dt_;
    std::vector<double> x_;
};

std::vector<int> slice_steps(int steps, int slices) {
    if (slices < 1) throw std::invalid_argument("need at least one marginal slice");
    if (slices > steps) throw std::invalid_argument("more slices than time steps");
    std::vector<int> out;
    for (int k = 1; k <= slices; ++k)
        out.push_back(static_cast<int>(static_cast<long long>(k) * steps / slices));
    return out;
}

/// Shared output buffers; every path writes only its own entries.
struct Sink {
    int dim = 1;
    int steps = 0;
    std::vector<int> slice_steps;
    std::vector<double>* states = nullptr;
    std::vector<std::uint8_t>* actions = nullptr;
    std::vector<std::vector<double>>* slices = nullptr;

    void record(std::size_t path, int step, std::span<const double> x, std::size_t& next_slice) const {
        const auto d = static_cast<std::size_t>(dim);
        if (states) {
            const std::size_t offset = (path * static_cast<std::size_t>(steps + 1) + static_cast<std::size_t>(step)) * d;
            std::copy(x.begin(), x.end(), states->begin() + static_cast<std::ptrdiff_t>(offset));
        }
        if (next_slice < slice_steps.size() && slice_steps[next_slice] == step) {
            for (std::size_t c = 0; c < d; ++c) (*slices)[next_slice * d + c][path] = x[c];
            ++next_slice;
        }
    }
};

template <class Stepper, class Chooser>
void simulate_path(Stepper& stepper, Chooser& chooser, Rng& rng, std::size_t path, double dt, const Sink& sink) {
    std::span<double> x = stepper.state();
    stepper.init(rng);
    chooser.start(x);
    std::size_t next_slice = 0;
    sink.record(path, 0, x, next_slice);
    for (int n = 0; n < sink.steps; ++n) {
        const std::size_t u = sample_action(chooser.probabilities(x, n, n * dt), rng);
        if (sink.actions) (*sink.actions)[path * static_cast<std::size_t>(sink.steps) + static_cast<std::size_t>(n)] =
            static_cast<std::uint8_t>(u);
        stepper.step(u, rng);
        chooser.observe(x);
        sink.record(path, n + 1, x, next_slice);
    }
}

template <class Model, class Stepper, class MakeChooser>
SimulationResult run(const Model& model, int dim, const SimulationOptions& options, MakeChooser make_chooser) {
    if (options.paths < 1) throw std::invalid_argument("need at least one path");
    const int steps = model.steps;
    const double dt = model.horizon / steps;

    SimulationResult result;
    Sink sink;
    sink.dim = dim;
    sink.steps = steps;
    sink.slice_steps = slice_steps(steps, options.slices);

    if (options.record_paths) {
        Trajectories& tr = result.trajectories.emplace();
        tr.dim = dim;
        tr.steps = steps;
        tr.dt = dt;
        tr.paths = options.paths;
        tr.num_actions = model.actions.size();
        tr.states.resize(options.paths * static_cast<std::size_t>(steps + 1) * static_cast<std::size_t>(dim));
        tr.actions.resize(options.paths * static_cast<std::size_t>(steps));
        sink.states = &tr.states;
        sink.actions = &tr.actions;
    }
    EmpiricalMarginals& em = result.marginals;
    em.dim = dim;
    em.paths = options.paths;
    em.steps = sink.slice_steps;
    for (int s : em.steps) em.times.push_back(s * dt);
    em.samples.assign(em.steps.size() * static_cast<std::size_t>(dim), std::vector<double>(options.paths));
    sink.slices = &em.samples;

    unsigned threads = options.threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : options.threads;
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, options.paths));

    std::vector<std::size_t> escapes(threads, 0);
    std::vector<std::exception_ptr> errors(threads);
    auto work = [&](unsigned w) {
        try {
            const std::size_t begin = options.paths * w / threads;
            const std::size_t end = options.paths * (w + 1) / threads;
            Stepper stepper(model);
            auto chooser = make_chooser();
            for (std::size_t path = begin; path < end; ++path) {
                Rng rng(substream_seed(options.seed, path));
                simulate_path(stepper, chooser, rng, path, dt, sink);
            }
            escapes[w] = chooser.escapes();
        } catch (...) {
            errors[w] = std::current_exception();
        }
    };
    if (threads == 1) {
        work(0);
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < threads; ++w) pool.emplace_back(work, w);
        for (auto& t : pool) t.join();
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);

    result.escapes = std::accumulate(escapes.begin(), escapes.end(), std::size_t{0});
    for (auto& s : em.samples) std::sort(s.begin(), s.end());
    return result;
}

double quantile(std::vector<double>& values, double q) {
    const auto k = static_cast<std::size_t>(std::floor(q * static_cast<double>(values.size() - 1)));
    std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(k), values.end());
    return values[k];
}

struct Group {
    std::size_t first, last, count;
    std::vector<std::size_t> actions;
};

PolicySlice project_step(const Trajectories& tr, int step, const ProjectionOptions& opt, std::vector<double>& scratch) {
    const std::size_t n = tr.paths, a = tr.num_actions;
    for (std::size_t p = 0; p < n; ++p) scratch[p] = tr.state(p, step);

    PolicySlice slice;
    slice.lower = quantile(scratch, opt.lower_quantile);
    slice.upper = quantile(scratch, opt.upper_quantile);
    const double width = slice.upper - slice.lower;
    const bool degenerate = !(width > 1e-12 * std::max(1.0, std::abs(slice.lower)));
    slice.bins = degenerate ? 1 : opt.bins;

    std::vector<Group> groups(slice.bins);
    for (std::size_t b = 0; b < slice.bins; ++b) groups[b] = Group{b, b, 0, std::vector<std::size_t>(a, 0)};
    bool escaped = false;
    for (std::size_t p = 0; p < n; ++p) {
        Group& g = groups[slice.bin_of(tr.state(p, step), escaped)];
        ++g.count;
        ++g.actions[tr.action(p, step)];
    }

    while (groups.size() > 1) {
        const auto smallest = std::min_element(groups.begin(), groups.end(),
                                               [](const Group& x, const Group& y) { return x.count < y.count; });
        if (smallest->count >= opt.min_count) break;
        const auto i = static_cast<std::size_t>(smallest - groups.begin());
        std::size_t j;
        if (i == 0) j = 1;
        else if (i + 1 == groups.size()) j = i - 1;
        else j = groups[i + 1].count < groups[i - 1].count ? i + 1 : i - 1;
        const std::size_t lo = std::min(i, j), hi = std::max(i, j);
        groups[lo].last = groups[hi].last;
        groups[lo].count += groups[hi].count;
        for (std::size_t u = 0; u < a; ++u) groups[lo].actions[u] += groups[hi].actions[u];
        groups.erase(groups.begin() + static_cast<std::ptrdiff_t>(hi));
    }

    slice.merged = degenerate || groups.size() < slice.bins;
    slice.group_of_bin.resize(slice.bins);
    for (std::size_t g = 0; g < groups.size(); ++g) {
        for (std::size_t b = groups[g].first; b <= groups[g].last; ++b) slice.group_of_bin[b] = g;
        std::vector<double> probs(a);
        for (std::size_t u = 0; u < a; ++u)
            probs[u] = static_cast<double>(groups[g].actions[u]) / static_cast<double>(groups[g].count);
        slice.probabilities.push_back(std::move(probs));
        slice.counts.push_back(groups[g].count);
    }
    return slice;
}

}  // namespace

std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t stream) {
    return splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x632BE59BD9B4E019ULL));
}

int model_dim(const SdeModel& model) {
    return std::holds_alternative<DiffusionModel>(model) ? std::get<DiffusionModel>(model).dim : 1;
}

int model_steps(const SdeModel& model) {
    return std::visit([](const auto& m) { return m.steps; }, model);
}

double model_dt(const SdeModel& model) {
    return std::visit([](const auto& m) { return m.horizon / m.steps; }, model);
}

const ActionSpace& model_actions(const SdeModel& model) {
    return std::visit([](const auto& m) -> const ActionSpace& { return m.actions; }, model);
}

SimulationResult simulate(const SdeModel& model, const SimulationOptions& options) {
    if (const auto* d = std::get_if<DiffusionModel>(&model)) {
        validate(*d);
        return run<DiffusionModel, DiffusionStepper>(*d, d->dim, options, [d] {
            return HistoryChooser(d->control, d->actions.size());
        });
    }
    const auto& j = std::get<JumpModel>(model);
    validate(j);
    return run<JumpModel, JumpStepper>(j, 1, options,
                                       [&j] { return HistoryChooser(j.control, j.actions.size()); });
}

std::size_t PolicySlice::bin_of(double x, bool& escaped) const {
    escaped = x < lower || x > upper;
    if (bins == 1) return 0;
    const double pos = (x - lower) / (upper - lower) * static_cast<double>(bins);
    if (!(pos > 0.0)) return 0;
    return std::min(static_cast<std::size_t>(pos), bins - 1);
}

bool ProjectedPolicy::any_merged() const {
    return std::any_of(slices.begin(), slices.end(), [](const PolicySlice& s) { return s.merged; });
}

ProjectedPolicy project_control(const Trajectories& paths, const ProjectionOptions& options) {
    if (paths.dim != 1) throw std::invalid_argument("projection supports one-dimensional states only");
    if (paths.paths < 1) throw std::invalid_argument("projection needs at least one path");
    if (options.bins < 1) throw std::invalid_argument("need at least one bin");
    if (!(options.lower_quantile >= 0.0 && options.lower_quantile < options.upper_quantile &&
          options.upper_quantile <= 1.0))
        throw std::invalid_argument("quantile range must satisfy 0 <= lower < upper <= 1");
    ProjectedPolicy policy;
    policy.dt = paths.dt;
    policy.num_actions = paths.num_actions;
    std::vector<double> scratch(paths.paths);
    for (int n = 0; n < paths.steps; ++n) policy.slices.push_back(project_step(paths, n, options, scratch));
    return policy;
}

ProjectedPolicy uniform_policy(int steps, double dt, std::size_t num_actions) {
    if (steps < 1 || num_actions < 1) throw std::invalid_argument("need positive steps and actions");
    ProjectedPolicy policy;
    policy.dt = dt;
    policy.num_actions = num_actions;
    PolicySlice slice;
    slice.group_of_bin = {0};
    slice.probabilities = {std::vector<double>(num_actions, 1.0 / static_cast<double>(num_actions))};
    slice.counts = {0};
    slice.lower = -std::numeric_limits<double>::infinity();
    slice.upper = std::numeric_limits<double>::infinity();
    policy.slices.assign(static_cast<std::size_t>(steps), slice);
    return policy;
}

SimulationResult simulate_mimic(const SdeModel& model, const ProjectedPolicy& policy,
                                const SimulationOptions& options) {
    if (model_dim(model) != 1) throw std::invalid_argument("mimic supports one-dimensional states only");
    if (policy.slices.size() != static_cast<std::size_t>(model_steps(model)) ||
        std::abs(policy.dt - model_dt(model)) > 1e-12 * model_dt(model))
        throw std::invalid_argument("policy does not cover the model's time grid");
    if (policy.num_actions != model_actions(model).size())
        throw std::invalid_argument("policy and model disagree on the number of actions");
    auto make = [&policy] { return TableChooser(policy); };
    if (const auto* d = std::get_if<DiffusionModel>(&model)) {
        validate(*d);
        return run<DiffusionModel, DiffusionStepper>(*d, 1, options, make);
    }
    const auto& j = std::get<JumpModel>(model);
    validate(j);
    return run<JumpModel, JumpStepper>(j, 1, options, make);
}

double MarginalComparison::max_statistic() const {
    double m = 0.0;
    for (const auto& s : slices) m = std::max(m, s.statistic);
    return m;
}

MarginalComparison compare_marginals(const EmpiricalMarginals& a, const EmpiricalMarginals& b, double level) {
    if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("level must lie in (0, 1)");
    if (a.dim != b.dim || a.steps != b.steps || a.times.size() != b.times.size())
        throw std::invalid_argument("marginals are on mismatched grids");
    for (std::size_t k = 0; k < a.times.size(); ++k)
        if (std::abs(a.times[k] - b.times[k]) > 1e-12 * std::max(1.0, std::abs(a.times[k])))
            throw std::invalid_argument("marginals are on mismatched grids");

    MarginalComparison report;
    report.level = level;
    const std::size_t tests = a.times.size() * static_cast<std::size_t>(a.dim);
    report.slice_level = level / static_cast<double>(tests);
    const double critical = ks_critical_value(report.slice_level, a.paths, b.paths);
    for (std::size_t k = 0; k < a.times.size(); ++k) {
        for (int c = 0; c < a.dim; ++c) {
            SliceComparison s;
            s.time = a.times[k];
            s.coord = c;
            s.statistic = ks_statistic(a.slice(k, c), b.slice(k, c));
            s.p_value = ks_p_value(s.statistic, a.paths, b.paths);
            s.critical = critical;
            s.passed = s.p_value > report.slice_level;
            report.passed = report.passed && s.passed;
            report.slices.push_back(s);
        }
    }
    return report;
}

void write_marginals_csv(std::ostream& out, const EmpiricalMarginals& marginals) {
    out << "time,coord,value\n";
    for (std::size_t k = 0; k < marginals.times.size(); ++k)
        for (int c = 0; c < marginals.dim; ++c)
            for (double v : marginals.slice(k, c))
                out << format_double(marginals.times[k]) << ',' << c << ',' << format_double(v) << '\n';
}

}  // namespace mimic
