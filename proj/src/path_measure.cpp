#include "mimic/path_measure.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "mimic/errors.hpp"

namespace mimic {
namespace {

constexpr double kMarkovReferenceTolerance = 1e-10;

void require_interior(const PathLaw& law, int s) {
    if (s <= 0 || s >= law.horizon())
        throw std::invalid_argument("time " + std::to_string(s) + " is not interior to [0, " +
                                    std::to_string(law.horizon()) + "]");
}

void require_step(const PathLaw& law, int t) {
    if (t < 0 || t >= law.horizon())
        throw std::out_of_range("step index " + std::to_string(t) + " outside [0, " +
                                std::to_string(law.horizon()) + ")");
}

/// Mass of each prefix formed by the first `ncoords` coordinates.
std::vector<double> prefix_mass(const PathLaw& law, std::size_t ncoords) {
    const std::size_t tail = law.shape().tail(ncoords);
    std::vector<double> mass(law.size() / tail, 0.0);
    for (std::size_t i = 0; i < law.size(); ++i) mass[i / tail] += law[i];
    return mass;
}

/// Mass of each suffix formed by coordinates [from, end).
std::vector<double> suffix_mass(const PathLaw& law, std::size_t from) {
    const std::size_t tail = law.shape().tail(from);
    std::vector<double> mass(tail, 0.0);
    for (std::size_t i = 0; i < law.size(); ++i) mass[i % tail] += law[i];
    return mass;
}

void require_dominated(const PathLaw& p, const PathLaw& p0) {
    if (!p.same_space(p0)) throw std::invalid_argument("laws live on different path spaces");
    for (std::size_t i = 0; i < p.size(); ++i)
        if (p[i] > 0.0 && p0[i] <= 0.0)
            throw DominationError("law charges path " + std::to_string(i) +
                                  " which the reference does not");
}

}  // namespace

Eigen::VectorXd marginal(const PathLaw& law, int t) {
    const auto& shape = law.shape();
    const std::size_t coord = shape.state_coord(t);
    Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(shape.num_states()));
    for (std::size_t i = 0; i < law.size(); ++i)
        out(static_cast<Eigen::Index>(shape.coordinate(i, coord))) += law[i];
    return out;
}

Eigen::MatrixXd pair_marginal(const PathLaw& law, int t) {
    require_step(law, t);
    const auto& shape = law.shape();
    const auto m = static_cast<Eigen::Index>(shape.num_states());
    const std::size_t c0 = shape.state_coord(t), c1 = shape.state_coord(t + 1);
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(m, m);
    for (std::size_t i = 0; i < law.size(); ++i)
        out(static_cast<Eigen::Index>(shape.coordinate(i, c0)),
            static_cast<Eigen::Index>(shape.coordinate(i, c1))) += law[i];
    return out;
}

Eigen::MatrixXd state_action_marginal(const PathLaw& law, int t) {
    require_step(law, t);
    const auto& shape = law.shape();
    if (!shape.controlled()) throw std::invalid_argument("law has no actions");
    const std::size_t cx = shape.state_coord(t), cu = shape.action_coord(t);
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(shape.num_states()),
                                                static_cast<Eigen::Index>(shape.num_actions()));
    for (std::size_t i = 0; i < law.size(); ++i)
        out(static_cast<Eigen::Index>(shape.coordinate(i, cx)),
            static_cast<Eigen::Index>(shape.coordinate(i, cu))) += law[i];
    return out;
}

namespace {

/// Normalizes rows in place; zero rows become uniform and are flagged.
std::vector<bool> condition_rows(Eigen::MatrixXd& joint) {
    std::vector<bool> null_rows(static_cast<std::size_t>(joint.rows()), false);
    for (Eigen::Index r = 0; r < joint.rows(); ++r) {
        const double mass = joint.row(r).sum();
        if (mass > 0.0) {
            joint.row(r) /= mass;
        } else {
            joint.row(r).setConstant(1.0 / static_cast<double>(joint.cols()));
            null_rows[static_cast<std::size_t>(r)] = true;
        }
    }
    return null_rows;
}

}  // namespace

TransitionKernel transition_kernel(const PathLaw& law, int t) {
    TransitionKernel out{pair_marginal(law, t), {}};
    out.null_rows = condition_rows(out.matrix);
    return out;
}

MarkovChainModel markov_mimic(const PathLaw& law) {
    std::vector<Eigen::MatrixXd> kernels;
    for (int t = 0; t < law.horizon(); ++t) kernels.push_back(transition_kernel(law, t).matrix);
    if (!law.controlled()) return MarkovChainModel(law.states(), marginal(law, 0), std::move(kernels));

    std::vector<Eigen::MatrixXd> policy;
    for (int t = 0; t < law.horizon(); ++t) {
        Eigen::MatrixXd rows = state_action_marginal(law, t);
        condition_rows(rows);
        policy.push_back(std::move(rows));
    }
    return MarkovChainModel(law.states(), *law.actions(), marginal(law, 0), std::move(kernels),
                            std::move(policy));
}

PathLaw law_of(const MarkovChainModel& chain, int horizon) {
    if (horizon < 0) throw std::invalid_argument("horizon must be non-negative");
    if (horizon > chain.num_steps())
        throw std::invalid_argument("horizon " + std::to_string(horizon) + " exceeds the " +
                                    std::to_string(chain.num_steps()) + " available kernels");
    // Validates the table size before any allocation.
    const PathShape shape(chain.states().size(), chain.controlled() ? chain.actions()->size() : 0,
                          horizon);
    const std::size_t m = shape.num_states();
    const std::size_t a = shape.num_actions();

    // Grow the prefix table one coordinate at a time; the last state of a
    // prefix ending in a state is i % m, of one ending in an action (i / a) % m.
    std::vector<double> prefix(chain.initial().data(), chain.initial().data() + m);
    for (int t = 0; t < horizon; ++t) {
        const auto& kernel = chain.kernels()[static_cast<std::size_t>(t)];
        if (chain.controlled()) {
            const auto& policy = chain.policy()[static_cast<std::size_t>(t)];
            std::vector<double> next(prefix.size() * a);
            for (std::size_t i = 0; i < prefix.size(); ++i)
                for (std::size_t u = 0; u < a; ++u)
                    next[i * a + u] = prefix[i] * policy(static_cast<Eigen::Index>(i % m),
                                                         static_cast<Eigen::Index>(u));
            prefix = std::move(next);
        }
        std::vector<double> next(prefix.size() * m);
        for (std::size_t i = 0; i < prefix.size(); ++i) {
            const std::size_t x = chain.controlled() ? (i / a) % m : i % m;
            for (std::size_t y = 0; y < m; ++y)
                next[i * m + y] =
                    prefix[i] * kernel(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(y));
        }
        prefix = std::move(next);
    }
    return PathLaw(chain.states(), chain.actions(), horizon, std::move(prefix));
}

double relative_entropy(const PathLaw& p, const PathLaw& p0) {
    require_dominated(p, p0);
    double d = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i)
        if (p[i] > 0.0) d += p[i] * std::log(p[i] / p0[i]);
    return std::max(d, 0.0);
}

double total_variation(const PathLaw& a, const PathLaw& b) {
    if (!a.same_space(b)) throw std::invalid_argument("laws live on different path spaces");
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) sum += std::abs(a[i] - b[i]);
    return 0.5 * sum;
}

LikelihoodRatio::LikelihoodRatio(PathLaw base, int time_index, std::vector<double> values)
    : base_(std::move(base)), time_index_(time_index), values_(std::move(values)) {
    tail_ = base_.shape().tail(base_.shape().state_coord(time_index_) + 1);
    if (values_.size() != base_.size() / tail_)
        throw std::invalid_argument("likelihood ratio table has the wrong size");
    for (double v : values_)
        if (!(v >= 0.0) || !std::isfinite(v))
            throw std::invalid_argument("likelihood ratio must be finite and non-negative");
    if (std::abs(expectation() - 1.0) > kDensityTolerance)
        throw std::invalid_argument("likelihood ratio does not integrate to 1 under the base law");
}

double LikelihoodRatio::expectation() const {
    double e = 0.0;
    for (std::size_t i = 0; i < base_.size(); ++i) e += base_[i] * at_path(i);
    return e;
}

LikelihoodRatio LikelihoodRatio::conditioned_on_prefix(int t) const {
    if (t < 0 || t > time_index_)
        throw std::out_of_range("conditioning time " + std::to_string(t) + " after ratio time " +
                                std::to_string(time_index_));
    const std::size_t tail = base_.shape().tail(base_.shape().state_coord(t) + 1);
    std::vector<double> weighted(base_.size() / tail, 0.0), mass(base_.size() / tail, 0.0);
    for (std::size_t i = 0; i < base_.size(); ++i) {
        weighted[i / tail] += base_[i] * at_path(i);
        mass[i / tail] += base_[i];
    }
    for (std::size_t k = 0; k < weighted.size(); ++k)
        weighted[k] = mass[k] > 0.0 ? weighted[k] / mass[k] : 0.0;
    return LikelihoodRatio(base_, t, std::move(weighted));
}

LikelihoodRatio radon_nikodym(const PathLaw& p, const PathLaw& p0, int t) {
    if (!p.same_space(p0)) throw std::invalid_argument("laws live on different path spaces");
    const std::size_t ncoords = p.shape().state_coord(t) + 1;
    const auto num = prefix_mass(p, ncoords);
    const auto den = prefix_mass(p0, ncoords);
    std::vector<double> ratio(num.size(), 0.0);
    for (std::size_t k = 0; k < num.size(); ++k) {
        if (den[k] > 0.0) {
            ratio[k] = num[k] / den[k];
        } else if (num[k] > 0.0) {
            throw DominationError("law charges prefix " + std::to_string(k) + " at time " +
                                  std::to_string(t) + " which the reference does not");
        }
    }
    return LikelihoodRatio(p0, t, std::move(ratio));
}

MarkovPointTest is_markov_point(const PathLaw& law, int s, double tol) {
    require_interior(law, s);
    const auto& shape = law.shape();
    const std::size_t cs = shape.state_coord(s);
    const std::size_t rest = shape.tail(cs + 1);
    const std::size_t m = shape.num_states();

    const auto prefix = prefix_mass(law, cs + 1);
    const auto future = suffix_mass(law, cs);  // indexed by x_s * rest + r
    std::vector<double> state_mass(m, 0.0);
    for (std::size_t k = 0; k < future.size(); ++k) state_mass[k / rest] += future[k];

    MarkovPointTest out;
    std::size_t worst = prefix.size();
    for (std::size_t k = 0; k < prefix.size(); ++k) {
        if (!(prefix[k] > 0.0)) continue;
        const std::size_t x = k % m;
        double gap = 0.0;
        for (std::size_t r = 0; r < rest; ++r)
            gap += std::abs(law[k * rest + r] / prefix[k] - future[x * rest + r] / state_mass[x]);
        gap *= 0.5;
        if (worst == prefix.size() || gap > out.gap) {
            out.gap = gap;
            worst = k;
        }
    }
    out.markov = out.gap <= tol;
    if (worst < prefix.size()) {
        auto coords = shape.decode(worst * rest);
        coords.resize(cs + 1);
        out.witness = std::move(coords);
    }
    return out;
}

bool is_markov(const PathLaw& law, double tol) {
    for (int s = 1; s < law.horizon(); ++s)
        if (!is_markov_point(law, s, tol).markov) return false;
    return true;
}

PathLaw markovianize(const PathLaw& law, int s) {
    require_interior(law, s);
    const auto& shape = law.shape();
    const std::size_t cs = shape.state_coord(s);
    const std::size_t rest = shape.tail(cs + 1);
    const std::size_t m = shape.num_states();

    const auto prefix = prefix_mass(law, cs + 1);
    const auto future = suffix_mass(law, cs);
    std::vector<double> state_mass(m, 0.0);
    for (std::size_t k = 0; k < future.size(); ++k) state_mass[k / rest] += future[k];

    std::vector<double> glued(law.size(), 0.0);
    for (std::size_t k = 0; k < prefix.size(); ++k) {
        const std::size_t x = k % m;
        if (!(prefix[k] > 0.0)) continue;
        for (std::size_t r = 0; r < rest; ++r)
            glued[k * rest + r] = prefix[k] * (future[x * rest + r] / state_mass[x]);
    }
    return PathLaw::normalized(law.states(), law.actions(), law.horizon(), std::move(glued));
}

MarkovianizedDensityReport verify_markovianized_density(const PathLaw& p, const PathLaw& p0, int s) {
    require_interior(p, s);
    require_dominated(p, p0);
    for (int r = 1; r < p0.horizon(); ++r)
        if (!is_markov_point(p0, r, kMarkovReferenceTolerance).markov)
            throw NonMarkovReferenceError("reference law is not Markov at time " + std::to_string(r));

    const auto& shape = p.shape();
    const std::size_t cs = shape.state_coord(s);
    const std::size_t head_tail = shape.tail(cs + 1);  // prefix k = i / head_tail
    const std::size_t suffix_tail = shape.tail(cs);    // suffix (x_s, ...) = i % suffix_tail

    const PathLaw glued = markovianize(p, s);
    const auto p_prefix = prefix_mass(p, cs + 1), p0_prefix = prefix_mass(p0, cs + 1);
    const auto p_suffix = suffix_mass(p, cs), p0_suffix = suffix_mass(p0, cs);
    const Eigen::VectorXd p_state = marginal(p, s), p0_state = marginal(p0, s);

    MarkovianizedDensityReport out;
    out.direct.assign(p.size(), 0.0);
    out.suffix_average.assign(p.size(), 0.0);
    out.corrected.assign(p.size(), 0.0);
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (!(p0[i] > 0.0)) {
            if (glued[i] > 0.0) throw DominationError("markovianized law escapes the reference");
            continue;
        }
        const std::size_t k = i / head_tail, j = i % suffix_tail;
        const auto x = static_cast<Eigen::Index>(j / head_tail);
        out.direct[i] = glued[i] / p0[i];
        out.suffix_average[i] = p_suffix[j] / p0_suffix[j];
        const double prefix_ratio = p_prefix[k] / p0_prefix[k];
        const double state_ratio = p_state(x) / p0_state(x);
        out.corrected[i] = state_ratio > 0.0 ? prefix_ratio * out.suffix_average[i] / state_ratio : 0.0;
        out.discrepancy = std::max(out.discrepancy, std::abs(out.direct[i] - out.suffix_average[i]));
        out.corrected_discrepancy =
            std::max(out.corrected_discrepancy, std::abs(out.direct[i] - out.corrected[i]));
    }
    out.passed = out.discrepancy <= kDensityTolerance;
    out.corrected_passed = out.corrected_discrepancy <= kDensityTolerance;
    return out;
}

}  // namespace mimic
