#include "mimic/entropy_min.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "mimic/errors.hpp"
#include "mimic/markov_chain.hpp"
#include "mimic/path_measure.hpp"

namespace mimic {
namespace {

constexpr double kReferenceMarkovTolerance = 1e-10;

double half_l1(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    return 0.5 * (a - b).cwiseAbs().sum();
}

void require_dominated_by(const PathLaw& law, const PathLaw& reference) {
    if (!law.same_space(reference)) throw std::invalid_argument("laws live on different path spaces");
    for (std::size_t i = 0; i < law.size(); ++i)
        if (law[i] > 0.0 && !(reference[i] > 0.0))
            throw DominationError("law charges path " + std::to_string(i) +
                                  " which the reference does not");
}

double entropy_of(std::span<const double> q, const PathLaw& reference) {
    double d = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i)
        if (q[i] > 0.0) d += q[i] * std::log(q[i] / reference[i]);
    return std::max(d, 0.0);
}

}  // namespace

MarginalConstraintSet::MarginalConstraintSet(PathLaw reference, std::vector<MarginalConstraint> constraints)
    : reference_(std::move(reference)), constraints_(std::move(constraints)) {
    const auto m = static_cast<Eigen::Index>(reference_.states().size());
    for (std::size_t k = 0; k < constraints_.size(); ++k) {
        const auto& c = constraints_[k];
        if (c.time < 0 || c.time > reference_.horizon())
            throw std::out_of_range("constraint time " + std::to_string(c.time) + " outside [0, " +
                                    std::to_string(reference_.horizon()) + "]");
        if (c.target.size() != m) throw std::invalid_argument("constraint vector has wrong dimension");
        require_probability_vector(c.target, "constraint marginal");
        for (std::size_t j = 0; j < k; ++j)
            if (constraints_[j].time == c.time)
                throw std::invalid_argument("time " + std::to_string(c.time) + " constrained twice");
    }
    for (int s = 1; s < reference_.horizon(); ++s)
        if (!is_markov_point(reference_, s, kReferenceMarkovTolerance).markov)
            throw NonMarkovReferenceError("reference law is not Markov at time " + std::to_string(s));
    for (const auto& c : constraints_) {
        const Eigen::VectorXd support = marginal(reference_, c.time);
        for (Eigen::Index x = 0; x < m; ++x)
            if (c.target(x) > 0.0 && !(support(x) > 0.0))
                throw InfeasibleError("target at time " + std::to_string(c.time) + " charges state '" +
                                      reference_.states()[static_cast<std::size_t>(x)] +
                                      "' which the reference never visits");
    }
}

double MarginalConstraintSet::residual(const PathLaw& law) const {
    double worst = 0.0;
    for (const auto& c : constraints_) worst = std::max(worst, half_l1(marginal(law, c.time), c.target));
    return worst;
}

EntropyMinResult minimize_entropy(const MarginalConstraintSet& set, const EntropyMinOptions& options) {
    const PathLaw& reference = set.reference();
    const PathLaw& start = options.start ? *options.start : reference;
    require_dominated_by(start, reference);

    const auto& shape = reference.shape();
    const std::size_t m = shape.num_states();
    std::vector<double> q(start.probabilities().begin(), start.probabilities().end());

    auto residual_of = [&](std::span<const double> w) {
        double worst = 0.0;
        for (const auto& c : set.constraints()) {
            const std::size_t coord = shape.state_coord(c.time);
            Eigen::VectorXd current = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m));
            for (std::size_t i = 0; i < w.size(); ++i)
                current(static_cast<Eigen::Index>(shape.coordinate(i, coord))) += w[i];
            worst = std::max(worst, half_l1(current, c.target));
        }
        return worst;
    };

    EntropyMinDiagnostics diag;
    diag.residual = residual_of(q);
    diag.entropy_history.push_back(entropy_of(q, reference));
    diag.residual_history.push_back(diag.residual);

    std::vector<double> scale(m);
    while (diag.residual > options.tol) {
        if (diag.iterations >= options.max_iters)
            throw ConvergenceError("iterative proportional fitting did not converge in " +
                                       std::to_string(options.max_iters) + " cycles (residual " +
                                       std::to_string(diag.residual) + ")",
                                   diag.residual);
        for (const auto& c : set.constraints()) {
            const std::size_t coord = shape.state_coord(c.time);
            std::vector<double> current(m, 0.0);
            for (std::size_t i = 0; i < q.size(); ++i) current[shape.coordinate(i, coord)] += q[i];
            for (std::size_t x = 0; x < m; ++x) {
                const double target = c.target(static_cast<Eigen::Index>(x));
                if (current[x] > 0.0) {
                    scale[x] = target / current[x];
                } else if (target > 0.0) {
                    throw InfeasibleError("starting law gives no mass to a targeted state at time " +
                                          std::to_string(c.time));
                } else {
                    scale[x] = 0.0;
                }
            }
            double total = 0.0;
            for (std::size_t i = 0; i < q.size(); ++i) {
                q[i] *= scale[shape.coordinate(i, coord)];
                total += q[i];
            }
            for (double& v : q) v /= total;
        }
        ++diag.iterations;
        diag.residual = residual_of(q);
        diag.entropy_history.push_back(entropy_of(q, reference));
        diag.residual_history.push_back(diag.residual);
        if (options.on_cycle) options.on_cycle(q);
    }

    PathLaw law = PathLaw::normalized(reference.states(), reference.actions(), reference.horizon(), std::move(q));
    diag.entropy = relative_entropy(law, reference);
    diag.markov = true;
    for (int s = 1; s < law.horizon(); ++s) {
        const auto test = is_markov_point(law, s, 10.0 * options.tol);
        diag.markov_gaps.push_back(test.gap);
        diag.markov = diag.markov && test.markov;
    }
    return EntropyMinResult{std::move(law), std::move(diag)};
}

namespace {

/// Linear constraints A q = b restricted to a set of free paths.
struct AffineConstraints {
    Eigen::MatrixXd a;
    Eigen::VectorXd b;

    /// Euclidean projection onto {q : A q = b}.
    Eigen::VectorXd project(const Eigen::VectorXd& q, const Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd>& gram) const {
        return q - a.transpose() * gram.solve(a * q - b);
    }
};

/// Nearest point of {q >= 0, A q = b} by Dykstra's alternating projections.
Eigen::VectorXd dykstra(const AffineConstraints& affine, Eigen::VectorXd q,
                        const Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd>& gram) {
    Eigen::VectorXd p = Eigen::VectorXd::Zero(q.size()), r = Eigen::VectorXd::Zero(q.size());
    for (int it = 0; it < 100'000; ++it) {
        const Eigen::VectorXd y = affine.project(q + p, gram);
        p = q + p - y;
        const Eigen::VectorXd z = (y + r).cwiseMax(0.0);
        r = y + r - z;
        q = z;
        if ((affine.a * q - affine.b).cwiseAbs().maxCoeff() <= 1e-14) return q;
    }
    throw InfeasibleError("no non-negative law satisfies the marginal constraints");
}

}  // namespace

PathLaw brute_force_minimizer(const MarginalConstraintSet& set, const OracleOptions& options) {
    const PathLaw& reference = set.reference();
    const auto& shape = reference.shape();
    if (reference.size() > kOracleMaxPaths)
        throw std::invalid_argument("oracle limited to " + std::to_string(kOracleMaxPaths) + " paths");

    // Free variables: paths the reference charges and every target allows.
    std::vector<std::size_t> free;
    for (std::size_t i = 0; i < reference.size(); ++i) {
        if (!(reference[i] > 0.0)) continue;
        bool allowed = true;
        for (const auto& c : set.constraints())
            allowed = allowed && c.target(static_cast<Eigen::Index>(shape.state_at(i, c.time))) > 0.0;
        if (allowed) free.push_back(i);
    }
    if (free.empty()) throw InfeasibleError("constraints exclude every path the reference charges");

    const std::size_t m = shape.num_states();
    auto build = [&](const std::vector<std::size_t>& vars) {
        AffineConstraints affine;
        const auto rows = static_cast<Eigen::Index>(set.constraints().size() * m + 1);
        affine.a = Eigen::MatrixXd::Zero(rows, static_cast<Eigen::Index>(vars.size()));
        affine.b = Eigen::VectorXd::Zero(rows);
        for (std::size_t k = 0; k < vars.size(); ++k) {
            const auto col = static_cast<Eigen::Index>(k);
            affine.a(rows - 1, col) = 1.0;
            for (std::size_t j = 0; j < set.constraints().size(); ++j) {
                const auto& c = set.constraints()[j];
                affine.a(static_cast<Eigen::Index>(j * m + shape.state_at(vars[k], c.time)), col) = 1.0;
            }
        }
        for (std::size_t j = 0; j < set.constraints().size(); ++j)
            affine.b.segment(static_cast<Eigen::Index>(j * m), static_cast<Eigen::Index>(m)) =
                set.constraints()[j].target;
        affine.b(rows - 1) = 1.0;
        return affine;
    };

    // Start from the product law with the target marginals, pulled back onto
    // the feasible affine set.
    AffineConstraints affine = build(free);
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> gram(affine.a * affine.a.transpose());
    Eigen::VectorXd q(static_cast<Eigen::Index>(free.size()));
    for (std::size_t k = 0; k < free.size(); ++k) {
        double w = 1.0;
        for (std::size_t coord = 0; coord < shape.num_coords(); ++coord) w /= static_cast<double>(shape.radix(coord));
        for (const auto& c : set.constraints())
            w *= c.target(static_cast<Eigen::Index>(shape.state_at(free[k], c.time))) *
                 static_cast<double>(m);
        q(static_cast<Eigen::Index>(k)) = w;
    }
    q = affine.project(q, gram);
    if (!(q.minCoeff() > 0.0)) {
        // Paths that the nearest feasible point leaves empty are treated as
        // structurally excluded.
        q = dykstra(affine, q, gram);
        std::vector<std::size_t> kept;
        std::vector<double> values;
        for (std::size_t k = 0; k < free.size(); ++k)
            if (q(static_cast<Eigen::Index>(k)) > 1e-14) {
                kept.push_back(free[k]);
                values.push_back(q(static_cast<Eigen::Index>(k)));
            }
        free = std::move(kept);
        affine = build(free);
        gram.compute(affine.a * affine.a.transpose());
        q = Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
    }

    const auto n = static_cast<Eigen::Index>(free.size());
    Eigen::VectorXd base(n);
    for (Eigen::Index k = 0; k < n; ++k) base(k) = reference[free[static_cast<std::size_t>(k)]];
    auto objective = [&](const Eigen::VectorXd& v) {
        double f = 0.0;
        for (Eigen::Index k = 0; k < n; ++k)
            if (v(k) > 0.0) f += v(k) * std::log(v(k) / base(k));
        return f;
    };

    double f = objective(q);
    for (std::size_t it = 0; it < options.max_iters; ++it) {
        const Eigen::VectorXd grad = (q.array() / base.array()).log() + 1.0;
        // Gradient projected onto the constraint null space in the metric diag(1/q).
        const Eigen::MatrixXd aq = affine.a * q.asDiagonal();
        const Eigen::VectorXd lambda =
            Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd>(aq * affine.a.transpose())
                .solve(aq * grad);
        const Eigen::VectorXd dir = -(q.array() * (grad - affine.a.transpose() * lambda).array()).matrix();
        const double slope = grad.dot(dir);
        if (!(slope < 0.0) || -slope < options.tol) break;

        double step = 1.0;
        for (Eigen::Index k = 0; k < n; ++k)
            if (dir(k) < 0.0) step = std::min(step, -0.99 * q(k) / dir(k));
        Eigen::VectorXd trial = q + step * dir;
        double f_trial = objective(trial);
        while (f_trial > f + 1e-4 * step * slope && step > 1e-20) {
            step *= 0.5;
            trial = q + step * dir;
            f_trial = objective(trial);
        }
        if (!(f_trial < f)) break;
        q = std::move(trial);
        f = f_trial;
    }

    std::vector<double> full(reference.size(), 0.0);
    for (Eigen::Index k = 0; k < n; ++k) full[free[static_cast<std::size_t>(k)]] = std::max(q(k), 0.0);
    return PathLaw::normalized(reference.states(), reference.actions(), reference.horizon(), std::move(full));
}

GaugeReport gauge_check(const std::vector<PathLaw>& candidates, const PathLaw& reference, double epsilon) {
    if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
    GaugeReport report;
    report.epsilon = epsilon;
    for (const auto& p : candidates) {
        require_dominated_by(p, reference);
        double moment = 0.0;
        for (std::size_t i = 0; i < p.size(); ++i)
            if (reference[i] > 0.0) moment += reference[i] * std::pow(p[i] / reference[i], 1.0 + epsilon);
        report.moments.push_back(moment);
        report.sup_moment = std::max(report.sup_moment, moment);
    }
    return report;
}

}  // namespace mimic
