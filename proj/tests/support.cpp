#include "support.hpp"

#include <map>
#include <stdexcept>

#include "mimic/markov_chain.hpp"
#include "mimic/path_measure.hpp"

namespace support {
namespace {

Eigen::VectorXd random_simplex(Rng& rng, Eigen::Index n) {
    std::uniform_real_distribution<double> unit(0.05, 1.0);
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = unit(rng);
    return v / v.sum();
}

Eigen::MatrixXd random_stochastic(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
    Eigen::MatrixXd k(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) k.row(r) = random_simplex(rng, cols).transpose();
    return k;
}

}  // namespace

mimic::PathLaw random_law(Rng& rng, std::size_t m, int horizon, double zero_fraction, std::size_t actions) {
    const mimic::PathShape shape(m, actions, horizon);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<double> w(shape.size());
    double total = 0.0;
    for (auto& x : w) {
        x = unit(rng) < zero_fraction ? 0.0 : unit(rng) + 0.01;
        total += x;
    }
    if (total == 0.0) w[0] = 1.0;
    std::optional<mimic::ActionSpace> action_space;
    if (actions > 0) action_space = mimic::ActionSpace::range(actions);
    return mimic::PathLaw::normalized(mimic::StateSpace::range(m), action_space, horizon, std::move(w));
}

mimic::PathLaw random_positive_markov_law(Rng& rng, std::size_t m, int horizon) {
    const auto n = static_cast<Eigen::Index>(m);
    std::vector<Eigen::MatrixXd> kernels;
    for (int t = 0; t < horizon; ++t) kernels.push_back(random_stochastic(rng, n, n));
    return mimic::law_of(mimic::MarkovChainModel(mimic::StateSpace::range(m), random_simplex(rng, n), kernels),
                         horizon);
}

mimic::MarginalConstraintSet random_constraint_set(Rng& rng, std::size_t m, int horizon) {
    mimic::PathLaw reference = random_positive_markov_law(rng, m, horizon);
    const mimic::PathLaw feasible = random_law(rng, m, horizon, 0.0);
    std::vector<mimic::MarginalConstraint> constraints;
    std::bernoulli_distribution pick(0.6);
    for (int t = 0; t <= horizon; ++t)
        if (pick(rng)) constraints.push_back({t, mimic::marginal(feasible, t)});
    if (constraints.empty()) constraints.push_back({horizon, mimic::marginal(feasible, horizon)});
    return mimic::MarginalConstraintSet(std::move(reference), std::move(constraints));
}

mimic::ControlledChain random_history_chain(Rng& rng, std::size_t m, std::size_t a) {
    if (m > 3 || a > 2) throw std::invalid_argument("random history chains are small by design");
    const auto n = static_cast<Eigen::Index>(m), na = static_cast<Eigen::Index>(a);
    std::vector<Eigen::MatrixXd> dynamics;
    for (std::size_t u = 0; u < a; ++u) dynamics.push_back(random_stochastic(rng, n, n));

    // memory = (x0 * 2 + parity) * (a + 1) + last action (a = none yet)
    const auto keys = static_cast<Eigen::Index>(m * 2 * (a + 1));
    Eigen::MatrixXd table(keys * n, na);
    std::bernoulli_distribution deterministic(0.3);
    for (Eigen::Index r = 0; r < table.rows(); ++r) {
        if (deterministic(rng)) {
            table.row(r).setZero();
            table(r, std::uniform_int_distribution<Eigen::Index>(0, na - 1)(rng)) = 1.0;
        } else {
            table.row(r) = random_simplex(rng, na).transpose();
        }
    }
    const auto A = static_cast<std::int64_t>(a);
    mimic::HistoryControl control;
    control.initial_memory = [A](int x0) { return (std::int64_t{x0} * 2 + (x0 == 0 ? 1 : 0)) * (A + 1) + A; };
    control.update = [A](std::int64_t memory, int, int u, int next) {
        const std::int64_t head = memory / (A + 1);
        const std::int64_t x0 = head / 2;
        const std::int64_t parity = (head % 2 + (next == 0 ? 1 : 0)) % 2;
        return (x0 * 2 + parity) * (A + 1) + u;
    };
    control.action_probabilities = [table, n](std::int64_t memory, int x, int) -> Eigen::VectorXd {
        return table.row(static_cast<Eigen::Index>(memory) * n + x).transpose();
    };
    return mimic::ControlledChain(mimic::StateSpace::range(m), mimic::ActionSpace::range(a), random_simplex(rng, n),
                                  std::move(dynamics), std::move(control));
}

Eigen::MatrixXd product_chain_occupation(const mimic::ControlledChain& chain, double beta) {
    const auto& control = std::get<mimic::HistoryControl>(chain.control());
    const auto m = static_cast<int>(chain.states().size());
    const auto a = static_cast<int>(chain.actions().size());

    std::map<std::pair<std::int64_t, int>, int> index;
    std::vector<std::pair<std::int64_t, int>> nodes;
    auto intern = [&](std::int64_t mem, int x) {
        const auto [it, inserted] = index.emplace(std::make_pair(mem, x), static_cast<int>(nodes.size()));
        if (inserted) nodes.emplace_back(mem, x);
        return it->second;
    };
    for (int x = 0; x < m; ++x) intern(control.initial_memory(x), x);
    for (std::size_t k = 0; k < nodes.size(); ++k) {
        const auto [mem, x] = nodes[k];
        for (int u = 0; u < a; ++u)
            for (int y = 0; y < m; ++y) intern(control.update(mem, x, u, y), y);
    }
    const auto size = static_cast<Eigen::Index>(nodes.size());
    Eigen::MatrixXd q = Eigen::MatrixXd::Zero(size, size);
    Eigen::VectorXd start = Eigen::VectorXd::Zero(size);
    for (int x = 0; x < m; ++x) start(intern(control.initial_memory(x), x)) += chain.initial()(x);
    for (Eigen::Index k = 0; k < size; ++k) {
        const auto [mem, x] = nodes[static_cast<std::size_t>(k)];
        const Eigen::VectorXd probs = control.action_probabilities(mem, x, 0);
        for (int u = 0; u < a; ++u)
            for (int y = 0; y < m; ++y)
                q(k, intern(control.update(mem, x, u, y), y)) += probs(u) * chain.dynamics()[static_cast<std::size_t>(u)](x, y);
    }
    const Eigen::MatrixXd system = (Eigen::MatrixXd::Identity(size, size) - beta * q).transpose();
    const Eigen::VectorXd xi = system.colPivHouseholderQr().solve((1.0 - beta) * start);
    Eigen::MatrixXd mu = Eigen::MatrixXd::Zero(m, a);
    for (Eigen::Index k = 0; k < size; ++k) {
        const auto [mem, x] = nodes[static_cast<std::size_t>(k)];
        mu.row(x) += xi(k) * control.action_probabilities(mem, x, 0).transpose();
    }
    return mu;
}

double oracle_prob_of_states(const mimic::PathLaw& law, const std::vector<std::pair<int, std::size_t>>& fixed) {
    const auto& shape = law.shape();
    double total = 0.0;
    for (std::size_t path = 0; path < law.size(); ++path) {
        const std::vector<std::size_t> coords = shape.decode(path);
        bool match = true;
        for (const auto& [t, x] : fixed) match = match && coords[shape.state_coord(t)] == x;
        if (match) total += law[path];
    }
    return total;
}

}  // namespace support
