#include <doctest.h>

#include <cmath>

#include "mimic/fixtures.hpp"
#include "mimic/occupation.hpp"
#include "support.hpp"

using namespace mimic;

namespace {

/// Truncated sum over 50 steps for the fixture whose action repeats x_0.
Eigen::MatrixXd fixture_hd_oracle(double beta) {
    const ControlledChain chain = fixtures::history_dependent_chain();
    Eigen::MatrixXd mu = Eigen::MatrixXd::Zero(2, 2);
    for (int x0 = 0; x0 < 2; ++x0) {
        Eigen::RowVectorXd law = Eigen::RowVectorXd::Unit(2, x0);
        double weight = (1.0 - beta) * chain.initial()(x0);
        for (int n = 0; n <= 50; ++n) {
            mu.col(x0) += weight * law.transpose();
            law = law * chain.dynamics()[static_cast<std::size_t>(x0)];
            weight *= beta;
        }
    }
    return mu;
}

Eigen::MatrixXd random_cost(support::Rng& rng, Eigen::Index m, Eigen::Index a) {
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    Eigen::MatrixXd k(m, a);
    for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = 0; j < a; ++j) k(i, j) = unit(rng);
    return k;
}

ControlledChain mimic_of(const ControlledChain& chain, const OccupationMeasure& occ) {
    return stationary_mimic(occ, chain.dynamics(), chain.initial(), chain.states(), chain.actions());
}

}  // namespace

TEST_SUITE("occupation") {
    TEST_CASE("uncontrolled chain absorbed after one step") {
        Eigen::MatrixXd kernel(2, 2);
        kernel << 1.0, 0.0, 1.0, 0.0;
        const ControlledChain chain(StateSpace::range(2), ActionSpace::range(1), Eigen::Vector2d(0.0, 1.0), {kernel},
                                    Eigen::MatrixXd::Ones(2, 1));
        const OccupationMeasure occ = occupation_measure(chain, 0.5);
        CHECK(occ.eta(0) == doctest::Approx(0.5).epsilon(1e-15));
        CHECK(occ.eta(1) == doctest::Approx(0.5).epsilon(1e-15));
        CHECK(occ.enumerated_steps == 0u);
    }

    TEST_CASE("fixed point gives a point mass") {
        for (double beta : {0.1, 0.5, 0.99}) {
            const ControlledChain chain(StateSpace::range(3), ActionSpace::range(2), Eigen::Vector3d(0.0, 0.0, 1.0),
                                        {Eigen::Matrix3d::Identity(), Eigen::Matrix3d::Identity()},
                                        Eigen::MatrixXd::Constant(3, 2, 0.5));
            const OccupationMeasure occ = occupation_measure(chain, beta);
            CHECK((occ.eta - Eigen::Vector3d(0.0, 0.0, 1.0)).cwiseAbs().maxCoeff() <= 1e-15);
            CHECK(occ.null_states[0]);
            CHECK(occ.null_states[1]);
            CHECK_FALSE(occ.null_states[2]);
            CHECK(occ.policy(0, 0) == 0.5);
        }
    }

    TEST_CASE("history-dependent fixture matches truncated enumeration") {
        const ControlledChain chain = fixtures::history_dependent_chain();
        const OccupationMeasure occ = occupation_measure(chain, 0.5);
        CHECK((occ.joint - fixture_hd_oracle(0.5)).cwiseAbs().maxCoeff() <= 1e-12);
        CHECK(occ.joint.sum() == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(occ.enumerated_steps == 40u);

        const ControlledChain mimic = mimic_of(chain, occ);
        CHECK(total_variation(occupation_measure(mimic, 0.5).joint, occ.joint) <= 1e-10);

        const ResolventReport unit = resolvent_check(chain, mimic, 0.5, Eigen::MatrixXd::Ones(2, 2));
        CHECK(unit.original_side == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(unit.resolvent_side == doctest::Approx(1.0).epsilon(1e-12));
        const ResolventReport indicator = resolvent_check(chain, mimic, 0.5, fixtures::indicator_cost());
        CHECK(indicator.passed);
        CHECK(indicator.original_side == doctest::Approx(occ.eta(1)).epsilon(1e-12));
        CHECK(indicator.resolvent_side == doctest::Approx(occ.eta(1)).epsilon(1e-10));
    }

    TEST_CASE("stationary chains are their own mimic") {
        support::Rng rng(31);
        for (int rep = 0; rep < 100; ++rep) {
            const auto m = static_cast<Eigen::Index>(2 + rep % 2);
            const ControlledChain history = support::random_history_chain(rng, static_cast<std::size_t>(m), 2);
            const Eigen::MatrixXd policy = mimic_of(history, occupation_measure(history, 0.7)).policy();
            const ControlledChain chain(history.states(), history.actions(), history.initial(), history.dynamics(),
                                        policy);
            const double beta = std::uniform_real_distribution<double>(0.05, 0.95)(rng);
            const OccupationMeasure occ = occupation_measure(chain, beta);
            const ControlledChain mimic = mimic_of(chain, occ);
            for (Eigen::Index x = 0; x < m; ++x)
                if (!occ.null_states[static_cast<std::size_t>(x)])
                    CHECK((mimic.policy().row(x) - policy.row(x)).cwiseAbs().maxCoeff() <= 1e-12);
            CHECK(total_variation(occupation_measure(mimic, beta).joint, occ.joint) <= 1e-12);

            // Linear-algebra oracle: the discounted cost by value iteration.
            const Eigen::MatrixXd k = random_cost(rng, m, 2);
            const ResolventReport report = resolvent_check(chain, mimic, beta, k);
            const Eigen::VectorXd k_policy = policy.cwiseProduct(k).rowwise().sum();
            const Eigen::MatrixXd P = chain.state_kernel(policy);
            Eigen::VectorXd value = Eigen::VectorXd::Zero(m);
            for (int it = 0; it < 2000; ++it) value = (1.0 - beta) * k_policy + beta * P * value;
            CHECK(report.passed);
            CHECK(std::abs(report.resolvent_side - chain.initial().dot(value)) <= 1e-10);
        }
    }

    TEST_CASE("random history chains: occupation equality and resolvent identity") {
        support::Rng rng(32);
        for (int rep = 0; rep < 100; ++rep) {
            const std::size_t m = 2 + static_cast<std::size_t>(rep % 2);
            const std::size_t a = 1 + static_cast<std::size_t>(rep % 3 != 0);
            const ControlledChain chain = support::random_history_chain(rng, m, a);
            const double beta = std::uniform_real_distribution<double>(0.1, 0.9)(rng);
            const OccupationMeasure occ = occupation_measure(chain, beta);
            CHECK((occ.joint - support::product_chain_occupation(chain, beta)).cwiseAbs().maxCoeff() <= 1e-11);
            CHECK(std::abs(occ.joint.sum() - 1.0) <= 1e-12 + kDefaultHorizonTolerance);
            CHECK(std::pow(beta, static_cast<double>(occ.enumerated_steps)) <= kDefaultHorizonTolerance);

            const ControlledChain mimic = mimic_of(chain, occ);
            CHECK(total_variation(occupation_measure(mimic, beta).joint, occ.joint) <= 1e-10);
            const ResolventReport report =
                resolvent_check(chain, mimic, beta, random_cost(rng, static_cast<Eigen::Index>(m),
                                                                static_cast<Eigen::Index>(a)));
            CHECK(report.passed);
            CHECK(report.discrepancy <= kResolventTolerance);
        }
    }

    TEST_CASE("disintegration rebuilds the joint table") {
        support::Rng rng(33);
        for (int rep = 0; rep < 20; ++rep) {
            const OccupationMeasure occ = occupation_measure(support::random_history_chain(rng, 3, 2), 0.6);
            const Eigen::MatrixXd rebuilt = occ.eta.asDiagonal() * occ.policy;
            CHECK((rebuilt - occ.joint).cwiseAbs().maxCoeff() <= 1e-12);
            CHECK((occ.policy.rowwise().sum().array() - 1.0).abs().maxCoeff() <= 1e-12);
        }
        Eigen::MatrixXd joint(2, 2);
        joint << 0.25, 0.75, 0.0, 0.0;
        const OccupationMeasure occ = disintegrate(joint, 0.5);
        CHECK(occ.null_states[1]);
        CHECK(occ.policy(1, 0) == 0.5);
        CHECK(occ.policy(0, 1) == doctest::Approx(0.75));
    }

    TEST_CASE("occupation measure is continuous in the discount") {
        const ControlledChain chain = fixtures::history_dependent_chain();
        for (double beta : {0.2, 0.5, 0.9}) {
            const double tv =
                total_variation(occupation_measure(chain, beta).joint, occupation_measure(chain, beta + 1e-6).joint);
            CHECK(tv <= 1e-4);
        }
    }

    TEST_CASE("per-time marginals of the mimic are reported") {
        const ControlledChain chain = fixtures::history_dependent_chain();
        const OccupationMeasure occ = occupation_measure(chain, 0.5);
        const Eigen::MatrixXd original = state_marginals(chain, 10);
        const Eigen::MatrixXd mimic = state_marginals(mimic_of(chain, occ), 10);
        CHECK(original.cols() == 11);
        CHECK((original.col(0) - mimic.col(0)).cwiseAbs().maxCoeff() == 0.0);
        for (Eigen::Index n = 0; n <= 10; ++n) {
            CHECK(original.col(n).sum() == doctest::Approx(1.0));
            CHECK(mimic.col(n).sum() == doctest::Approx(1.0));
        }
    }

    TEST_CASE("errors") {
        const ControlledChain chain = fixtures::history_dependent_chain();
        for (double beta : {0.0, 1.0, -0.5, 1.5, std::nan("")})
            CHECK_THROWS_AS(occupation_measure(chain, beta), std::invalid_argument);

        HistoryControl wide;
        wide.initial_memory = [](int x0) { return std::int64_t{x0}; };
        wide.update = [](std::int64_t memory, int, int u, int next) {
            return (memory * 6 + u * 3 + next + 1) % 1'000'000'007;
        };
        wide.action_probabilities = [](std::int64_t, int, int) { return Eigen::Vector2d(0.5, 0.5); };
        const Eigen::Matrix3d uniform = Eigen::Matrix3d::Constant(1.0 / 3.0);
        const ControlledChain branching(StateSpace::range(3), ActionSpace::range(2), Eigen::Vector3d::Constant(1.0 / 3.0),
                                        {uniform, uniform}, std::move(wide));
        CHECK_THROWS_AS(occupation_measure(branching, 0.99), std::length_error);

        CHECK_THROWS_AS(resolvent_check(chain, chain, 0.5, fixtures::indicator_cost()), std::invalid_argument);
        CHECK_THROWS_AS(ControlledChain(StateSpace::range(2), ActionSpace::range(1), Eigen::Vector2d(0.5, 0.5),
                                        {Eigen::Matrix2d::Identity()}, Eigen::MatrixXd::Constant(2, 1, 0.9)),
                        std::invalid_argument);
        CHECK(discount_from_rate(std::log(2.0)) == doctest::Approx(0.5));
        CHECK_THROWS_AS(discount_from_rate(0.0), std::invalid_argument);
    }
}
