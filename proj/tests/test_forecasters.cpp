#include <catch2/catch_amalgamated.hpp>

#include <limbandit/forecasters.hpp>

#include "oracles.hpp"

using namespace limbandit;

namespace {

ExpertLossVector make_losses(std::vector<double> y) { return ExpertLossVector{std::move(y)}; }

ProblemDims dims_n(int n) { return ProblemDims{n, 2, std::min(n, 2), 100}; }

}  // namespace

TEST_CASE("mw starts uniform") {
    for (int n : {1, 2, 5, 9}) {
        MwState s = mw_init(ProblemDims{n, 3, 1, 10}, 0.5);
        ExpertDistribution q = current_distribution(s);
        REQUIRE(q.size() == n);
        for (int h = 0; h < n; ++h)
            CHECK(q[h] == Catch::Approx(1.0 / n).margin(1e-12));
    }
}

TEST_CASE("mw parameter guards") {
    CHECK_THROWS_AS(mw_init(dims_n(3), 0.0), ParameterError);
    CHECK_THROWS_AS(mw_init(dims_n(3), -0.2), ParameterError);
    MwState s = mw_init(dims_n(2), 0.5);
    CHECK_THROWS_AS(mw_update(s, make_losses({0.1})), ValidationError);
    CHECK_THROWS_AS(mw_update(s, make_losses({0.1, -0.2})), ValidationError);
}

TEST_CASE("mw zero losses leave the distribution unchanged") {
    MwState s = mw_init(dims_n(4), 0.7);
    ExpertDistribution before = current_distribution(s);
    mw_update(s, make_losses({0.0, 0.0, 0.0, 0.0}));
    CHECK(current_distribution(s) == before);
}

TEST_CASE("mw two-expert update matches the hand computation") {
    // eta = ln 2, y = (1, 0) from uniform: weights (1/2, 1) -> (1/3, 2/3).
    MwState s = mw_init(dims_n(2), std::log(2.0));
    mw_update(s, make_losses({1.0, 0.0}));
    ExpertDistribution q = current_distribution(s);
    CHECK(q[0] == Catch::Approx(1.0 / 3.0).margin(1e-12));
    CHECK(q[1] == Catch::Approx(2.0 / 3.0).margin(1e-12));
}

TEST_CASE("mw is invariant to a constant shift of the losses") {
    MwState a = mw_init(dims_n(3), 0.3);
    MwState b = mw_init(dims_n(3), 0.3);
    mw_update(a, make_losses({0.5, 2.0, 0.0}));
    mw_update(b, make_losses({0.5 + 3.7, 2.0 + 3.7, 0.0 + 3.7}));
    ExpertDistribution qa = current_distribution(a);
    ExpertDistribution qb = current_distribution(b);
    for (int h = 0; h < 3; ++h) CHECK(qa[h] == Catch::Approx(qb[h]).margin(1e-12));
}

TEST_CASE("mw penalizes larger losses monotonically") {
    MwState s = mw_init(dims_n(3), 0.4);
    mw_update(s, make_losses({2.0, 0.0, 1.0}));
    ExpertDistribution q = current_distribution(s);
    CHECK(q[0] < q[2]);
    CHECK(q[2] < q[1]);
}

TEST_CASE("mw log-space trajectory matches the linear-space reference") {
    RngStream rng(505, 0);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        int n = 2 + rng.uniform_int(9);
        int t_max = 1 + rng.uniform_int(50);
        double eta = 0.05 + 0.95 * rng.uniform();
        MwState s = mw_init(ProblemDims{n, 2, 1, 100}, eta);
        oracles::NaiveMw naive(n, eta);
        for (int t = 0; t < t_max; ++t) {
            std::vector<double> y(static_cast<std::size_t>(n), 0.0);
            for (double& v : y)
                if (rng.uniform() < 0.7) v = 5.0 * rng.uniform();
            mw_update(s, make_losses(y));
            naive.update(y);
            ExpertDistribution q = current_distribution(s);
            std::vector<double> ref = naive.distribution();
            double norm = 0.0;
            for (int h = 0; h < n; ++h) {
                worst = std::max(worst, std::abs(q[h] - ref[static_cast<std::size_t>(h)]));
                norm += q[h];
            }
            CHECK(std::abs(norm - 1.0) <= 1e-9);
        }
    }
    CHECK(worst <= 1e-9);
}

TEST_CASE("mw_eta follows the tuned closed form") {
    ProblemDims dims{8, 4, 2, 1000};
    double expected = std::sqrt(2.0 * 2.0 * std::log(8.0) / (2.0 * 8.0 * 1000.0));
    CHECK(mw_eta(dims) == Catch::Approx(expected).epsilon(1e-12));
    ProblemDims longer = dims;
    longer.horizon = 4000;
    CHECK(mw_eta(longer) == Catch::Approx(0.5 * mw_eta(dims)).epsilon(1e-12));
    CHECK_THROWS_AS(mw_eta(ProblemDims{1, 4, 1, 1000}), ParameterError);
}

TEST_CASE("polyinf tuned parameters follow the closed forms") {
    // M = K': c = ln 8.
    PolyInfParams p1 = polyinf_params(ProblemDims{8, 4, 2, 10000});
    CHECK(p1.c == Catch::Approx(std::log(8.0)).epsilon(1e-12));
    // N=8, K=2, M=4: K' = 2, c = ln 16, R = 2.
    ProblemDims dims{8, 2, 4, 10000};
    PolyInfParams p2 = polyinf_params(dims);
    double c = std::log(16.0);
    CHECK(p2.c == Catch::Approx(c).epsilon(1e-12));
    double eta = 2.0 * std::pow(8.0, 1.0 / (2.0 * c)) /
                 std::sqrt(c * std::pow(2.0 * 2.0, 1.0 - 1.0 / c) * 10000.0);
    CHECK(p2.eta == Catch::Approx(eta).epsilon(1e-12));
    // Quadrupling T halves eta.
    ProblemDims longer = dims;
    longer.horizon = 40000;
    CHECK(polyinf_params(longer).eta == Catch::Approx(0.5 * p2.eta).epsilon(1e-12));
}

TEST_CASE("polyinf initial state solves the normalization at zero loss") {
    // N = 2, c = 2, eta = 1: 2 C^{-2} = 1 gives C = sqrt(2).
    PolyInfState s = polyinf_init(dims_n(2), 2.0, 1.0);
    CHECK(s.norm_const == Catch::Approx(std::sqrt(2.0)).margin(1e-8));
    ExpertDistribution q = current_distribution(s);
    CHECK(q[0] == Catch::Approx(0.5).margin(1e-9));
    CHECK(q[1] == Catch::Approx(0.5).margin(1e-9));

    PolyInfState s5 = polyinf_init(dims_n(5), 2.5, 0.3);
    ExpertDistribution q5 = current_distribution(s5);
    for (int h = 0; h < 5; ++h) CHECK(q5[h] == Catch::Approx(0.2).margin(1e-9));
}

TEST_CASE("polyinf parameter guards") {
    CHECK_THROWS_AS(polyinf_init(dims_n(2), 1.0, 0.5), ParameterError);
    CHECK_THROWS_AS(polyinf_init(dims_n(2), 2.0, 0.0), ParameterError);
    PolyInfState s = polyinf_init(dims_n(2), 2.0, 1.0);
    CHECK_THROWS_AS(polyinf_update(s, make_losses({-0.1, 0.0})), ValidationError);
    CHECK_THROWS_AS(polyinf_update(s, make_losses({0.1})), ValidationError);
}

TEST_CASE("polyinf update matches an independent bisection oracle") {
    // N = 2, c = 2, eta = 1, cumulative losses (0, 1):
    // solve C^{-2} + (1 + C)^{-2} = 1.
    PolyInfState s = polyinf_init(dims_n(2), 2.0, 1.0);
    polyinf_update(s, make_losses({0.0, 1.0}));
    auto g = [](double c) { return std::pow(c, -2.0) + std::pow(1.0 + c, -2.0); };
    double c_star = oracles::bisect_decreasing(g, 1.0, 2.0, 1.0);
    CHECK(s.norm_const == Catch::Approx(c_star).margin(1e-7));
    ExpertDistribution q = current_distribution(s);
    CHECK(q[0] == Catch::Approx(std::pow(c_star, -2.0)).margin(1e-7));
    CHECK(q[1] == Catch::Approx(std::pow(1.0 + c_star, -2.0)).margin(1e-7));
    // Frozen approximate values.
    CHECK(q[0] == Catch::Approx(0.780).margin(2e-3));
    CHECK(q[1] == Catch::Approx(0.220).margin(2e-3));
}

TEST_CASE("polyinf equal losses give the uniform distribution") {
    PolyInfState s = polyinf_init(dims_n(3), 2.2, 0.7);
    polyinf_update(s, make_losses({3.0, 3.0, 3.0}));
    ExpertDistribution q = current_distribution(s);
    for (int h = 0; h < 3; ++h) CHECK(q[h] == Catch::Approx(1.0 / 3.0).margin(1e-9));
}

TEST_CASE("polyinf zero losses leave the distribution unchanged") {
    PolyInfState s = polyinf_init(dims_n(4), 2.1, 0.4);
    polyinf_update(s, make_losses({1.0, 0.5, 2.0, 0.0}));
    ExpertDistribution before = current_distribution(s);
    polyinf_update(s, make_losses({0.0, 0.0, 0.0, 0.0}));
    ExpertDistribution after = current_distribution(s);
    for (int h = 0; h < 4; ++h) CHECK(after[h] == Catch::Approx(before[h]).margin(1e-10));
}

TEST_CASE("polyinf normalization holds every round on random trajectories") {
    RngStream rng(606, 0);
    for (int trial = 0; trial < 20; ++trial) {
        int n = 2 + rng.uniform_int(7);
        double c = 2.0 + rng.uniform();
        double eta = 0.01 + 0.2 * rng.uniform();
        PolyInfState s = polyinf_init(ProblemDims{n, 2, 1, 100}, c, eta);
        for (int t = 0; t < 200; ++t) {
            std::vector<double> y(static_cast<std::size_t>(n), 0.0);
            for (double& v : y)
                if (rng.uniform() < 0.4) v = 20.0 * rng.uniform();
            polyinf_update(s, make_losses(y));
            // Residual of the solved constant, measured on raw weights.
            double raw = 0.0;
            for (int h = 0; h < n; ++h)
                raw += std::pow(eta * (s.cum_loss[static_cast<std::size_t>(h)] + s.norm_const),
                                -c);
            CHECK(std::abs(raw - 1.0) <= 1e-10);
            // Weights stay in (0, 1]: the argument never drops below 1/eta.
            double lmin = *std::min_element(s.cum_loss.begin(), s.cum_loss.end());
            CHECK(eta * (lmin + s.norm_const) >= 1.0 - 1e-9);
            ExpertDistribution q = current_distribution(s);
            double sum = 0.0;
            for (int h = 0; h < n; ++h) {
                CHECK(q[h] > 0.0);
                sum += q[h];
            }
            CHECK(std::abs(sum - 1.0) <= 1e-9);
        }
    }
}

TEST_CASE("polyinf normalization constant goes negative once losses pass 1/eta") {
    PolyInfState s = polyinf_init(dims_n(2), 2.0, 1.0);
    polyinf_update(s, make_losses({10.0, 10.0}));
    // Ties: both weights 1/2, so eta (L + C) = sqrt(2) and C = sqrt(2) - 10.
    CHECK(s.norm_const == Catch::Approx(std::sqrt(2.0) - 10.0).margin(1e-8));
    CHECK(s.norm_const < 0.0);
    ExpertDistribution q = current_distribution(s);
    CHECK(q[0] == Catch::Approx(0.5).margin(1e-9));
}

TEST_CASE("polyinf preserves loss order") {
    PolyInfState s = polyinf_init(dims_n(3), 2.3, 0.5);
    polyinf_update(s, make_losses({2.0, 0.0, 5.0}));
    ExpertDistribution q = current_distribution(s);
    CHECK(q[1] > q[0]);
    CHECK(q[0] > q[2]);
}

TEST_CASE("polyinf single expert keeps full mass") {
    PolyInfState s = polyinf_init(ProblemDims{1, 2, 1, 10}, 2.5, 0.8);
    CHECK(current_distribution(s)[0] == Catch::Approx(1.0).margin(1e-12));
    polyinf_update(s, make_losses({4.0}));
    CHECK(current_distribution(s)[0] == Catch::Approx(1.0).margin(1e-12));
    CHECK(0.8 * (4.0 + s.norm_const) == Catch::Approx(1.0).margin(1e-9));
}

TEST_CASE("forecaster trajectories are bit-deterministic") {
    auto run_mw = [] {
        MwState s = mw_init(dims_n(4), 0.3);
        mw_update(s, make_losses({1.0, 0.0, 2.5, 0.25}));
        mw_update(s, make_losses({0.0, 3.0, 0.0, 1.0}));
        return current_distribution(s);
    };
    CHECK(run_mw() == run_mw());
    auto run_pi = [] {
        PolyInfState s = polyinf_init(dims_n(4), 2.2, 0.15);
        polyinf_update(s, make_losses({1.0, 0.0, 2.5, 0.25}));
        polyinf_update(s, make_losses({0.0, 3.0, 0.0, 1.0}));
        return current_distribution(s);
    };
    CHECK(run_pi() == run_pi());
}
