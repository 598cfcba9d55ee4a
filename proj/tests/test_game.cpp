#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "ratedist/game.hpp"
#include "ratedist/gaussian.hpp"
#include "support.hpp"

using namespace ratedist;
using testsupport::Stream;

namespace {

constexpr double kTwoLn2 = 1.3862943611198906;

AllocationGame distortion_game(std::vector<double> lambdas, double budget) {
    AllocationGame g;
    g.lambdas = std::move(lambdas);
    g.budget_kind = BudgetKind::Distortion;
    g.budget = budget;
    return g;
}

AllocationGame rate_game(std::vector<double> lambdas, double budget) {
    AllocationGame g;
    g.lambdas = std::move(lambdas);
    g.budget_kind = BudgetKind::Rate;
    g.budget = budget;
    return g;
}

}  // namespace

TEST_CASE("quality and marginals") {
    CHECK(quality_gaussian(3.0, 0.0) == doctest::Approx(-3.0));
    CHECK(quality_gaussian(4.0, 1.0) == doctest::Approx(-1.0));

    // Marginal at zero rate, checked against a central finite difference.
    const double analytic = quality_marginal_gaussian(1.0, 0.0);
    CHECK(analytic == doctest::Approx(kTwoLn2).epsilon(1e-12));
    const double h = 1e-5;
    const double numeric = (quality_gaussian(1.0, h) - quality_gaussian(1.0, -h)) / (2.0 * h);
    CHECK(analytic == doctest::Approx(numeric).epsilon(1e-8));
}

TEST_CASE("best responses") {
    CHECK(best_response_gaussian(1.0, kTwoLn2) == 0.0);
    CHECK(best_response_gaussian(1.0, 2.0 * kTwoLn2) == 0.0);
    CHECK(best_response_gaussian(4.0, kTwoLn2) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK_THROWS_AS(best_response_gaussian(1.0, 0.0), DomainError);

    // Doubling the variance adds exactly half a bit when interior.
    Stream s(61);
    for (int trial = 0; trial < 50; ++trial) {
        const double lambda = s.uniform(0.5, 4.0);
        const double mu = s.uniform(0.01, 0.5);
        const double r1 = best_response_gaussian(lambda, mu);
        const double r2 = best_response_gaussian(2.0 * lambda, mu);
        if (r1 > 0.0) CHECK(r2 - r1 == doctest::Approx(0.5).epsilon(1e-10));
    }
}

TEST_CASE("single player takes the whole budget") {
    const auto alloc = nash_solve(rate_game({2.0}, 1.5));
    CHECK(alloc.rate_bits[0] == doctest::Approx(1.5).epsilon(1e-10));
}

TEST_CASE("two-mode distortion budget reproduces water-filling") {
    const auto alloc = nash_solve(distortion_game({4.0, 1.0}, 2.0));
    CHECK(alloc.theta == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(alloc.rate_bits[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(alloc.rate_bits[1] == 0.0);
    CHECK(alloc.mu == doctest::Approx(kTwoLn2).epsilon(1e-12));

    const auto wf = waterfill_spectrum({4.0, 1.0}, 2.0);
    CHECK(alloc.theta == doctest::Approx(wf.theta).epsilon(1e-12));
}

TEST_CASE("symmetric players split evenly") {
    const auto alloc = nash_solve(distortion_game({2.0, 2.0}, 1.0));
    CHECK(alloc.rate_bits[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(alloc.rate_bits[1] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("equilibrium equals water-filling across random games") {
    Stream s(62);
    for (int trial = 0; trial < 100; ++trial) {
        const int m = s.uniform_int(1, 16);
        std::vector<double> lambdas(static_cast<std::size_t>(m));
        for (double& l : lambdas) l = s.uniform(0.01, 10.0);
        const double total = std::accumulate(lambdas.begin(), lambdas.end(), 0.0);
        const double budget = s.uniform(0.05, 0.999) * total;

        const auto alloc = nash_solve(distortion_game(lambdas, budget));
        const auto wf = waterfill_spectrum(lambdas, budget);
        CHECK(std::abs(alloc.theta - wf.theta) <= 1e-10 * wf.theta);
        for (std::size_t i = 0; i < lambdas.size(); ++i) {
            CHECK(std::abs(alloc.rate_bits[i] - wf.mode_rate_bits[i]) <= 1e-8);
        }
    }
}

TEST_CASE("rate-budget equilibria satisfy first-order conditions") {
    Stream s(63);
    for (int trial = 0; trial < 100; ++trial) {
        const int m = s.uniform_int(1, 12);
        std::vector<double> lambdas(static_cast<std::size_t>(m));
        for (double& l : lambdas) l = s.uniform(0.01, 10.0);
        const double budget = s.uniform(0.2, 3.0) * m;

        const auto game = rate_game(lambdas, budget);
        const auto alloc = nash_solve(game);
        double total = 0.0;
        for (double r : alloc.rate_bits) total += r;
        CHECK(total == doctest::Approx(budget).epsilon(1e-9));

        const auto report = kkt_verify(alloc, game);
        CHECK(report.max_residual() < 1e-8);
    }
}

TEST_CASE("best responses at the equilibrium price are a one-step fixed point") {
    const auto game = distortion_game({5.0, 2.0, 0.5}, 2.0);
    const auto alloc = nash_solve(game);
    for (std::size_t i = 0; i < game.lambdas.size(); ++i) {
        CHECK(best_response(game, i, alloc.mu) == doctest::Approx(alloc.rate_bits[i]).epsilon(1e-12));
    }
}

TEST_CASE("kkt report flags constructed violations") {
    const auto game = distortion_game({4.0, 1.0}, 2.0);
    const auto alloc = nash_solve(game);

    SUBCASE("clean equilibrium") {
        const auto report = kkt_verify(alloc, game);
        CHECK(report.max_residual() < 1e-10);
    }

    SUBCASE("moving rate between players breaks stationarity") {
        const auto big = distortion_game({4.0, 2.0}, 1.0);  // both active
        auto moved = nash_solve(big);
        moved.rate_bits[0] += 0.1;
        moved.rate_bits[1] -= 0.1;
        moved.distortion[0] = big.lambdas[0] * std::exp2(-2.0 * moved.rate_bits[0]);
        moved.distortion[1] = big.lambdas[1] * std::exp2(-2.0 * moved.rate_bits[1]);
        const auto report = kkt_verify(moved, big);
        CHECK(report.stationarity_residual > 1e-3);
    }

    SUBCASE("paying an inactive player is flagged") {
        auto padded = alloc;
        padded.rate_bits[1] = 0.2;  // lambda_1 = 1 sits below theta = 1? equal: marginal < mu
        padded.distortion[1] = game.lambdas[1] * std::exp2(-2.0 * 0.2);
        const auto report = kkt_verify(padded, game);
        CHECK(report.max_residual() > 1e-3);
    }
}

TEST_CASE("no profitable single-player deviation") {
    Stream s(64);
    for (int trial = 0; trial < 30; ++trial) {
        const int m = s.uniform_int(2, 10);
        std::vector<double> lambdas(static_cast<std::size_t>(m));
        for (double& l : lambdas) l = s.uniform(0.05, 8.0);
        const double total = std::accumulate(lambdas.begin(), lambdas.end(), 0.0);
        const auto game = distortion_game(lambdas, s.uniform(0.1, 0.9) * total);
        const auto alloc = nash_solve(game);

        const double delta = 1e-3;
        for (std::size_t i = 0; i < lambdas.size(); ++i) {
            const double r = alloc.rate_bits[i];
            const double payoff =
                quality_gaussian(lambdas[i], r) - alloc.mu * r;
            for (const double candidate : {r + delta, r - delta}) {
                if (candidate < 0.0) continue;
                const double moved =
                    quality_gaussian(lambdas[i], candidate) - alloc.mu * candidate;
                CHECK(moved <= payoff + 1e-12);
            }
        }
    }
}

TEST_CASE("scaling variances and the distortion budget preserves the allocation") {
    Stream s(65);
    std::vector<double> lambdas = {3.0, 1.2, 0.4, 0.05};
    const double budget = 1.5;
    const auto base = nash_solve(distortion_game(lambdas, budget));
    for (const double c : {0.1, 7.0}) {
        std::vector<double> scaled = lambdas;
        for (double& l : scaled) l *= c;
        const auto after = nash_solve(distortion_game(scaled, c * budget));
        for (std::size_t i = 0; i < lambdas.size(); ++i) {
            CHECK(after.rate_bits[i] == doctest::Approx(base.rate_bits[i]).epsilon(1e-9));
            CHECK((after.rate_bits[i] > 0.0) == (base.rate_bits[i] > 0.0));
        }
        CHECK(after.theta == doctest::Approx(c * base.theta).epsilon(1e-10));
    }
}

TEST_CASE("infeasible and invalid budgets") {
    CHECK_THROWS_AS(nash_solve(distortion_game({1.0, 1.0}, 3.0)), InfeasibleError);
    CHECK_THROWS_AS(nash_solve(distortion_game({1.0}, 0.0)), ValidationError);
    CHECK_THROWS_AS(nash_solve(distortion_game({-1.0}, 0.5)), ValidationError);
    CHECK_THROWS_AS(nash_solve(distortion_game({}, 0.5)), ValidationError);
}

TEST_CASE("custom marginal quality") {
    AllocationGame game;
    game.lambdas = {1.0, 1.0};
    game.budget_kind = BudgetKind::Rate;
    game.budget = 2.0;
    // Player 0 values rate twice as much as player 1, linearly decaying.
    game.marginal = [](std::size_t player, double r) {
        const double base = player == 0 ? 4.0 : 2.0;
        return base / (1.0 + r);
    };

    const auto alloc = nash_solve(game);
    double total = 0.0;
    for (double r : alloc.rate_bits) total += r;
    CHECK(total == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(alloc.rate_bits[0] > alloc.rate_bits[1]);

    const auto report = kkt_verify(alloc, game);
    CHECK(report.stationarity_residual < 1e-8);
    CHECK(report.complementary_residual < 1e-8);

    // The distortion budget form is tied to the default quality.
    game.budget_kind = BudgetKind::Distortion;
    CHECK_THROWS_AS(nash_solve(game), ValidationError);
}
