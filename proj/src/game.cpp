#include "ratedist/game.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ratedist {

namespace {

constexpr double kTwoLn2 = 1.3862943611198906;  // 2 ln 2

double default_marginal(const AllocationGame& game, std::size_t i, double r) {
    return quality_marginal_gaussian(game.lambdas[i], r);
}

double marginal_of(const AllocationGame& game, std::size_t i, double r) {
    return game.has_custom_quality() ? game.marginal(i, r) : default_marginal(game, i, r);
}

}  // namespace

void AllocationGame::validate() const {
    if (lambdas.empty()) throw ValidationError("AllocationGame: need at least one player");
    for (double l : lambdas) {
        if (!(l > 0.0) || !std::isfinite(l)) {
            throw ValidationError("AllocationGame: player variances must be finite and > 0");
        }
    }
    if (!(budget > 0.0) || !std::isfinite(budget)) {
        throw ValidationError("AllocationGame: budget must be finite and > 0");
    }
    if (budget_kind == BudgetKind::Distortion && has_custom_quality()) {
        throw ValidationError(
            "AllocationGame: a distortion budget requires the default quality model");
    }
}

double quality_gaussian(double lambda, double rate_bits) {
    return -lambda * std::exp2(-2.0 * rate_bits);
}

double quality_marginal_gaussian(double lambda, double rate_bits) {
    return kTwoLn2 * lambda * std::exp2(-2.0 * rate_bits);
}

double best_response_gaussian(double lambda, double mu) {
    if (!(mu > 0.0)) throw DomainError("best_response: price must be > 0");
    const double top = kTwoLn2 * lambda;
    if (mu >= top) return 0.0;
    return 0.5 * std::log2(top / mu);
}

double best_response(const AllocationGame& game, std::size_t player, double mu) {
    if (player >= game.lambdas.size()) throw DomainError("best_response: player out of range");
    if (!(mu > 0.0)) throw DomainError("best_response: price must be > 0");
    if (!game.has_custom_quality()) return best_response_gaussian(game.lambdas[player], mu);

    if (game.marginal(player, 0.0) <= mu) return 0.0;
    double hi = 1.0;
    int guard = 0;
    while (game.marginal(player, hi) > mu) {
        hi *= 2.0;
        if (++guard > 60) {
            throw ConvergenceError("best_response: marginal quality never drops below the price",
                                   game.marginal(player, hi) - mu, guard);
        }
    }
    double lo = hi > 1.0 ? hi / 2.0 : 0.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (game.marginal(player, mid) > mu) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

namespace {

Allocation solve_rate_budget(const AllocationGame& game, double tol) {
    const std::size_t n = game.lambdas.size();
    const double budget = game.budget;

    const auto total_response = [&](double mu) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += best_response(game, i, mu);
        return s;
    };

    double mu_hi = 0.0;
    for (std::size_t i = 0; i < n; ++i) mu_hi = std::max(mu_hi, marginal_of(game, i, 0.0));
    if (!(mu_hi > 0.0)) throw DegeneracyError("nash_solve: marginal quality at zero rate is not positive");

    double mu_lo = mu_hi;
    int guard = 0;
    while (total_response(mu_lo) < budget) {
        mu_lo *= 0.5;
        if (++guard > 2000) {
            throw ConvergenceError("nash_solve: could not bracket the equilibrium price",
                                   budget - total_response(mu_lo), guard);
        }
    }

    // Summed best responses decrease in the price; bisect to the budget.
    const double width_tol = tol * std::max(mu_hi, 1e-300);
    for (int it = 0; it < 200 && mu_hi - mu_lo > width_tol; ++it) {
        const double mid = 0.5 * (mu_lo + mu_hi);
        if (total_response(mid) >= budget) {
            mu_lo = mid;
        } else {
            mu_hi = mid;
        }
    }
    double mu = 0.5 * (mu_lo + mu_hi);

    if (!game.has_custom_quality()) {
        // Exact price for the bracketed active set:
        // sum_{i active} 0.5 log2(2 ln2 lambda_i / mu) = budget.
        double log_sum = 0.0;
        std::size_t active = 0;
        for (double l : game.lambdas) {
            if (kTwoLn2 * l > mu) {
                log_sum += std::log2(kTwoLn2 * l);
                ++active;
            }
        }
        if (active > 0) {
            const double snapped = std::exp2((log_sum - 2.0 * budget) / static_cast<double>(active));
            bool consistent = true;
            for (double l : game.lambdas) {
                const double top = kTwoLn2 * l;
                if (top > mu && top < snapped * (1.0 - 1e-9)) consistent = false;
                if (top <= mu && top > snapped * (1.0 + 1e-9)) consistent = false;
            }
            if (consistent && snapped > 0.0) mu = snapped;
        }
    }

    Allocation alloc;
    alloc.mu = mu;
    alloc.theta = mu / kTwoLn2;
    alloc.rate_bits.resize(n);
    alloc.distortion.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        alloc.rate_bits[i] = best_response(game, i, mu);
        alloc.distortion[i] = game.lambdas[i] * std::exp2(-2.0 * alloc.rate_bits[i]);
    }
    return alloc;
}

Allocation solve_distortion_budget(const AllocationGame& game, double tol) {
    const std::size_t n = game.lambdas.size();
    const double budget = game.budget;
    const double total = std::accumulate(game.lambdas.begin(), game.lambdas.end(), 0.0);
    const double lambda_max = *std::max_element(game.lambdas.begin(), game.lambdas.end());
    if (budget > total * (1.0 + 1e-12)) {
        throw InfeasibleError("nash_solve: distortion budget " + std::to_string(budget) +
                              " exceeds the total variance " + std::to_string(total));
    }

    // Player i's distortion at price mu is min(lambda_i, mu / (2 ln 2));
    // bisect the price so the equilibrium distortions meet the budget.
    const auto total_distortion = [&](double mu) {
        const double level = mu / kTwoLn2;
        double s = 0.0;
        for (double l : game.lambdas) s += std::min(l, level);
        return s;
    };

    double mu_lo = 0.0;
    double mu_hi = kTwoLn2 * lambda_max;
    const double width_tol = tol * std::max(mu_hi, 1e-300);
    for (int it = 0; it < 200 && mu_hi - mu_lo > width_tol; ++it) {
        const double mid = 0.5 * (mu_lo + mu_hi);
        if (total_distortion(mid) < budget) {
            mu_lo = mid;
        } else {
            mu_hi = mid;
        }
    }
    double theta = 0.5 * (mu_lo + mu_hi) / kTwoLn2;

    // Exact level for the bracketed active set.
    {
        double inactive_sum = 0.0;
        std::size_t active = 0;
        for (double l : game.lambdas) {
            if (l > theta) {
                ++active;
            } else {
                inactive_sum += l;
            }
        }
        if (active > 0) {
            const double snapped = (budget - inactive_sum) / static_cast<double>(active);
            bool consistent = true;
            for (double l : game.lambdas) {
                if (l > theta && l < snapped * (1.0 - 1e-9)) consistent = false;
                if (l <= theta && l > snapped * (1.0 + 1e-9)) consistent = false;
            }
            if (consistent && snapped > 0.0) theta = snapped;
        } else {
            theta = lambda_max;
        }
    }

    Allocation alloc;
    alloc.theta = theta;
    alloc.mu = kTwoLn2 * theta;
    alloc.rate_bits.resize(n);
    alloc.distortion.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double l = game.lambdas[i];
        alloc.rate_bits[i] = l > theta ? 0.5 * std::log2(l / theta) : 0.0;
        alloc.distortion[i] = std::min(l, theta);
    }
    return alloc;
}

}  // namespace

Allocation nash_solve(const AllocationGame& game, double tol) {
    game.validate();
    if (!(tol > 0.0)) throw DomainError("nash_solve: tol must be > 0");
    return game.budget_kind == BudgetKind::Rate ? solve_rate_budget(game, tol)
                                                : solve_distortion_budget(game, tol);
}

double KktReport::max_residual() const {
    return std::max(std::max(stationarity_residual, primal_residual),
                    std::max(dual_residual, complementary_residual));
}

KktReport kkt_verify(const Allocation& alloc, const AllocationGame& game) {
    game.validate();
    const std::size_t n = game.lambdas.size();
    if (alloc.rate_bits.size() != n) {
        throw ValidationError("kkt_verify: allocation size does not match the game");
    }

    KktReport report;
    report.dual_residual = std::max(0.0, -alloc.mu);

    double min_rate = 0.0;
    double rate_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = alloc.rate_bits[i];
        min_rate = std::min(min_rate, r);
        rate_sum += r;
        if (r > 1e-12) {
            report.stationarity_residual =
                std::max(report.stationarity_residual, std::abs(marginal_of(game, i, r) - alloc.mu));
        } else {
            report.complementary_residual =
                std::max(report.complementary_residual,
                         std::max(0.0, marginal_of(game, i, 0.0) - alloc.mu));
        }
    }

    if (game.budget_kind == BudgetKind::Rate) {
        report.primal_residual = std::abs(rate_sum - game.budget);
    } else {
        double dist_sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            dist_sum += i < alloc.distortion.size()
                            ? alloc.distortion[i]
                            : game.lambdas[i] * std::exp2(-2.0 * alloc.rate_bits[i]);
        }
        report.primal_residual = std::abs(dist_sum - game.budget);
    }
    report.primal_residual += std::max(0.0, -min_rate);
    return report;
}

}  // namespace ratedist
