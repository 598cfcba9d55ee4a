#pragma once

// Rate allocation as a non-cooperative game: players with concave quality
// payoffs u_i(R_i) = Q_i(R_i) - mu * R_i share a rate (or distortion)
// budget. Best responses at the equilibrium price equalize marginal
// quality, which reproduces the water-filling allocation; kkt_verify
// reports the first-order optimality residuals.

#include <cstddef>
#include <functional>
#include <vector>

#include "ratedist/errors.hpp"

namespace ratedist {

enum class BudgetKind { Rate, Distortion };

// Marginal quality dQ_i/dR for player i at rate r (bits). Must be positive
// and strictly decreasing in r.
using MarginalFn = std::function<double(std::size_t, double)>;

struct AllocationGame {
    std::vector<double> lambdas;  // per-player variances
    BudgetKind budget_kind = BudgetKind::Distortion;
    double budget = 0.0;
    // Empty means the default quality Q_i(R) = -lambda_i * 2^(-2R).
    MarginalFn marginal;

    void validate() const;
    bool has_custom_quality() const { return static_cast<bool>(marginal); }
};

// Default quality, its marginal, and the closed-form best response.
double quality_gaussian(double lambda, double rate_bits);           // -lambda * 2^(-2R)
double quality_marginal_gaussian(double lambda, double rate_bits);  // 2 ln2 * lambda * 2^(-2R)
double best_response_gaussian(double lambda, double mu);

// Best response of one player at price mu (custom marginals solved by
// bisection on the decreasing marginal).
double best_response(const AllocationGame& game, std::size_t player, double mu);

struct Allocation {
    std::vector<double> rate_bits;
    std::vector<double> distortion;  // lambda_i * 2^(-2 R_i) under the default quality
    double theta = 0.0;              // implied water level (mu / (2 ln 2))
    double mu = 0.0;                 // equilibrium price
};

struct KktReport {
    double stationarity_residual = 0.0;   // active players: |marginal - mu|
    double primal_residual = 0.0;         // budget violation and negative rates
    double dual_residual = 0.0;           // max(0, -mu)
    double complementary_residual = 0.0;  // inactive players: max(0, marginal(0) - mu)

    double max_residual() const;
};

// Equilibrium price by bisection so the summed best responses meet the
// budget; under the default quality the bracketed active set is then
// solved in closed form.
Allocation nash_solve(const AllocationGame& game, double tol = 1e-12);

KktReport kkt_verify(const Allocation& alloc, const AllocationGame& game);

}  // namespace ratedist
