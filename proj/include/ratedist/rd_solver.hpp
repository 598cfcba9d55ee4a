#pragma once

// Discrete rate-distortion frontier by alternating minimization. At a fixed
// multiplier beta the optimal test channel has the exponential form
// p(xhat|x) proportional to q(xhat) * exp(-beta * d(x, xhat)); alternating
// that update with the output-marginal update descends the objective
// I + beta * E[d] to the frontier point for that beta.
//
// Beta is in natural units (the exponent uses e); rates are reported in
// bits, with the log2(e) conversion applied only at reporting.

#include <cstddef>
#include <string>
#include <vector>

#include "ratedist/errors.hpp"
#include "ratedist/prob.hpp"

namespace ratedist {

struct DistortionMatrix {
    std::vector<std::string> source_alphabet;
    std::vector<std::string> repro_alphabet;
    std::vector<double> d;  // row-major, |source| x |repro|, entries >= 0 and finite

    DistortionMatrix(std::vector<std::string> source, std::vector<std::string> repro,
                     std::vector<double> values);

    std::size_t n_source() const { return source_alphabet.size(); }
    std::size_t n_repro() const { return repro_alphabet.size(); }
    double at(std::size_t x, std::size_t xhat) const { return d[x * n_repro() + xhat]; }

    // 0 on the diagonal, 1 elsewhere (alphabets identical).
    static DistortionMatrix hamming(const std::vector<std::string>& alphabet);
    // (s_i - r_j)^2 over two point grids; labels are the rendered values.
    static DistortionMatrix squared_error(const std::vector<double>& source_points,
                                          const std::vector<double>& repro_points);
};

struct RDPoint {
    double beta = 0.0;
    double rate_bits = 0.0;
    double distortion = 0.0;
    std::vector<double> test_channel;  // row-major, |source| x |repro|; rows sum to 1
    int iterations = 0;
    std::vector<std::size_t> pruned;       // reproduction symbols dropped (marginal underflow)
    std::vector<double> lagrangian_trace;  // per-iteration objective, when recorded
};

struct RDCurve {
    std::vector<RDPoint> points;  // sorted by distortion ascending
};

struct SolveOptions {
    double tol = 1e-10;       // stop when the objective changes by less than this (nats)
    int max_iter = 100000;
    double prune_threshold = 1e-12;
    bool record_trace = false;
    bool warm_start = true;   // reuse the previous marginal across a beta sweep
    int threads = 1;          // parallel sweep; only used when warm_start is off
};

// One exponential-update step: row x of the result is the normalization of
// repro_marginal[j] * exp(-beta * d(x, j)). Throws DegeneracyError if a row
// normalizer underflows to zero.
std::vector<double> gibbs_update(const Distribution& source,
                                 const std::vector<double>& repro_marginal,
                                 const DistortionMatrix& d, double beta);

// Output marginal induced by a channel: q(j) = sum_x p(x) c(j|x).
std::vector<double> induced_marginal(const Distribution& source,
                                     const std::vector<double>& channel, std::size_t n_repro);

RDPoint solve_rd_point(const Distribution& source, const DistortionMatrix& d, double beta,
                       const SolveOptions& options = {});

// One point per beta (ascending); sorted by distortion and checked for a
// non-increasing rate frontier.
RDCurve trace_curve(const Distribution& source, const DistortionMatrix& d,
                    const std::vector<double>& betas, const SolveOptions& options = {});

}  // namespace ratedist
