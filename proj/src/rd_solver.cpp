#include "ratedist/rd_solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <limits>
#include <set>
#include <thread>
#include <utility>

namespace ratedist {

namespace {

constexpr double kLog2e = 1.4426950408889634;
// Slack on the non-increasing rate check across a swept frontier.
constexpr double kFrontierSlack = 1e-6;

std::string render(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void check_compatible(const Distribution& source, const DistortionMatrix& d) {
    if (source.alphabet() != d.source_alphabet) {
        throw ValidationError("rd-solver: source alphabet does not match the distortion matrix");
    }
}

}  // namespace

DistortionMatrix::DistortionMatrix(std::vector<std::string> source, std::vector<std::string> repro,
                                   std::vector<double> values)
    : source_alphabet(std::move(source)), repro_alphabet(std::move(repro)), d(std::move(values)) {
    if (source_alphabet.empty() || repro_alphabet.empty() ||
        d.size() != source_alphabet.size() * repro_alphabet.size()) {
        throw ValidationError("DistortionMatrix: values must be |source| x |repro| and non-empty");
    }
    for (double v : d) {
        if (!std::isfinite(v) || v < 0.0) {
            throw ValidationError("DistortionMatrix: entries must be finite and >= 0");
        }
    }
}

DistortionMatrix DistortionMatrix::hamming(const std::vector<std::string>& alphabet) {
    const std::size_t n = alphabet.size();
    std::vector<double> values(n * n, 1.0);
    for (std::size_t i = 0; i < n; ++i) values[i * n + i] = 0.0;
    return DistortionMatrix(alphabet, alphabet, std::move(values));
}

DistortionMatrix DistortionMatrix::squared_error(const std::vector<double>& source_points,
                                                 const std::vector<double>& repro_points) {
    std::vector<std::string> src, rep;
    src.reserve(source_points.size());
    rep.reserve(repro_points.size());
    for (double v : source_points) src.push_back(render(v));
    for (double v : repro_points) rep.push_back(render(v));
    std::vector<double> values(source_points.size() * repro_points.size());
    for (std::size_t i = 0; i < source_points.size(); ++i) {
        for (std::size_t j = 0; j < repro_points.size(); ++j) {
            const double diff = source_points[i] - repro_points[j];
            values[i * repro_points.size() + j] = diff * diff;
        }
    }
    return DistortionMatrix(std::move(src), std::move(rep), std::move(values));
}

std::vector<double> gibbs_update(const Distribution& source,
                                 const std::vector<double>& repro_marginal,
                                 const DistortionMatrix& d, double beta) {
    check_compatible(source, d);
    if (!(beta > 0.0)) throw DomainError("gibbs_update: beta must be > 0");
    if (repro_marginal.size() != d.n_repro()) {
        throw ValidationError("gibbs_update: marginal size does not match the reproduction alphabet");
    }
    const std::size_t n = d.n_source();
    const std::size_t m = d.n_repro();
    std::vector<double> channel(n * m);
    for (std::size_t x = 0; x < n; ++x) {
        double z = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            const double w = repro_marginal[j] * std::exp(-beta * d.at(x, j));
            channel[x * m + j] = w;
            z += w;
        }
        if (!(z > 0.0) || !std::isfinite(z)) {
            throw DegeneracyError("gibbs_update: normalizer underflowed for source symbol '" +
                                  d.source_alphabet[x] + "'; reduce beta or prune the reproduction alphabet");
        }
        for (std::size_t j = 0; j < m; ++j) channel[x * m + j] /= z;
    }
    return channel;
}

std::vector<double> induced_marginal(const Distribution& source,
                                     const std::vector<double>& channel, std::size_t n_repro) {
    if (channel.size() != source.size() * n_repro) {
        throw ValidationError("induced_marginal: channel size mismatch");
    }
    std::vector<double> q(n_repro, 0.0);
    for (std::size_t x = 0; x < source.size(); ++x) {
        const double px = source.p(x);
        for (std::size_t j = 0; j < n_repro; ++j) q[j] += px * channel[x * n_repro + j];
    }
    return q;
}

namespace {

// Alternating minimization from an initial reproduction marginal. On exit
// q_inout holds the final (pruned, renormalized) marginal for warm starts.
RDPoint solve_impl(const Distribution& source, const DistortionMatrix& d, double beta,
                   const SolveOptions& opt, std::vector<double>& q_inout) {
    check_compatible(source, d);
    if (!(beta > 0.0)) throw DomainError("solve_rd_point: beta must be > 0");
    if (!(opt.tol > 0.0)) throw DomainError("solve_rd_point: tol must be > 0");
    if (opt.max_iter < 1) throw DomainError("solve_rd_point: max_iter must be >= 1");

    const std::size_t n = d.n_source();
    const std::size_t m = d.n_repro();

    std::vector<double> kernel(n * m);
    for (std::size_t x = 0; x < n; ++x) {
        for (std::size_t j = 0; j < m; ++j) {
            kernel[x * m + j] = std::exp(-beta * d.at(x, j));
        }
    }

    std::vector<double>& q = q_inout;
    std::vector<double> channel(n * m);
    std::vector<double> marginal(m);
    std::set<std::size_t> pruned;

    RDPoint point;
    point.beta = beta;

    double objective_prev = 0.0;
    double objective_gap = std::numeric_limits<double>::infinity();
    double rate_nats = 0.0;
    double mean_distortion = 0.0;
    bool converged = false;

    for (int iter = 1; iter <= opt.max_iter; ++iter) {
        // Channel update.
        for (std::size_t x = 0; x < n; ++x) {
            double z = 0.0;
            for (std::size_t j = 0; j < m; ++j) {
                const double w = q[j] * kernel[x * m + j];
                channel[x * m + j] = w;
                z += w;
            }
            if (!(z > 0.0) || !std::isfinite(z)) {
                throw DegeneracyError("solve_rd_point: normalizer underflowed for source symbol '" +
                                      d.source_alphabet[x] +
                                      "'; reduce beta or prune the reproduction alphabet");
            }
            for (std::size_t j = 0; j < m; ++j) channel[x * m + j] /= z;
        }

        // True induced marginal and the objective I + beta * E[d] (nats).
        std::fill(marginal.begin(), marginal.end(), 0.0);
        for (std::size_t x = 0; x < n; ++x) {
            const double px = source.p(x);
            for (std::size_t j = 0; j < m; ++j) marginal[j] += px * channel[x * m + j];
        }
        rate_nats = 0.0;
        mean_distortion = 0.0;
        for (std::size_t x = 0; x < n; ++x) {
            const double px = source.p(x);
            if (px <= 0.0) continue;
            for (std::size_t j = 0; j < m; ++j) {
                const double c = channel[x * m + j];
                if (c > 0.0) {
                    rate_nats += px * c * std::log(c / marginal[j]);
                    mean_distortion += px * c * d.at(x, j);
                }
            }
        }
        const double objective = rate_nats + beta * mean_distortion;
        if (opt.record_trace) point.lagrangian_trace.push_back(objective);
        point.iterations = iter;

        // Next marginal: prune underflowed symbols, renormalize.
        double total = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            if (marginal[j] < opt.prune_threshold) {
                if (marginal[j] > 0.0) pruned.insert(j);
                marginal[j] = 0.0;
            }
            total += marginal[j];
        }
        if (!(total > 0.0)) {
            throw DegeneracyError("solve_rd_point: all reproduction symbols pruned");
        }
        for (std::size_t j = 0; j < m; ++j) q[j] = marginal[j] / total;

        if (iter > 1) {
            objective_gap = std::abs(objective_prev - objective);
            if (objective_gap < opt.tol) {
                converged = true;
                break;
            }
        }
        objective_prev = objective;
    }

    if (!converged) {
        throw ConvergenceError("solve_rd_point: no convergence after " +
                                   std::to_string(opt.max_iter) + " iterations (objective gap " +
                                   render(objective_gap) + " nats)",
                               objective_gap, opt.max_iter);
    }

    point.rate_bits = rate_nats * kLog2e;
    point.distortion = mean_distortion;
    point.test_channel = std::move(channel);
    point.pruned.assign(pruned.begin(), pruned.end());
    return point;
}

RDPoint solve_annotated(const Distribution& source, const DistortionMatrix& d, double beta,
                        const SolveOptions& opt) {
    std::vector<double> q(d.n_repro(), 1.0 / static_cast<double>(d.n_repro()));
    try {
        return solve_impl(source, d, beta, opt, q);
    } catch (const ConvergenceError& e) {
        throw ConvergenceError("beta=" + render(beta) + ": " + e.what(), e.residual(), e.iterations());
    } catch (const DegeneracyError& e) {
        throw DegeneracyError("beta=" + render(beta) + ": " + e.what());
    }
}

}  // namespace

RDPoint solve_rd_point(const Distribution& source, const DistortionMatrix& d, double beta,
                       const SolveOptions& options) {
    std::vector<double> q(d.n_repro(), 1.0 / static_cast<double>(d.n_repro()));
    return solve_impl(source, d, beta, options, q);
}

RDCurve trace_curve(const Distribution& source, const DistortionMatrix& d,
                    const std::vector<double>& betas, const SolveOptions& options) {
    if (betas.empty()) throw DomainError("trace_curve: beta list must be non-empty");
    for (std::size_t i = 0; i < betas.size(); ++i) {
        if (!(betas[i] > 0.0)) throw DomainError("trace_curve: betas must be > 0");
        if (i > 0 && betas[i] < betas[i - 1]) {
            throw DomainError("trace_curve: betas must be sorted ascending");
        }
    }

    std::vector<RDPoint> points(betas.size());
    if (options.warm_start || options.threads <= 1) {
        if (options.warm_start) {
            std::vector<double> q(d.n_repro(), 1.0 / static_cast<double>(d.n_repro()));
            for (std::size_t i = 0; i < betas.size(); ++i) {
                try {
                    points[i] = solve_impl(source, d, betas[i], options, q);
                } catch (const ConvergenceError& e) {
                    throw ConvergenceError("beta=" + render(betas[i]) + ": " + e.what(), e.residual(),
                                           e.iterations());
                } catch (const DegeneracyError& e) {
                    throw DegeneracyError("beta=" + render(betas[i]) + ": " + e.what());
                }
            }
        } else {
            for (std::size_t i = 0; i < betas.size(); ++i) {
                points[i] = solve_annotated(source, d, betas[i], options);
            }
        }
    } else {
        // Cold-start points are independent; partition across workers. The
        // per-point results are identical to the sequential cold-start run.
        const std::size_t workers =
            std::min<std::size_t>(static_cast<std::size_t>(options.threads), betas.size());
        std::vector<std::exception_ptr> errors(betas.size());
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&, w]() {
                for (std::size_t i = w; i < betas.size(); i += workers) {
                    try {
                        points[i] = solve_annotated(source, d, betas[i], options);
                    } catch (...) {
                        errors[i] = std::current_exception();
                    }
                }
            });
        }
        for (auto& t : pool) t.join();
        for (const auto& err : errors) {
            if (err) std::rethrow_exception(err);
        }
    }

    RDCurve curve;
    curve.points = std::move(points);
    std::stable_sort(curve.points.begin(), curve.points.end(),
                     [](const RDPoint& a, const RDPoint& b) { return a.distortion < b.distortion; });
    for (std::size_t i = 1; i < curve.points.size(); ++i) {
        if (curve.points[i].rate_bits > curve.points[i - 1].rate_bits + kFrontierSlack) {
            throw ConvergenceError(
                "trace_curve: frontier monotonicity violated near beta=" +
                    render(curve.points[i].beta),
                curve.points[i].rate_bits - curve.points[i - 1].rate_bits, curve.points[i].iterations);
        }
    }
    return curve;
}

}  // namespace ratedist
