#include "ratedist/wz.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <thread>

#include <Eigen/Dense>

#include "ratedist/gaussian.hpp"

namespace ratedist {

namespace {

constexpr std::uint64_t kBlockSize = 4096;

Eigen::MatrixXd generator_transpose(const Lattice& lat) {
    const auto rows = lat.generator();
    const int n = lat.dim();
    Eigen::MatrixXd gt(n, n);
    for (int i = 0; i < n; ++i) {
        for (int d = 0; d < n; ++d) gt(d, i) = rows[i][d];
    }
    return gt;
}

// Integer coordinates of a lattice point in the generator basis.
std::vector<long long> lattice_coordinates(const Lattice& lat, const std::vector<double>& point) {
    const int n = lat.dim();
    if (static_cast<int>(point.size()) != n) {
        throw ValidationError("bin_index: point dimension does not match the lattice");
    }
    const Eigen::MatrixXd gt = generator_transpose(lat);
    Eigen::VectorXd x(n);
    for (int d = 0; d < n; ++d) x[d] = point[d];
    const Eigen::VectorXd a = gt.colPivHouseholderQr().solve(x);

    std::vector<long long> coords(n);
    Eigen::VectorXd rounded(n);
    for (int i = 0; i < n; ++i) {
        coords[i] = std::llround(a[i]);
        rounded[i] = static_cast<double>(coords[i]);
    }
    const double err = (gt * rounded - x).cwiseAbs().maxCoeff();
    if (err > 1e-6 * lat.scale()) {
        throw ValidationError("bin_index: point is not on the fine lattice (residual " +
                              std::to_string(err) + ")");
    }
    return coords;
}

std::uint64_t positive_mod(long long v, long long m) {
    const long long r = v % m;
    return static_cast<std::uint64_t>(r < 0 ? r + m : r);
}

}  // namespace

NestedPair::NestedPair(Lattice fine, int nesting)
    : fine_(fine), coarse_(fine.scaled(static_cast<double>(nesting))), nesting_(nesting) {
    if (nesting < 1) throw ValidationError("NestedPair: nesting factor must be >= 1");
    bin_count_ = 1;
    for (int d = 0; d < fine_.dim(); ++d) {
        bin_count_ *= static_cast<std::uint64_t>(nesting);
    }
    // The volume ratio must be an exact integer and every coarse generator
    // row must sit on the fine lattice.
    const double ratio = coarse_.cell_volume() / fine_.cell_volume();
    if (std::abs(ratio - static_cast<double>(bin_count_)) > 1e-6 * static_cast<double>(bin_count_)) {
        throw ValidationError("NestedPair: cell volume ratio is not the expected integer");
    }
    for (const auto& row : coarse_.generator()) {
        const std::vector<double> snapped = fine_.nearest_point(row);
        for (std::size_t d = 0; d < row.size(); ++d) {
            if (std::abs(snapped[d] - row[d]) > 1e-9 * std::max(1.0, std::abs(row[d]))) {
                throw ValidationError("NestedPair: coarse lattice is not a sublattice of the fine one");
            }
        }
    }
}

std::uint64_t bin_index(const NestedPair& pair, const std::vector<double>& fine_point) {
    const auto coords = lattice_coordinates(pair.fine(), fine_point);
    const long long m = pair.nesting();
    std::uint64_t index = 0;
    std::uint64_t stride = 1;
    for (std::size_t i = 0; i < coords.size(); ++i) {
        index += positive_mod(coords[i], m) * stride;
        stride *= static_cast<std::uint64_t>(m);
    }
    return index;
}

namespace {

// Coset representative: generator-basis digits of the index.
std::vector<double> coset_representative(const NestedPair& pair, std::uint64_t index) {
    const int n = pair.fine().dim();
    const auto rows = pair.fine().generator();
    const std::uint64_t m = static_cast<std::uint64_t>(pair.nesting());
    std::vector<double> point(n, 0.0);
    for (int i = 0; i < n; ++i) {
        const double digit = static_cast<double>(index % m);
        index /= m;
        for (int d = 0; d < n; ++d) point[d] += digit * rows[i][d];
    }
    return point;
}

}  // namespace

std::uint64_t wz_encode(const NestedPair& pair, const std::vector<double>& x,
                        const std::vector<double>& dither) {
    if (x.size() != dither.size() || static_cast<int>(x.size()) != pair.fine().dim()) {
        throw ValidationError("wz_encode: dimension mismatch");
    }
    std::vector<double> shifted(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) shifted[i] = x[i] + dither[i];
    return bin_index(pair, pair.fine().nearest_point(shifted));
}

std::vector<double> wz_decode(const NestedPair& pair, std::uint64_t index,
                              const std::vector<double>& y, const std::vector<double>& dither) {
    if (index >= pair.bin_count()) {
        throw ValidationError("wz_decode: coset index " + std::to_string(index) +
                              " out of range (bin count " + std::to_string(pair.bin_count()) + ")");
    }
    if (y.size() != dither.size() || static_cast<int>(y.size()) != pair.fine().dim()) {
        throw ValidationError("wz_decode: dimension mismatch");
    }
    const std::vector<double> rep = coset_representative(pair, index);
    std::vector<double> target(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) target[i] = y[i] + dither[i] - rep[i];
    const std::vector<double> coarse_point = pair.coarse().nearest_point(target);
    std::vector<double> out(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) out[i] = rep[i] + coarse_point[i] - dither[i];
    return out;
}

void WZConfig::validate() const {
    if (!(source_variance > 0.0) || !(noise_variance > 0.0)) {
        throw ValidationError("WZConfig: variances must be > 0");
    }
    if (samples < 1000) throw ValidationError("WZConfig: need at least 1000 samples");
    if (nesting < 1) throw ValidationError("WZConfig: nesting factor must be >= 1");
    if (threads < 1) throw ValidationError("WZConfig: threads must be >= 1");
    Lattice::from_name(lattice, lattice_scale);
}

NestedPair WZConfig::make_pair() const {
    return NestedPair(Lattice::from_name(lattice, lattice_scale), nesting);
}

namespace {

struct BlockStats {
    double squared_error = 0.0;
    std::uint64_t failures = 0;
};

std::string join_vec(const std::vector<double>& v) {
    std::string s;
    char buf[32];
    for (std::size_t i = 0; i < v.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g", v[i]);
        if (i > 0) s += ';';
        s += buf;
    }
    return s;
}

}  // namespace

PipelineReport run_pipeline(const WZConfig& cfg, std::ostream* trace) {
    cfg.validate();
    const NestedPair pair = cfg.make_pair();
    const Lattice& fine = pair.fine();
    const int n = fine.dim();
    const std::uint64_t total_samples = cfg.samples;

    const CounterRng source_rng(cfg.seed);
    // A separate stream for the dither so sample slots never collide.
    const DitheredQuantizer quantizer(fine, CounterRng(cfg.seed).word(0x0D17, 0));

    const double sigma = std::sqrt(cfg.source_variance);
    const double sigma_n = std::sqrt(cfg.noise_variance);
    const double cond_var = cfg.source_variance * cfg.noise_variance /
                            (cfg.source_variance + cfg.noise_variance);
    const double alpha = cond_var / (cond_var + fine.cell_second_moment_per_dim());

    const std::vector<double> fixed_dither = quantizer.sample_dither(0);

    const auto process_sample = [&](std::uint64_t s, BlockStats& stats) {
        std::vector<double> x(n), y(n);
        for (int d = 0; d < n; ++d) {
            x[d] = sigma * source_rng.gaussian(s, static_cast<std::uint32_t>(2 * d));
            y[d] = x[d] + sigma_n * source_rng.gaussian(s, static_cast<std::uint32_t>(2 * n + 2 * d));
        }
        const std::vector<double> dither =
            cfg.fresh_dither ? quantizer.sample_dither(s) : fixed_dither;

        const std::vector<double> u = quantizer.encode(x, dither);
        const std::uint64_t index = bin_index(pair, u);
        std::vector<double> xhat = wz_decode(pair, index, y, dither);

        bool failed = false;
        for (int d = 0; d < n; ++d) {
            if (std::abs(xhat[d] + dither[d] - u[d]) > 1e-6 * fine.scale()) failed = true;
        }
        if (failed) ++stats.failures;

        if (cfg.mmse_scaling) {
            for (int d = 0; d < n; ++d) xhat[d] = y[d] + alpha * (xhat[d] - y[d]);
        }
        double err2 = 0.0;
        for (int d = 0; d < n; ++d) {
            const double e = x[d] - xhat[d];
            err2 += e * e;
        }
        stats.squared_error += err2;

        if (trace != nullptr) {
            std::vector<double> err(n);
            for (int d = 0; d < n; ++d) err[d] = xhat[d] - x[d];
            (*trace) << join_vec(x) << ',' << join_vec(y) << ',' << join_vec(dither) << ','
                     << index << ',' << join_vec(xhat) << ',' << join_vec(err) << '\n';
        }
    };

    const std::uint64_t n_blocks = (total_samples + kBlockSize - 1) / kBlockSize;
    std::vector<BlockStats> blocks(n_blocks);
    const auto process_block = [&](std::uint64_t b) {
        const std::uint64_t begin = b * kBlockSize;
        const std::uint64_t end = std::min(total_samples, begin + kBlockSize);
        for (std::uint64_t s = begin; s < end; ++s) process_sample(s, blocks[b]);
    };

    if (trace != nullptr || cfg.threads <= 1 || n_blocks <= 1) {
        if (trace != nullptr) (*trace) << "x,y,dither,index,xhat,err\n";
        for (std::uint64_t b = 0; b < n_blocks; ++b) process_block(b);
    } else {
        // Fixed-size blocks reduced in block order keep the result
        // byte-identical for any worker count.
        const std::uint64_t workers =
            std::min<std::uint64_t>(static_cast<std::uint64_t>(cfg.threads), n_blocks);
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (std::uint64_t w = 0; w < workers; ++w) {
            pool.emplace_back([&, w]() {
                for (std::uint64_t b = w; b < n_blocks; b += workers) process_block(b);
            });
        }
        for (auto& t : pool) t.join();
    }

    double squared_error = 0.0;
    std::uint64_t failures = 0;
    for (const auto& b : blocks) {
        squared_error += b.squared_error;
        failures += b.failures;
    }

    PipelineReport report;
    report.dimension = n;
    report.bin_count = pair.bin_count();
    report.samples = total_samples;
    report.empirical_rate_bits = std::log2(static_cast<double>(pair.bin_count()));
    report.empirical_distortion =
        squared_error / (static_cast<double>(total_samples) * static_cast<double>(n));
    report.decode_failure_fraction =
        static_cast<double>(failures) / static_cast<double>(total_samples);

    const double total_distortion = static_cast<double>(n) * report.empirical_distortion;
    const double total_cond = static_cast<double>(n) * cond_var;
    if (total_distortion >= total_cond || total_distortion <= 0.0) {
        report.theoretical_rate_bits = 0.0;
    } else {
        const GaussianSource cond =
            GaussianSource::from_eigenvalues(std::vector<double>(n, cond_var));
        report.theoretical_rate_bits = wyner_ziv_rate(cond, total_distortion).total_rate_bits;
    }
    report.gap_bits = report.empirical_rate_bits - report.theoretical_rate_bits;
    return report;
}

}  // namespace ratedist
