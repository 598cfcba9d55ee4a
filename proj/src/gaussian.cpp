#include "ratedist/gaussian.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ratedist {

namespace {

constexpr double kZeroModeRel = 1e-12;

void check_square_symmetric(const Eigen::MatrixXd& m, const char* what) {
    if (m.rows() == 0 || m.rows() != m.cols()) {
        throw ValidationError(std::string(what) + ": matrix must be square and non-empty");
    }
    if (!m.allFinite()) {
        throw ValidationError(std::string(what) + ": matrix entries must be finite");
    }
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale) {
        throw ValidationError(std::string(what) + ": matrix is not symmetric");
    }
}

}  // namespace

GaussianSource::GaussianSource(Eigen::MatrixXd covariance) : covariance_(std::move(covariance)) {
    check_square_symmetric(covariance_, "GaussianSource");
    const Eigen::MatrixXd sym = 0.5 * (covariance_ + covariance_.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym);
    if (solver.info() != Eigen::Success) {
        throw ValidationError("GaussianSource: eigendecomposition failed");
    }

    const int n = dim();
    Eigen::VectorXd values = solver.eigenvalues();
    const double lambda_max = std::max(values.maxCoeff(), 0.0);
    const double neg_tol = 1e-12 * std::max(1.0, lambda_max);
    if (values.minCoeff() < -neg_tol) {
        throw ValidationError("GaussianSource: covariance is not positive semidefinite (min eigenvalue " +
                              std::to_string(values.minCoeff()) + ")");
    }

    // Reorder descending; clamp negatives and near-zero modes to exactly 0.
    eigenvalues_.resize(n);
    eigenvectors_.resize(n, n);
    for (int i = 0; i < n; ++i) {
        eigenvalues_[i] = values[n - 1 - i];
        eigenvectors_.col(i) = solver.eigenvectors().col(n - 1 - i);
    }
    const double zero_tol = kZeroModeRel * std::max(eigenvalues_.sum(), 0.0);
    for (int i = 0; i < n; ++i) {
        if (eigenvalues_[i] < zero_tol) eigenvalues_[i] = 0.0;
    }
}

GaussianSource GaussianSource::from_eigenvalues(const std::vector<double>& lambdas) {
    if (lambdas.empty()) throw ValidationError("GaussianSource: empty spectrum");
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(lambdas.size()),
                                                static_cast<Eigen::Index>(lambdas.size()));
    for (std::size_t i = 0; i < lambdas.size(); ++i) {
        if (!(lambdas[i] >= 0.0) || !std::isfinite(lambdas[i])) {
            throw ValidationError("GaussianSource: eigenvalues must be finite and >= 0");
        }
        cov(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = lambdas[i];
    }
    return GaussianSource(std::move(cov));
}

double gaussian_rate(double sigma2, double distortion) {
    if (!(distortion > 0.0)) throw DomainError("gaussian_rate: distortion must be > 0");
    if (sigma2 < 0.0) throw DomainError("gaussian_rate: variance must be >= 0");
    return rate_from_snr(snr_of(sigma2, distortion));
}

WaterfillResult waterfill_spectrum(const std::vector<double>& lambdas, double distortion) {
    if (lambdas.empty()) throw ValidationError("waterfill: empty spectrum");
    for (double l : lambdas) {
        if (!(l >= 0.0) || !std::isfinite(l)) {
            throw ValidationError("waterfill: eigenvalues must be finite and >= 0");
        }
    }
    if (!(distortion > 0.0)) throw DomainError("waterfill: distortion must be > 0");

    const double total = std::accumulate(lambdas.begin(), lambdas.end(), 0.0);
    const double lambda_max = *std::max_element(lambdas.begin(), lambdas.end());
    if (distortion > total * (1.0 + 1e-12)) {
        throw InfeasibleError("waterfill: distortion budget " + std::to_string(distortion) +
                              " exceeds total variance " + std::to_string(total) +
                              "; the rate is 0 with slack");
    }

    // sum_i min(lambda_i, theta) is continuous and strictly increasing in
    // theta on [0, lambda_max], so bisection brackets the unique level.
    const auto allocated = [&](double theta) {
        double s = 0.0;
        for (double l : lambdas) s += std::min(l, theta);
        return s;
    };
    double lo = 0.0, hi = lambda_max;
    const double theta_tol = 1e-12 * std::max(total, 1e-300);
    for (int it = 0; it < 200 && hi - lo > theta_tol; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (allocated(mid) < distortion) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    double theta = 0.5 * (lo + hi);

    // Snap to the exact solution for the bracketed active set; this makes
    // sum(min(lambda_i, theta)) = D to machine precision.
    {
        double inactive_sum = 0.0;
        int active = 0;
        for (double l : lambdas) {
            if (l > theta) {
                ++active;
            } else {
                inactive_sum += l;
            }
        }
        if (active > 0) {
            const double snapped = (distortion - inactive_sum) / active;
            const double rel = 1e-9 * std::max(lambda_max, 1e-300);
            bool consistent = true;
            for (double l : lambdas) {
                if (l > theta && l < snapped - rel) consistent = false;
                if (l <= theta && l > snapped + rel) consistent = false;
            }
            if (consistent && snapped > 0.0) theta = snapped;
        } else {
            theta = lambda_max;  // full-distortion case D = total
        }
    }

    WaterfillResult result;
    result.theta = theta;
    result.lambda = lambdas;
    result.mode_distortion.resize(lambdas.size());
    result.mode_rate_bits.resize(lambdas.size());
    for (std::size_t i = 0; i < lambdas.size(); ++i) {
        const double l = lambdas[i];
        result.mode_distortion[i] = std::min(l, theta);
        result.mode_rate_bits[i] = l > theta ? 0.5 * std::log2(l / theta) : 0.0;
        result.total_distortion += result.mode_distortion[i];
        result.total_rate_bits += result.mode_rate_bits[i];
    }
    return result;
}

WaterfillResult reverse_waterfill(const GaussianSource& source, double distortion) {
    std::vector<double> lambdas(source.eigenvalues().data(),
                                source.eigenvalues().data() + source.dim());
    return waterfill_spectrum(lambdas, distortion);
}

JointGaussian::JointGaussian(Eigen::MatrixXd cov, int nx_, int ny_)
    : covariance(std::move(cov)), nx(nx_), ny(ny_) {
    if (nx < 1 || ny < 1 || covariance.rows() != nx + ny) {
        throw ValidationError("JointGaussian: block dimensions inconsistent with the covariance");
    }
    check_square_symmetric(covariance, "JointGaussian");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(
        0.5 * (covariance + covariance.transpose()));
    const double scale = std::max(1.0, solver.eigenvalues().cwiseAbs().maxCoeff());
    if (solver.eigenvalues().minCoeff() < -1e-9 * scale) {
        throw ValidationError("JointGaussian: covariance is not positive semidefinite");
    }
}

ConditionalCovariance conditional_covariance(const JointGaussian& joint) {
    const int nx = joint.nx;
    const int ny = joint.ny;
    const Eigen::MatrixXd sigma_x = joint.covariance.topLeftCorner(nx, nx);
    const Eigen::MatrixXd sigma_xy = joint.covariance.topRightCorner(nx, ny);
    const Eigen::MatrixXd sigma_y = joint.covariance.bottomRightCorner(ny, ny);

    // Pseudo-inverse of the Y block via its eigendecomposition.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ysolver(0.5 * (sigma_y + sigma_y.transpose()));
    if (ysolver.info() != Eigen::Success) {
        throw ValidationError("conditional_covariance: Y-block eigendecomposition failed");
    }
    const Eigen::VectorXd yvals = ysolver.eigenvalues();
    const double cutoff = 1e-12 * std::max(yvals.cwiseAbs().maxCoeff(), 1.0);
    Eigen::VectorXd inv = Eigen::VectorXd::Zero(ny);
    int rank = 0;
    for (int i = 0; i < ny; ++i) {
        if (yvals[i] > cutoff) {
            inv[i] = 1.0 / yvals[i];
            ++rank;
        }
    }
    const Eigen::MatrixXd pinv =
        ysolver.eigenvectors() * inv.asDiagonal() * ysolver.eigenvectors().transpose();

    Eigen::MatrixXd schur = sigma_x - sigma_xy * pinv * sigma_xy.transpose();
    schur = 0.5 * (schur + schur.transpose());

    // Rounding in the product can leave eigenvalues slightly negative at the
    // joint's scale; clamp against that scale, not the (possibly tiny) result.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ssolver(schur);
    const double jscale = std::max(1.0, joint.covariance.cwiseAbs().maxCoeff());
    if (ssolver.eigenvalues().minCoeff() < -1e-9 * jscale) {
        throw ValidationError("conditional_covariance: conditional covariance not PSD");
    }
    const Eigen::VectorXd clamped = ssolver.eigenvalues().cwiseMax(0.0);
    schur = ssolver.eigenvectors() * clamped.asDiagonal() * ssolver.eigenvectors().transpose();
    schur = 0.5 * (schur + schur.transpose());

    ConditionalCovariance out{GaussianSource(std::move(schur)), rank, rank < ny};
    return out;
}

WaterfillResult wyner_ziv_rate(const GaussianSource& conditional, double distortion) {
    return reverse_waterfill(conditional, distortion);
}

double snr_of(double sigma2, double distortion) {
    if (!(distortion > 0.0)) throw DomainError("snr_of: distortion must be > 0");
    if (sigma2 < 0.0) throw DomainError("snr_of: variance must be >= 0");
    return sigma2 / distortion;
}

double snr_db(double snr) {
    if (!(snr > 0.0)) throw DomainError("snr_db: ratio must be > 0");
    return 10.0 * std::log10(snr);
}

double rate_from_snr(double snr) {
    if (snr < 0.0) throw DomainError("rate_from_snr: ratio must be >= 0");
    if (snr <= 1.0) return 0.0;
    return 0.5 * std::log2(snr);
}

}  // namespace ratedist
