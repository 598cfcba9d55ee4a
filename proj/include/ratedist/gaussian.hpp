#pragma once

// Closed-form Gaussian rate-distortion: scalar rate, reverse water-filling
// over covariance eigenmodes, conditional covariance for decoder-side
// information, and SNR/quality conversions. Rates in bits.

#include <vector>

#include <Eigen/Dense>

#include "ratedist/errors.hpp"

namespace ratedist {

// Covariance with its eigendecomposition, computed once at construction.
// Eigenvalues are sorted descending and clamped at zero; values below
// 1e-12 * trace are treated as exactly zero modes.
class GaussianSource {
public:
    explicit GaussianSource(Eigen::MatrixXd covariance);

    static GaussianSource from_eigenvalues(const std::vector<double>& lambdas);

    int dim() const { return static_cast<int>(covariance_.rows()); }
    const Eigen::MatrixXd& covariance() const { return covariance_; }
    const Eigen::VectorXd& eigenvalues() const { return eigenvalues_; }    // descending
    const Eigen::MatrixXd& eigenvectors() const { return eigenvectors_; }  // columns
    double trace() const { return eigenvalues_.sum(); }

private:
    Eigen::MatrixXd covariance_;
    Eigen::VectorXd eigenvalues_;
    Eigen::MatrixXd eigenvectors_;
};

struct WaterfillResult {
    double theta = 0.0;  // common distortion level of active modes
    std::vector<double> lambda;
    std::vector<double> mode_distortion;  // min(lambda_i, theta)
    std::vector<double> mode_rate_bits;   // max(0, 0.5 log2(lambda_i / theta))
    double total_rate_bits = 0.0;
    double total_distortion = 0.0;
};

// Scalar R(D) = max(0, 0.5 log2(sigma2 / D)).
double gaussian_rate(double sigma2, double distortion);

// Spread a total distortion budget across eigenmodes at a common level
// theta with sum min(lambda_i, theta) = D. Requires 0 < D <= trace.
WaterfillResult reverse_waterfill(const GaussianSource& source, double distortion);

// Same allocation over a plain spectrum (descending order not required).
WaterfillResult waterfill_spectrum(const std::vector<double>& lambdas, double distortion);

// Covariance of the stacked vector (X, Y).
struct JointGaussian {
    Eigen::MatrixXd covariance;
    int nx = 0;
    int ny = 0;

    JointGaussian(Eigen::MatrixXd cov, int nx, int ny);  // validates symmetric PSD blocks
};

struct ConditionalCovariance {
    GaussianSource source;  // Sigma_{X|Y}
    int y_rank = 0;
    bool rank_deficient = false;
};

// Sigma_{X|Y} = Sigma_X - Sigma_XY pinv(Sigma_Y) Sigma_YX, symmetrized and
// clamped PSD. Uses the pseudo-inverse when the Y block is rank deficient.
ConditionalCovariance conditional_covariance(const JointGaussian& joint);

// Rate with side information at the decoder: water-filling over the
// conditional covariance spectrum.
WaterfillResult wyner_ziv_rate(const GaussianSource& conditional, double distortion);

double snr_of(double sigma2, double distortion);  // sigma2 / D
double snr_db(double snr);                        // 10 log10(snr)
double rate_from_snr(double snr);                 // max(0, 0.5 log2(snr))

}  // namespace ratedist
