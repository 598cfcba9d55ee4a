#pragma once

// Finite probability distributions over labeled alphabets and the basic
// information measures consumed by the rest of the toolkit. All measures
// use base-2 logarithms (bits) with the 0*log(0) = 0 convention; nats are
// offered only as a display conversion.

#include <cstddef>
#include <string>
#include <vector>

#include "ratedist/errors.hpp"

namespace ratedist {

// Absolute tolerance on probability normalization.
inline constexpr double kMassTolerance = 1e-12;

inline double to_nats(double bits) { return bits * 0.6931471805599453; }

class Distribution {
public:
    // Validates: non-negative masses summing to 1 within kMassTolerance,
    // distinct labels, matching lengths.
    Distribution(std::vector<std::string> alphabet, std::vector<double> mass);

    static Distribution uniform(std::vector<std::string> alphabet);

    std::size_t size() const { return mass_.size(); }
    const std::vector<std::string>& alphabet() const { return alphabet_; }
    const std::vector<double>& mass() const { return mass_; }
    double p(std::size_t i) const { return mass_[i]; }

    // Explicit renormalization; construction never fixes masses silently.
    Distribution renormalized() const;

private:
    std::vector<std::string> alphabet_;
    std::vector<double> mass_;
};

class JointDistribution {
public:
    // mass is row-major, rows.size() x cols.size().
    JointDistribution(std::vector<std::string> rows, std::vector<std::string> cols,
                      std::vector<double> mass);

    static JointDistribution product(const Distribution& row, const Distribution& col);

    // Joint induced by a source and a conditional channel p(col | row),
    // channel row-major with rows summing to 1.
    static JointDistribution from_channel(const Distribution& source,
                                          std::vector<std::string> cols,
                                          const std::vector<double>& channel);

    std::size_t rows() const { return row_labels_.size(); }
    std::size_t cols() const { return col_labels_.size(); }
    double p(std::size_t r, std::size_t c) const { return mass_[r * cols() + c]; }
    const std::vector<double>& mass() const { return mass_; }
    const std::vector<std::string>& row_labels() const { return row_labels_; }
    const std::vector<std::string>& col_labels() const { return col_labels_; }

    Distribution row_marginal() const;
    Distribution col_marginal() const;

private:
    std::vector<std::string> row_labels_;
    std::vector<std::string> col_labels_;
    std::vector<double> mass_;
};

// H(X) = -sum p log2 p, in [0, log2 |alphabet|].
double entropy(const Distribution& d);

// KL(p||q) = sum p log2(p/q). Requires identical alphabets and q > 0
// wherever p > 0.
double kl_divergence(const Distribution& p, const Distribution& q);

// I(X;Y) = sum p(x,y) log2[p(x,y) / (p(x) p(y))].
double mutual_information(const JointDistribution& j);

}  // namespace ratedist
