#include "ratedist/prob.hpp"

#include <cmath>
#include <unordered_set>
#include <utility>

namespace ratedist {

namespace {

void check_valid_mass(const std::vector<double>& mass, const char* what) {
    double sum = 0.0;
    for (double m : mass) {
        if (!(m >= 0.0) || !std::isfinite(m)) {
            throw ValidationError(std::string(what) + ": mass entries must be finite and >= 0");
        }
        sum += m;
    }
    if (std::abs(sum - 1.0) > kMassTolerance) {
        throw ValidationError(std::string(what) + ": masses sum to " + std::to_string(sum) +
                              ", expected 1 within 1e-12");
    }
}

void check_distinct(const std::vector<std::string>& labels, const char* what) {
    std::unordered_set<std::string> seen;
    for (const auto& l : labels) {
        if (!seen.insert(l).second) {
            throw ValidationError(std::string(what) + ": duplicate label '" + l + "'");
        }
    }
}

}  // namespace

Distribution::Distribution(std::vector<std::string> alphabet, std::vector<double> mass)
    : alphabet_(std::move(alphabet)), mass_(std::move(mass)) {
    if (alphabet_.size() != mass_.size() || alphabet_.empty()) {
        throw ValidationError("Distribution: alphabet and mass sizes must match and be non-empty");
    }
    check_distinct(alphabet_, "Distribution");
    check_valid_mass(mass_, "Distribution");
}

Distribution Distribution::uniform(std::vector<std::string> alphabet) {
    const std::size_t n = alphabet.size();
    if (n == 0) throw ValidationError("Distribution: empty alphabet");
    return Distribution(std::move(alphabet), std::vector<double>(n, 1.0 / static_cast<double>(n)));
}

Distribution Distribution::renormalized() const {
    double sum = 0.0;
    for (double m : mass_) sum += m;
    if (!(sum > 0.0)) throw DegeneracyError("Distribution: cannot renormalize zero total mass");
    std::vector<double> scaled(mass_.size());
    for (std::size_t i = 0; i < mass_.size(); ++i) scaled[i] = mass_[i] / sum;
    return Distribution(alphabet_, std::move(scaled));
}

JointDistribution::JointDistribution(std::vector<std::string> rows, std::vector<std::string> cols,
                                     std::vector<double> mass)
    : row_labels_(std::move(rows)), col_labels_(std::move(cols)), mass_(std::move(mass)) {
    if (row_labels_.empty() || col_labels_.empty() ||
        mass_.size() != row_labels_.size() * col_labels_.size()) {
        throw ValidationError("JointDistribution: mass must be rows x cols and non-empty");
    }
    check_distinct(row_labels_, "JointDistribution rows");
    check_distinct(col_labels_, "JointDistribution cols");
    check_valid_mass(mass_, "JointDistribution");
}

JointDistribution JointDistribution::product(const Distribution& row, const Distribution& col) {
    std::vector<double> mass(row.size() * col.size());
    for (std::size_t r = 0; r < row.size(); ++r) {
        for (std::size_t c = 0; c < col.size(); ++c) {
            mass[r * col.size() + c] = row.p(r) * col.p(c);
        }
    }
    return JointDistribution(row.alphabet(), col.alphabet(), std::move(mass));
}

JointDistribution JointDistribution::from_channel(const Distribution& source,
                                                  std::vector<std::string> cols,
                                                  const std::vector<double>& channel) {
    const std::size_t n = source.size();
    const std::size_t m = cols.size();
    if (channel.size() != n * m) {
        throw ValidationError("JointDistribution: channel must be |source| x |cols|");
    }
    std::vector<double> mass(n * m);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < m; ++c) {
            mass[r * m + c] = source.p(r) * channel[r * m + c];
        }
    }
    return JointDistribution(source.alphabet(), std::move(cols), std::move(mass));
}

Distribution JointDistribution::row_marginal() const {
    std::vector<double> m(rows(), 0.0);
    for (std::size_t r = 0; r < rows(); ++r) {
        for (std::size_t c = 0; c < cols(); ++c) m[r] += p(r, c);
    }
    return Distribution(row_labels_, std::move(m));
}

Distribution JointDistribution::col_marginal() const {
    std::vector<double> m(cols(), 0.0);
    for (std::size_t r = 0; r < rows(); ++r) {
        for (std::size_t c = 0; c < cols(); ++c) m[c] += p(r, c);
    }
    return Distribution(col_labels_, std::move(m));
}

double entropy(const Distribution& d) {
    double h = 0.0;
    for (double p : d.mass()) {
        if (p > 0.0) h -= p * std::log2(p);
    }
    return h;
}

double kl_divergence(const Distribution& p, const Distribution& q) {
    if (p.alphabet() != q.alphabet()) {
        throw DomainError("kl_divergence: distributions must share the same alphabet");
    }
    double kl = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p.p(i) > 0.0) {
            if (q.p(i) <= 0.0) {
                throw DomainError("kl_divergence: p > 0 where q = 0 (absolute continuity violated)");
            }
            kl += p.p(i) * std::log2(p.p(i) / q.p(i));
        }
    }
    return kl;
}

double mutual_information(const JointDistribution& j) {
    const Distribution pr = j.row_marginal();
    const Distribution pc = j.col_marginal();
    double mi = 0.0;
    for (std::size_t r = 0; r < j.rows(); ++r) {
        for (std::size_t c = 0; c < j.cols(); ++c) {
            const double pj = j.p(r, c);
            if (pj > 0.0) mi += pj * std::log2(pj / (pr.p(r) * pc.p(c)));
        }
    }
    return mi;
}

}  // namespace ratedist
