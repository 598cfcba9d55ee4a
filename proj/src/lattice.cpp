#include "ratedist/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <utility>

namespace ratedist {

namespace {

// Round half to even, independent of the FP environment.
double round_half_even(double x) {
    const double f = std::floor(x);
    const double diff = x - f;
    if (diff > 0.5) return f + 1.0;
    if (diff < 0.5) return f;
    return std::fmod(f, 2.0) == 0.0 ? f : f + 1.0;
}

// Second-nearest integer; exact-integer inputs prefer the smaller side.
double second_nearest(double t, double nearest) {
    if (t > nearest) return nearest + 1.0;
    if (t < nearest) return nearest - 1.0;
    return nearest - 1.0;
}

std::vector<double> round_each(const std::vector<double>& y) {
    std::vector<double> f(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) f[i] = round_half_even(y[i]);
    return f;
}

long long coord_sum(const std::vector<double>& v) {
    long long s = 0;
    for (double c : v) s += std::llround(c);
    return s;
}

// Checkerboard lattice D_n: integer vectors with even coordinate sum. If the
// plain round has odd parity, the cheapest fix changes one coordinate to its
// second-nearest integer; ties prefer the lexicographically smaller point.
std::vector<double> decode_dn(const std::vector<double>& y) {
    std::vector<double> f = round_each(y);
    if (coord_sum(f) % 2 == 0) return f;

    std::vector<double> best;
    double best_added = 0.0;
    for (std::size_t k = 0; k < y.size(); ++k) {
        std::vector<double> cand = f;
        cand[k] = second_nearest(y[k], f[k]);
        const double ek = y[k] - f[k];
        const double ck = y[k] - cand[k];
        const double added = ck * ck - ek * ek;
        if (best.empty() || added < best_added ||
            (added == best_added &&
             std::lexicographical_compare(cand.begin(), cand.end(), best.begin(), best.end()))) {
            best = std::move(cand);
            best_added = added;
        }
    }
    return best;
}

double dist2(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

// E8 as the union of D8 and D8 + (1/2, ..., 1/2).
std::vector<double> decode_e8(const std::vector<double>& y) {
    const std::vector<double> c1 = decode_dn(y);
    std::vector<double> shifted(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) shifted[i] = y[i] - 0.5;
    std::vector<double> c2 = decode_dn(shifted);
    for (double& c : c2) c += 0.5;

    const double d1 = dist2(y, c1);
    const double d2 = dist2(y, c2);
    if (d1 < d2) return c1;
    if (d2 < d1) return c2;
    return std::lexicographical_compare(c1.begin(), c1.end(), c2.begin(), c2.end()) ? c1 : c2;
}

// Normalized second moments of the Voronoi cells (Conway & Sloane).
constexpr double kSecondMomentZn = 1.0 / 12.0;
constexpr double kSecondMomentD4 = 0.076603;
constexpr double kSecondMomentE8 = 0.071682;

}  // namespace

Lattice::Lattice(LatticeKind kind, int dim, double scale) : kind_(kind), dim_(dim), scale_(scale) {
    if (dim_ < 1) throw ValidationError("Lattice: dimension must be >= 1");
    if (!(scale_ > 0.0) || !std::isfinite(scale_)) {
        throw ValidationError("Lattice: scale must be finite and > 0");
    }
}

Lattice Lattice::zn(int dim, double scale) { return Lattice(LatticeKind::Zn, dim, scale); }

Lattice Lattice::d4(double scale) { return Lattice(LatticeKind::D4, 4, scale); }

Lattice Lattice::e8(double scale) { return Lattice(LatticeKind::E8, 8, scale); }

Lattice Lattice::from_name(const std::string& name, double scale) {
    if (name == "D4") return d4(scale);
    if (name == "E8") return e8(scale);
    if (name.size() >= 2 && name[0] == 'Z') {
        int n = 0;
        for (std::size_t i = 1; i < name.size(); ++i) {
            if (name[i] < '0' || name[i] > '9') n = -1;
            if (n < 0) break;
            n = n * 10 + (name[i] - '0');
        }
        if (n >= 1 && n <= 64) return zn(n, scale);
    }
    throw ValidationError("Lattice: unknown lattice name '" + name + "' (expected Z<n>, D4 or E8)");
}

std::string Lattice::name() const {
    switch (kind_) {
        case LatticeKind::D4: return "D4";
        case LatticeKind::E8: return "E8";
        case LatticeKind::Zn: return "Z" + std::to_string(dim_);
    }
    return "?";
}

std::vector<double> Lattice::nearest_point(const std::vector<double>& x) const {
    if (static_cast<int>(x.size()) != dim_) {
        throw ValidationError("Lattice: point dimension " + std::to_string(x.size()) +
                              " does not match lattice dimension " + std::to_string(dim_));
    }
    std::vector<double> y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] / scale_;

    std::vector<double> p;
    switch (kind_) {
        case LatticeKind::Zn: p = round_each(y); break;
        case LatticeKind::D4: p = decode_dn(y); break;
        case LatticeKind::E8: p = decode_e8(y); break;
    }
    for (double& c : p) c *= scale_;
    return p;
}

std::vector<double> Lattice::quantization_error(const std::vector<double>& x) const {
    const std::vector<double> p = nearest_point(x);
    std::vector<double> e(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) e[i] = x[i] - p[i];
    return e;
}

std::vector<std::vector<double>> Lattice::generator() const {
    std::vector<std::vector<double>> rows;
    switch (kind_) {
        case LatticeKind::Zn: {
            rows.assign(dim_, std::vector<double>(dim_, 0.0));
            for (int i = 0; i < dim_; ++i) rows[i][i] = 1.0;
            break;
        }
        case LatticeKind::D4: {
            rows = {{-1, -1, 0, 0}, {1, -1, 0, 0}, {0, 1, -1, 0}, {0, 0, 1, -1}};
            break;
        }
        case LatticeKind::E8: {
            rows = {{2, 0, 0, 0, 0, 0, 0, 0},
                    {-1, 1, 0, 0, 0, 0, 0, 0},
                    {0, -1, 1, 0, 0, 0, 0, 0},
                    {0, 0, -1, 1, 0, 0, 0, 0},
                    {0, 0, 0, -1, 1, 0, 0, 0},
                    {0, 0, 0, 0, -1, 1, 0, 0},
                    {0, 0, 0, 0, 0, -1, 1, 0},
                    {0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5}};
            break;
        }
    }
    for (auto& row : rows) {
        for (double& v : row) v *= scale_;
    }
    return rows;
}

double Lattice::cell_volume() const {
    double unit = 1.0;
    if (kind_ == LatticeKind::D4) unit = 2.0;
    return unit * std::pow(scale_, dim_);
}

double Lattice::normalized_second_moment() const {
    switch (kind_) {
        case LatticeKind::D4: return kSecondMomentD4;
        case LatticeKind::E8: return kSecondMomentE8;
        case LatticeKind::Zn: return kSecondMomentZn;
    }
    return kSecondMomentZn;
}

double Lattice::cell_second_moment_per_dim() const {
    return normalized_second_moment() * std::pow(cell_volume(), 2.0 / dim_);
}

DitheredQuantizer::DitheredQuantizer(Lattice lattice, std::uint64_t seed)
    : lattice_(std::move(lattice)), seed_(seed), rng_(seed), generator_(lattice_.generator()) {}

std::vector<double> DitheredQuantizer::sample_dither(std::uint64_t index) const {
    const int n = lattice_.dim();
    std::vector<double> u(n, 0.0);
    for (int i = 0; i < n; ++i) {
        const double v = rng_.uniform01(index, static_cast<std::uint32_t>(i));
        for (int d = 0; d < n; ++d) u[d] += v * generator_[i][d];
    }
    return lattice_.quantization_error(u);
}

std::vector<double> DitheredQuantizer::encode(const std::vector<double>& x,
                                              const std::vector<double>& dither) const {
    if (x.size() != dither.size() || static_cast<int>(x.size()) != lattice_.dim()) {
        throw ValidationError("DitheredQuantizer: dimension mismatch");
    }
    std::vector<double> shifted(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) shifted[i] = x[i] + dither[i];
    return lattice_.nearest_point(shifted);
}

std::vector<double> DitheredQuantizer::decode(const std::vector<double>& point,
                                              const std::vector<double>& dither) const {
    if (point.size() != dither.size() || static_cast<int>(point.size()) != lattice_.dim()) {
        throw ValidationError("DitheredQuantizer: dimension mismatch");
    }
    std::vector<double> out(point.size());
    for (std::size_t i = 0; i < point.size(); ++i) out[i] = point[i] - dither[i];
    return out;
}

// ---------------------------------------------------------------------------
// One-bit Lloyd design
// ---------------------------------------------------------------------------

OneBitQuantizer lloyd_one_bit(const std::vector<double>& samples, double tol, int max_iter) {
    if (samples.size() < 2) throw DomainError("lloyd_one_bit: need at least 2 samples");
    std::vector<double> sorted = samples;
    std::sort(sorted.begin(), sorted.end());
    if (sorted.front() == sorted.back()) {
        throw DomainError("lloyd_one_bit: all samples identical (degenerate input)");
    }

    const std::size_t n = sorted.size();
    const auto mean_range = [&](std::size_t a, std::size_t b) {
        double s = 0.0;
        for (std::size_t i = a; i < b; ++i) s += sorted[i];
        return s / static_cast<double>(b - a);
    };

    double y0 = mean_range(0, n / 2);
    double y1 = mean_range(n / 2, n);
    double threshold = 0.5 * (y0 + y1);
    double distortion_prev = -1.0;

    OneBitQuantizer q;
    for (int iter = 1; iter <= max_iter; ++iter) {
        threshold = 0.5 * (y0 + y1);
        const std::size_t split = static_cast<std::size_t>(
            std::lower_bound(sorted.begin(), sorted.end(), threshold) - sorted.begin());
        if (split == 0 || split == n) {
            throw DegeneracyError("lloyd_one_bit: a quantizer region became empty");
        }
        y0 = mean_range(0, split);
        y1 = mean_range(split, n);
        double distortion = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double y = i < split ? y0 : y1;
            distortion += (sorted[i] - y) * (sorted[i] - y);
        }
        distortion /= static_cast<double>(n);
        q.iterations = iter;
        q.distortion = distortion;
        if (distortion_prev >= 0.0 && std::abs(distortion_prev - distortion) < tol) break;
        distortion_prev = distortion;
    }
    q.y0 = y0;
    q.y1 = y1;
    q.threshold = 0.5 * (y0 + y1);
    return q;
}

namespace {

double adaptive_simpson_rec(const std::function<double(double)>& f, double a, double fa, double b,
                            double fb, double m, double fm, double whole, double eps, int depth) {
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * eps) {
        return left + right + delta / 15.0;
    }
    return adaptive_simpson_rec(f, a, fa, m, fm, lm, flm, left, 0.5 * eps, depth - 1) +
           adaptive_simpson_rec(f, m, fm, b, fb, rm, frm, right, 0.5 * eps, depth - 1);
}

double integrate(const std::function<double(double)>& f, double a, double b) {
    if (!(b > a)) return 0.0;
    const double fa = f(a);
    const double fb = f(b);
    const double m = 0.5 * (a + b);
    const double fm = f(m);
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    const double eps = 1e-10 * std::max(std::abs(whole), 1e-4);
    return adaptive_simpson_rec(f, a, fa, b, fb, m, fm, whole, eps, 48);
}

struct Moments {
    double m0 = 0.0;
    double m1 = 0.0;
    double m2 = 0.0;
};

Moments pdf_moments(const AnalyticPdf& pdf, double a, double b) {
    Moments m;
    m.m0 = integrate(pdf.density, a, b);
    m.m1 = integrate([&](double x) { return x * pdf.density(x); }, a, b);
    m.m2 = integrate([&](double x) { return x * x * pdf.density(x); }, a, b);
    return m;
}

}  // namespace

AnalyticPdf AnalyticPdf::gaussian(double mean, double sigma) {
    if (!(sigma > 0.0)) throw DomainError("AnalyticPdf: sigma must be > 0");
    const double norm = 1.0 / (sigma * std::sqrt(2.0 * std::numbers::pi));
    AnalyticPdf pdf;
    pdf.density = [mean, sigma, norm](double x) {
        const double z = (x - mean) / sigma;
        return norm * std::exp(-0.5 * z * z);
    };
    pdf.lo = mean - 12.0 * sigma;
    pdf.hi = mean + 12.0 * sigma;
    return pdf;
}

AnalyticPdf AnalyticPdf::uniform(double lo, double hi) {
    if (!(hi > lo)) throw DomainError("AnalyticPdf: need lo < hi");
    const double h = 1.0 / (hi - lo);
    AnalyticPdf pdf;
    pdf.density = [h](double) { return h; };
    pdf.lo = lo;
    pdf.hi = hi;
    return pdf;
}

OneBitQuantizer lloyd_one_bit(const AnalyticPdf& pdf, double tol, int max_iter) {
    if (!pdf.density || !(pdf.hi > pdf.lo)) {
        throw ValidationError("lloyd_one_bit: pdf must have a density and lo < hi");
    }
    const double total = integrate(pdf.density, pdf.lo, pdf.hi);
    if (!(total > 0.0)) throw DomainError("lloyd_one_bit: pdf integrates to zero");

    const Moments all = pdf_moments(pdf, pdf.lo, pdf.hi);
    double threshold = all.m1 / all.m0;
    double y0 = 0.0, y1 = 0.0;
    double distortion_prev = -1.0;

    OneBitQuantizer q;
    for (int iter = 1; iter <= max_iter; ++iter) {
        const Moments lower = pdf_moments(pdf, pdf.lo, threshold);
        const Moments upper = pdf_moments(pdf, threshold, pdf.hi);
        if (!(lower.m0 > 0.0) || !(upper.m0 > 0.0)) {
            throw DegeneracyError("lloyd_one_bit: a quantizer region has zero probability");
        }
        y0 = lower.m1 / lower.m0;
        y1 = upper.m1 / upper.m0;
        const double distortion = (lower.m2 - 2.0 * y0 * lower.m1 + y0 * y0 * lower.m0 +
                                   upper.m2 - 2.0 * y1 * upper.m1 + y1 * y1 * upper.m0) /
                                  total;
        q.iterations = iter;
        q.distortion = distortion;
        threshold = 0.5 * (y0 + y1);
        if (distortion_prev >= 0.0 && std::abs(distortion_prev - distortion) < tol) break;
        distortion_prev = distortion;
    }
    q.y0 = y0;
    q.y1 = y1;
    q.threshold = threshold;
    return q;
}

}  // namespace ratedist
