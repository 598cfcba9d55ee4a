#pragma once

// Lattice quantizers: nearest-point search for Z^n, D4 and E8 (with scalar
// scaling), uniform Voronoi-cell dither, subtractive dithered quantization,
// and a one-bit Lloyd quantizer design.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "ratedist/errors.hpp"
#include "ratedist/rng.hpp"

namespace ratedist {

enum class LatticeKind { Zn, D4, E8 };

class Lattice {
public:
    static Lattice zn(int dim, double scale = 1.0);
    static Lattice d4(double scale = 1.0);
    static Lattice e8(double scale = 1.0);
    // Names: "Z1".."Z64", "D4", "E8".
    static Lattice from_name(const std::string& name, double scale = 1.0);

    LatticeKind kind() const { return kind_; }
    int dim() const { return dim_; }
    double scale() const { return scale_; }
    std::string name() const;

    // Same kind with scale multiplied by `factor`.
    Lattice scaled(double factor) const { return Lattice(kind_, dim_, scale_ * factor); }

    // Nearest lattice point. Ties are resolved deterministically:
    // round-half-to-even per coordinate for Z^n; for D4/E8 the candidate
    // with the lexicographically smaller coordinates wins on exact ties.
    std::vector<double> nearest_point(const std::vector<double>& x) const;

    // x - nearest_point(x); lies in the Voronoi cell of the origin.
    std::vector<double> quantization_error(const std::vector<double>& x) const;

    // Generator rows (scaled); the lattice is the set of integer
    // combinations of these rows.
    std::vector<std::vector<double>> generator() const;

    double cell_volume() const;  // |det generator|

    // Dimensionless normalized second moment G of the Voronoi cell.
    double normalized_second_moment() const;
    // Per-dimension second moment of a uniform dither: G * V^(2/n).
    double cell_second_moment_per_dim() const;

    bool operator==(const Lattice& other) const {
        return kind_ == other.kind_ && dim_ == other.dim_ && scale_ == other.scale_;
    }

private:
    Lattice(LatticeKind kind, int dim, double scale);

    LatticeKind kind_;
    int dim_;
    double scale_;
};

// Subtractive dithered quantizer: U = Q(x + dither), reconstruction U - dither.
// Dither draws are a pure function of (seed, sample index).
class DitheredQuantizer {
public:
    DitheredQuantizer(Lattice lattice, std::uint64_t seed);

    const Lattice& lattice() const { return lattice_; }
    std::uint64_t seed() const { return seed_; }

    // Uniform over the Voronoi cell: a uniform draw over the fundamental
    // parallelepiped folded back into the cell (lattice translates of the
    // parallelepiped tile space, so folding preserves uniformity).
    std::vector<double> sample_dither(std::uint64_t index) const;

    std::vector<double> encode(const std::vector<double>& x,
                               const std::vector<double>& dither) const;
    std::vector<double> decode(const std::vector<double>& point,
                               const std::vector<double>& dither) const;

private:
    Lattice lattice_;
    std::uint64_t seed_;
    CounterRng rng_;
    std::vector<std::vector<double>> generator_;
};

struct OneBitQuantizer {
    double threshold = 0.0;
    double y0 = 0.0;  // reconstruction below the threshold
    double y1 = 0.0;  // reconstruction above
    double distortion = 0.0;
    int iterations = 0;
};

// Density with bounded support for the analytic Lloyd mode; moments are
// evaluated by adaptive quadrature to 1e-10 relative tolerance.
struct AnalyticPdf {
    std::function<double(double)> density;
    double lo = 0.0;
    double hi = 0.0;

    static AnalyticPdf gaussian(double mean, double sigma);
    static AnalyticPdf uniform(double lo, double hi);
};

// Two-level Lloyd design: alternate centroid and midpoint-threshold updates
// until the expected distortion changes by less than tol.
OneBitQuantizer lloyd_one_bit(const std::vector<double>& samples, double tol = 1e-10,
                              int max_iter = 1000);
OneBitQuantizer lloyd_one_bit(const AnalyticPdf& pdf, double tol = 1e-12, int max_iter = 200);

}  // namespace ratedist
