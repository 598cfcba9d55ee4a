#include "ratedist/serde.hpp"

#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>

namespace ratedist::serde {

namespace {

void expect_keys(const json& j, const char* what, std::initializer_list<const char*> allowed) {
    if (!j.is_object()) {
        throw ParseError(std::string(what) + ": expected a JSON object");
    }
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& item : j.items()) {
        if (ok.find(item.key()) == ok.end()) {
            throw ParseError(std::string(what) + ": unknown key '" + item.key() + "'");
        }
    }
}

const json& require(const json& j, const char* what, const char* key) {
    const auto it = j.find(key);
    if (it == j.end()) {
        throw ParseError(std::string(what) + ": missing key '" + key + "'");
    }
    return *it;
}

std::vector<double> number_list(const json& j, const char* what) {
    if (!j.is_array()) throw ParseError(std::string(what) + ": expected an array of numbers");
    std::vector<double> out;
    out.reserve(j.size());
    for (const auto& v : j) {
        if (!v.is_number()) throw ParseError(std::string(what) + ": expected numbers");
        out.push_back(v.get<double>());
    }
    return out;
}

std::vector<std::string> string_list(const json& j, const char* what) {
    if (!j.is_array()) throw ParseError(std::string(what) + ": expected an array of strings");
    std::vector<std::string> out;
    out.reserve(j.size());
    for (const auto& v : j) {
        if (!v.is_string()) throw ParseError(std::string(what) + ": expected strings");
        out.push_back(v.get<std::string>());
    }
    return out;
}

// Rectangular matrix as a flat row-major vector.
std::vector<double> matrix_rows(const json& j, const char* what, std::size_t& n_rows,
                                std::size_t& n_cols) {
    if (!j.is_array() || j.empty()) {
        throw ParseError(std::string(what) + ": expected a non-empty array of rows");
    }
    n_rows = j.size();
    n_cols = 0;
    std::vector<double> out;
    for (std::size_t r = 0; r < n_rows; ++r) {
        const auto row = number_list(j[r], what);
        if (r == 0) {
            n_cols = row.size();
            out.reserve(n_rows * n_cols);
        } else if (row.size() != n_cols) {
            throw ParseError(std::string(what) + ": ragged rows");
        }
        out.insert(out.end(), row.begin(), row.end());
    }
    if (n_cols == 0) throw ParseError(std::string(what) + ": empty rows");
    return out;
}

double number(const json& j, const char* what, const char* key) {
    const json& v = require(j, what, key);
    if (!v.is_number()) throw ParseError(std::string(what) + ": '" + key + "' must be a number");
    return v.get<double>();
}

}  // namespace

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

json distribution_to_json(const Distribution& d) {
    return json{{"alphabet", d.alphabet()}, {"mass", d.mass()}};
}

Distribution distribution_from_json(const json& j) {
    expect_keys(j, "distribution", {"alphabet", "mass"});
    return Distribution(string_list(require(j, "distribution", "alphabet"), "distribution.alphabet"),
                        number_list(require(j, "distribution", "mass"), "distribution.mass"));
}

json joint_to_json(const JointDistribution& jd) {
    json mass = json::array();
    for (std::size_t r = 0; r < jd.rows(); ++r) {
        json row = json::array();
        for (std::size_t c = 0; c < jd.cols(); ++c) row.push_back(jd.p(r, c));
        mass.push_back(std::move(row));
    }
    return json{{"rows", jd.row_labels()}, {"cols", jd.col_labels()}, {"mass", std::move(mass)}};
}

JointDistribution joint_from_json(const json& j) {
    expect_keys(j, "joint", {"rows", "cols", "mass"});
    std::size_t nr = 0, nc = 0;
    auto mass = matrix_rows(require(j, "joint", "mass"), "joint.mass", nr, nc);
    auto rows = string_list(require(j, "joint", "rows"), "joint.rows");
    auto cols = string_list(require(j, "joint", "cols"), "joint.cols");
    if (rows.size() != nr || cols.size() != nc) {
        throw ParseError("joint: mass shape does not match the label lists");
    }
    return JointDistribution(std::move(rows), std::move(cols), std::move(mass));
}

json distortion_to_json(const DistortionMatrix& d) {
    json rows = json::array();
    for (std::size_t x = 0; x < d.n_source(); ++x) {
        json row = json::array();
        for (std::size_t r = 0; r < d.n_repro(); ++r) row.push_back(d.at(x, r));
        rows.push_back(std::move(row));
    }
    return json{{"source", d.source_alphabet}, {"repro", d.repro_alphabet}, {"d", std::move(rows)}};
}

DistortionMatrix distortion_from_json(const json& j) {
    expect_keys(j, "distortion", {"source", "repro", "d"});
    std::size_t nr = 0, nc = 0;
    auto values = matrix_rows(require(j, "distortion", "d"), "distortion.d", nr, nc);
    auto source = string_list(require(j, "distortion", "source"), "distortion.source");
    auto repro = string_list(require(j, "distortion", "repro"), "distortion.repro");
    if (source.size() != nr || repro.size() != nc) {
        throw ParseError("distortion: d shape does not match the alphabets");
    }
    return DistortionMatrix(std::move(source), std::move(repro), std::move(values));
}

SolverConfig solver_config_from_json(const json& j) {
    expect_keys(j, "solver config", {"tol", "max_iter", "betas", "warm_start"});
    SolverConfig cfg;
    cfg.options.tol = number(j, "solver config", "tol");
    const json& mi = require(j, "solver config", "max_iter");
    if (!mi.is_number_integer()) throw ParseError("solver config: 'max_iter' must be an integer");
    cfg.options.max_iter = mi.get<int>();
    cfg.betas = number_list(require(j, "solver config", "betas"), "solver config.betas");
    if (j.contains("warm_start")) {
        if (!j["warm_start"].is_boolean()) {
            throw ParseError("solver config: 'warm_start' must be a boolean");
        }
        cfg.options.warm_start = j["warm_start"].get<bool>();
    }
    return cfg;
}

void write_curve_csv(const RDCurve& curve, std::ostream& out) {
    out << "beta,rate_bits,distortion\n";
    for (const auto& p : curve.points) {
        out << format_double(p.beta) << ',' << format_double(p.rate_bits) << ','
            << format_double(p.distortion) << '\n';
    }
}

json curve_to_json(const RDCurve& curve) {
    json points = json::array();
    for (const auto& p : curve.points) {
        points.push_back(json{{"beta", p.beta},
                              {"rate_bits", p.rate_bits},
                              {"distortion", p.distortion},
                              {"iterations", p.iterations}});
    }
    return json{{"points", std::move(points)}};
}

Eigen::MatrixXd covariance_from_csv(std::istream& in) {
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            try {
                std::size_t pos = 0;
                row.push_back(std::stod(cell, &pos));
            } catch (const std::exception&) {
                throw ParseError("covariance csv: bad number '" + cell + "'");
            }
        }
        if (!row.empty()) rows.push_back(std::move(row));
    }
    if (rows.empty()) throw ParseError("covariance csv: empty input");
    const std::size_t n = rows.size();
    Eigen::MatrixXd m(n, n);
    for (std::size_t r = 0; r < n; ++r) {
        if (rows[r].size() != n) throw ParseError("covariance csv: matrix must be square");
        for (std::size_t c = 0; c < n; ++c) m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    }
    return m;
}

Eigen::MatrixXd covariance_from_json(const json& j) {
    expect_keys(j, "covariance", {"cov"});
    std::size_t nr = 0, nc = 0;
    const auto values = matrix_rows(require(j, "covariance", "cov"), "covariance.cov", nr, nc);
    if (nr != nc) throw ParseError("covariance: matrix must be square");
    Eigen::MatrixXd m(nr, nc);
    for (std::size_t r = 0; r < nr; ++r) {
        for (std::size_t c = 0; c < nc; ++c) {
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = values[r * nc + c];
        }
    }
    return m;
}

JointGaussian joint_gaussian_from_json(const json& j) {
    expect_keys(j, "joint gaussian", {"cov", "nx", "ny"});
    std::size_t nr = 0, nc = 0;
    const auto values = matrix_rows(require(j, "joint gaussian", "cov"), "joint gaussian.cov", nr, nc);
    if (nr != nc) throw ParseError("joint gaussian: covariance must be square");
    const json& jx = require(j, "joint gaussian", "nx");
    const json& jy = require(j, "joint gaussian", "ny");
    if (!jx.is_number_integer() || !jy.is_number_integer()) {
        throw ParseError("joint gaussian: 'nx' and 'ny' must be integers");
    }
    Eigen::MatrixXd m(nr, nc);
    for (std::size_t r = 0; r < nr; ++r) {
        for (std::size_t c = 0; c < nc; ++c) {
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = values[r * nc + c];
        }
    }
    return JointGaussian(std::move(m), jx.get<int>(), jy.get<int>());
}

json waterfill_to_json(const WaterfillResult& r) {
    json modes = json::array();
    for (std::size_t i = 0; i < r.lambda.size(); ++i) {
        modes.push_back(json{{"lambda", r.lambda[i]},
                             {"D_i", r.mode_distortion[i]},
                             {"R_i", r.mode_rate_bits[i]}});
    }
    return json{{"theta", r.theta},
                {"modes", std::move(modes)},
                {"total_rate_bits", r.total_rate_bits},
                {"total_distortion", r.total_distortion}};
}

json wz_config_to_json(const WZConfig& cfg) {
    return json{{"source_variance", cfg.source_variance},
                {"noise_variance", cfg.noise_variance},
                {"lattice", cfg.lattice},
                {"lattice_scale", cfg.lattice_scale},
                {"nesting", cfg.nesting},
                {"samples", cfg.samples},
                {"seed", cfg.seed},
                {"mmse_scaling", cfg.mmse_scaling},
                {"fresh_dither", cfg.fresh_dither}};
}

WZConfig wz_config_from_json(const json& j) {
    expect_keys(j, "wz config",
                {"source_variance", "noise_variance", "lattice", "lattice_scale", "nesting",
                 "samples", "seed", "mmse_scaling", "fresh_dither"});
    WZConfig cfg;
    cfg.source_variance = number(j, "wz config", "source_variance");
    cfg.noise_variance = number(j, "wz config", "noise_variance");
    const json& lat = require(j, "wz config", "lattice");
    if (!lat.is_string()) throw ParseError("wz config: 'lattice' must be a string");
    cfg.lattice = lat.get<std::string>();
    cfg.lattice_scale = number(j, "wz config", "lattice_scale");
    const json& nest = require(j, "wz config", "nesting");
    if (!nest.is_number_integer()) throw ParseError("wz config: 'nesting' must be an integer");
    cfg.nesting = nest.get<int>();
    const json& samples = require(j, "wz config", "samples");
    if (!samples.is_number_integer()) throw ParseError("wz config: 'samples' must be an integer");
    cfg.samples = samples.get<std::uint64_t>();
    if (j.contains("seed")) {
        if (!j["seed"].is_number_integer()) throw ParseError("wz config: 'seed' must be an integer");
        cfg.seed = j["seed"].get<std::uint64_t>();
    }
    if (j.contains("mmse_scaling")) {
        if (!j["mmse_scaling"].is_boolean()) {
            throw ParseError("wz config: 'mmse_scaling' must be a boolean");
        }
        cfg.mmse_scaling = j["mmse_scaling"].get<bool>();
    }
    if (j.contains("fresh_dither")) {
        if (!j["fresh_dither"].is_boolean()) {
            throw ParseError("wz config: 'fresh_dither' must be a boolean");
        }
        cfg.fresh_dither = j["fresh_dither"].get<bool>();
    }
    return cfg;
}

DitheredQuantizer quantizer_from_json(const json& j) {
    expect_keys(j, "quantizer", {"lattice", "scale", "seed"});
    const json& lat = require(j, "quantizer", "lattice");
    if (!lat.is_string()) throw ParseError("quantizer: 'lattice' must be a string");
    const double scale = number(j, "quantizer", "scale");
    std::uint64_t seed = kDefaultSeed;
    if (j.contains("seed")) {
        if (!j["seed"].is_number_integer()) throw ParseError("quantizer: 'seed' must be an integer");
        seed = j["seed"].get<std::uint64_t>();
    }
    return DitheredQuantizer(Lattice::from_name(lat.get<std::string>(), scale), seed);
}

std::vector<std::vector<double>> samples_from_csv(std::istream& in) {
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            try {
                row.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw ParseError("samples csv: bad number '" + cell + "'");
            }
        }
        if (!row.empty()) rows.push_back(std::move(row));
    }
    return rows;
}

void samples_to_csv(const std::vector<std::vector<double>>& samples, std::ostream& out) {
    for (const auto& row : samples) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i > 0) out << ',';
            out << format_double(row[i]);
        }
        out << '\n';
    }
}

json pipeline_report_to_json(const PipelineReport& r) {
    return json{{"dimension", r.dimension},
                {"bin_count", r.bin_count},
                {"samples", r.samples},
                {"empirical_rate_bits", r.empirical_rate_bits},
                {"empirical_distortion", r.empirical_distortion},
                {"theoretical_rate_bits", r.theoretical_rate_bits},
                {"gap_bits", r.gap_bits},
                {"decode_failure_fraction", r.decode_failure_fraction}};
}

AllocationGame game_from_json(const json& j) {
    expect_keys(j, "game", {"lambdas", "budget", "quality"});
    AllocationGame game;
    game.lambdas = number_list(require(j, "game", "lambdas"), "game.lambdas");

    const json& budget = require(j, "game", "budget");
    expect_keys(budget, "game.budget", {"type", "value"});
    const json& type = require(budget, "game.budget", "type");
    if (!type.is_string()) throw ParseError("game.budget: 'type' must be a string");
    const std::string kind = type.get<std::string>();
    if (kind == "rate") {
        game.budget_kind = BudgetKind::Rate;
    } else if (kind == "distortion") {
        game.budget_kind = BudgetKind::Distortion;
    } else {
        throw ParseError("game.budget: type must be 'rate' or 'distortion'");
    }
    game.budget = number(budget, "game.budget", "value");

    if (j.contains("quality") && !j["quality"].is_null()) {
        const json& q = j["quality"];
        if (q.is_string()) {
            if (q.get<std::string>() != "gaussian") {
                throw ParseError("game.quality: unknown quality model '" + q.get<std::string>() + "'");
            }
        } else {
            expect_keys(q, "game.quality", {"type", "rates", "marginals"});
            const json& qt = require(q, "game.quality", "type");
            if (!qt.is_string() || qt.get<std::string>() != "table") {
                throw ParseError("game.quality: object form must have type 'table'");
            }
            auto rates = number_list(require(q, "game.quality", "rates"), "game.quality.rates");
            std::size_t nr = 0, nc = 0;
            auto marg = matrix_rows(require(q, "game.quality", "marginals"), "game.quality.marginals",
                                    nr, nc);
            if (nr != game.lambdas.size() || nc != rates.size() || rates.size() < 2) {
                throw ParseError("game.quality: marginals must be |players| x |rates|, >= 2 knots");
            }
            for (std::size_t i = 1; i < rates.size(); ++i) {
                if (!(rates[i] > rates[i - 1])) {
                    throw ParseError("game.quality: rates must be strictly increasing");
                }
            }
            // Piecewise-linear decreasing marginal, clamped at the ends.
            game.marginal = [rates = std::move(rates), marg = std::move(marg),
                             nc](std::size_t player, double r) {
                const double* row = marg.data() + player * nc;
                if (r <= rates.front()) return row[0];
                if (r >= rates.back()) return row[nc - 1];
                std::size_t k = 1;
                while (rates[k] < r) ++k;
                const double t = (r - rates[k - 1]) / (rates[k] - rates[k - 1]);
                return row[k - 1] + t * (row[k] - row[k - 1]);
            };
        }
    }
    return game;
}

json allocation_to_json(const Allocation& a) {
    return json{{"rate_bits", a.rate_bits},
                {"distortion", a.distortion},
                {"theta", a.theta},
                {"mu", a.mu}};
}

json kkt_to_json(const KktReport& r) {
    return json{{"stationarity", r.stationarity_residual},
                {"primal", r.primal_residual},
                {"dual", r.dual_residual},
                {"complementary", r.complementary_residual},
                {"max", r.max_residual()}};
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json load_json_file(const std::string& path) {
    const std::string text = read_file(path);
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError("bad JSON in '" + path + "': " + e.what());
    }
}

void write_file(const std::string& path, const std::string& contents) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write file '" + path + "'");
    out << contents;
}

}  // namespace ratedist::serde
