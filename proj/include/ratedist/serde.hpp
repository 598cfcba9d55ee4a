#pragma once

// JSON and CSV formats for the toolkit types. Config parsers reject unknown
// keys instead of ignoring them; structural problems raise ParseError while
// semantic ones surface as the owning type's validation errors.

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "ratedist/game.hpp"
#include "ratedist/gaussian.hpp"
#include "ratedist/prob.hpp"
#include "ratedist/rd_solver.hpp"
#include "ratedist/wz.hpp"

namespace ratedist {

// Structural input problems (unknown/missing keys, wrong value types).
class ParseError : public Error {
public:
    using Error::Error;
};

namespace serde {

using json = nlohmann::json;

// {"alphabet": [...], "mass": [...]}
json distribution_to_json(const Distribution& d);
Distribution distribution_from_json(const json& j);

// {"rows": [...], "cols": [...], "mass": [[...]]}
json joint_to_json(const JointDistribution& j);
JointDistribution joint_from_json(const json& j);

// {"source": [...], "repro": [...], "d": [[...]]}
json distortion_to_json(const DistortionMatrix& d);
DistortionMatrix distortion_from_json(const json& j);

// {"tol": ..., "max_iter": ..., "betas": [...], "warm_start": bool?}
struct SolverConfig {
    SolveOptions options;
    std::vector<double> betas;
};
SolverConfig solver_config_from_json(const json& j);

void write_curve_csv(const RDCurve& curve, std::ostream& out);
json curve_to_json(const RDCurve& curve);

// Square numeric matrix, one comma-separated row per line.
Eigen::MatrixXd covariance_from_csv(std::istream& in);
// {"cov": [[...]]}
Eigen::MatrixXd covariance_from_json(const json& j);

// {"cov": [[...]], "nx": ..., "ny": ...}
JointGaussian joint_gaussian_from_json(const json& j);

// {"theta", "modes": [{"lambda", "D_i", "R_i"}], "total_rate_bits", "total_distortion"}
json waterfill_to_json(const WaterfillResult& r);

json wz_config_to_json(const WZConfig& cfg);
WZConfig wz_config_from_json(const json& j);
json pipeline_report_to_json(const PipelineReport& r);

// {"lattice": "Z1"|..., "scale": ..., "seed": ...}
DitheredQuantizer quantizer_from_json(const json& j);

// One vector per row, components comma-separated.
std::vector<std::vector<double>> samples_from_csv(std::istream& in);
void samples_to_csv(const std::vector<std::vector<double>>& samples, std::ostream& out);

// {"lambdas": [...], "budget": {"type": "rate"|"distortion", "value": ...},
//  "quality": "gaussian" | {"type": "table", "rates": [...], "marginals": [[...]]}}
AllocationGame game_from_json(const json& j);
json allocation_to_json(const Allocation& a);
json kkt_to_json(const KktReport& r);

// File helpers; read errors raise ParseError with the path in the message.
json load_json_file(const std::string& path);
std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& contents);

std::string format_double(double v);  // round-trip "%.17g"

}  // namespace serde
}  // namespace ratedist
