// Command-line driver: every computation is a subcommand with file-based
// input and CSV/JSON output. Exit codes: 0 success, 2 usage/parse errors,
// 3 domain/infeasibility errors, 4 convergence/degeneracy errors; stderr
// carries a single-line JSON error object {code, message, context}.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ratedist/game.hpp"
#include "ratedist/gaussian.hpp"
#include "ratedist/lattice.hpp"
#include "ratedist/prob.hpp"
#include "ratedist/rd_solver.hpp"
#include "ratedist/serde.hpp"
#include "ratedist/wz.hpp"

namespace {

using ratedist::serde::json;

struct GlobalOpts {
    std::uint64_t seed = ratedist::kDefaultSeed;
    bool seed_given = false;
    std::string format;  // "csv" or "json"; empty uses the subcommand default
    std::string out;
    int threads = 1;
    std::string config;
    std::string trace;
};

void emit_output(const GlobalOpts& g, const std::string& payload) {
    if (g.out.empty()) {
        std::cout << payload;
    } else {
        ratedist::serde::write_file(g.out, payload);
    }
}

std::string pick_format(const GlobalOpts& g, const char* fallback) {
    if (g.format.empty()) return fallback;
    if (g.format != "csv" && g.format != "json") {
        throw ratedist::ParseError("unknown format '" + g.format + "' (expected csv or json)");
    }
    return g.format;
}

json load_json_checked(const std::string& path) {
    if (!std::filesystem::exists(path)) {
        throw ratedist::ParseError("file not found: '" + path + "'");
    }
    return ratedist::serde::load_json_file(path);
}

Eigen::MatrixXd load_covariance(const std::string& path) {
    if (!std::filesystem::exists(path)) {
        throw ratedist::ParseError("file not found: '" + path + "'");
    }
    if (path.size() >= 5 && path.substr(path.size() - 5) == ".json") {
        return ratedist::serde::covariance_from_json(ratedist::serde::load_json_file(path));
    }
    std::ifstream in(path);
    return ratedist::serde::covariance_from_csv(in);
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

int run_entropy(const GlobalOpts& g, const std::string& dist_path) {
    const auto d = ratedist::serde::distribution_from_json(load_json_checked(dist_path));
    const double bits = ratedist::entropy(d);
    const std::string format = pick_format(g, "json");
    if (format == "csv") {
        std::string payload = "metric,value\n";
        payload += "entropy_bits," + ratedist::serde::format_double(bits) + "\n";
        payload += "entropy_nats," + ratedist::serde::format_double(ratedist::to_nats(bits)) + "\n";
        emit_output(g, payload);
    } else {
        json out{{"entropy_bits", bits}, {"entropy_nats", ratedist::to_nats(bits)}};
        emit_output(g, out.dump(2) + "\n");
    }
    return 0;
}

int run_rd_curve(const GlobalOpts& g, const std::string& source_path,
                 const std::string& distortion_path) {
    if (g.config.empty()) {
        throw ratedist::ParseError("rd-curve requires --config with {tol, max_iter, betas}");
    }
    const auto source = ratedist::serde::distribution_from_json(load_json_checked(source_path));
    const auto dmat = ratedist::serde::distortion_from_json(load_json_checked(distortion_path));
    auto cfg = ratedist::serde::solver_config_from_json(load_json_checked(g.config));
    if (cfg.betas.empty()) {
        throw ratedist::ParseError("rd-curve: 'betas' must be non-empty");
    }
    cfg.options.threads = g.threads;

    const ratedist::RDCurve curve = ratedist::trace_curve(source, dmat, cfg.betas, cfg.options);
    const std::string format = pick_format(g, "csv");
    if (format == "csv") {
        std::ostringstream ss;
        ratedist::serde::write_curve_csv(curve, ss);
        emit_output(g, ss.str());
    } else {
        emit_output(g, ratedist::serde::curve_to_json(curve).dump(2) + "\n");
    }
    return 0;
}

int run_waterfill(const GlobalOpts& g, const std::string& cov_path, double distortion) {
    const ratedist::GaussianSource source(load_covariance(cov_path));
    const ratedist::WaterfillResult result = ratedist::reverse_waterfill(source, distortion);
    if (!g.out.empty()) {
        // Per-mode rate/distortion summary on stdout, JSON in the file.
        for (std::size_t i = 0; i < result.lambda.size(); ++i) {
            std::cout << ratedist::serde::format_double(result.mode_rate_bits[i]) << ' '
                      << ratedist::serde::format_double(result.mode_distortion[i]) << '\n';
        }
    }
    emit_output(g, ratedist::serde::waterfill_to_json(result).dump(2) + "\n");
    return 0;
}

int run_wz_bound(const GlobalOpts& g, const std::string& joint_path, double distortion) {
    const auto joint = ratedist::serde::joint_gaussian_from_json(load_json_checked(joint_path));
    const auto cond = ratedist::conditional_covariance(joint);
    const ratedist::WaterfillResult result = ratedist::wyner_ziv_rate(cond.source, distortion);
    emit_output(g, ratedist::serde::waterfill_to_json(result).dump(2) + "\n");
    return 0;
}

int run_wz_sim(const GlobalOpts& g) {
    if (g.config.empty()) {
        throw ratedist::ParseError("wz-sim requires --config with the simulation settings");
    }
    ratedist::WZConfig cfg = ratedist::serde::wz_config_from_json(load_json_checked(g.config));
    if (g.seed_given) cfg.seed = g.seed;
    cfg.threads = g.threads;

    ratedist::PipelineReport report;
    if (!g.trace.empty()) {
        std::ofstream trace(g.trace, std::ios::binary);
        if (!trace) throw ratedist::Error("cannot write trace file '" + g.trace + "'");
        report = ratedist::run_pipeline(cfg, &trace);
    } else {
        report = ratedist::run_pipeline(cfg);
    }
    emit_output(g, ratedist::serde::pipeline_report_to_json(report).dump(2) + "\n");
    return 0;
}

int run_game(const GlobalOpts& g, const std::string& game_path) {
    const ratedist::AllocationGame game = ratedist::serde::game_from_json(load_json_checked(game_path));
    const ratedist::Allocation alloc = ratedist::nash_solve(game);
    const ratedist::KktReport kkt = ratedist::kkt_verify(alloc, game);

    json matches = nullptr;
    if (!game.has_custom_quality()) {
        double total_distortion = 0.0;
        for (double d : alloc.distortion) total_distortion += d;
        const auto wf = ratedist::waterfill_spectrum(game.lambdas, total_distortion);
        bool ok = true;
        for (std::size_t i = 0; i < game.lambdas.size(); ++i) {
            if (std::abs(wf.mode_rate_bits[i] - alloc.rate_bits[i]) > 1e-8) ok = false;
        }
        matches = ok;
    }

    json out{{"allocation", ratedist::serde::allocation_to_json(alloc)},
             {"kkt", ratedist::serde::kkt_to_json(kkt)},
             {"matches_waterfill", matches}};
    emit_output(g, out.dump(2) + "\n");
    return 0;
}

int run_lattice_probe(const GlobalOpts& g, const std::string& lattice_name, double scale,
                      const std::string& point_csv, std::uint64_t dither_samples) {
    std::uint64_t seed = g.seed;
    ratedist::Lattice lat = ratedist::Lattice::from_name(lattice_name, scale);
    if (!g.config.empty()) {
        // Quantizer config file {lattice, scale, seed} overrides the flags.
        const auto q = ratedist::serde::quantizer_from_json(load_json_checked(g.config));
        lat = q.lattice();
        if (!g.seed_given) seed = q.seed();
    }
    json out{{"lattice", lat.name()},
             {"dim", lat.dim()},
             {"scale", lat.scale()},
             {"cell_volume", lat.cell_volume()},
             {"normalized_second_moment", lat.normalized_second_moment()},
             {"cell_second_moment_per_dim", lat.cell_second_moment_per_dim()}};

    if (!point_csv.empty()) {
        std::vector<double> x;
        std::stringstream ss(point_csv);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            try {
                x.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw ratedist::ParseError("lattice-probe: bad coordinate '" + cell + "'");
            }
        }
        out["point"] = x;
        out["nearest_point"] = lat.nearest_point(x);
        out["quantization_error"] = lat.quantization_error(x);
    }

    if (dither_samples > 0) {
        const ratedist::DitheredQuantizer q(lat, seed);
        std::vector<double> mean(lat.dim(), 0.0);
        double second_moment = 0.0;
        for (std::uint64_t i = 0; i < dither_samples; ++i) {
            const auto d = q.sample_dither(i);
            for (int k = 0; k < lat.dim(); ++k) {
                mean[static_cast<std::size_t>(k)] += d[static_cast<std::size_t>(k)];
                second_moment += d[static_cast<std::size_t>(k)] * d[static_cast<std::size_t>(k)];
            }
        }
        for (double& m : mean) m /= static_cast<double>(dither_samples);
        second_moment /= static_cast<double>(dither_samples * lat.dim());
        out["dither_samples"] = dither_samples;
        out["dither_mean"] = mean;
        out["dither_second_moment_per_dim"] = second_moment;
    }

    emit_output(g, out.dump(2) + "\n");
    return 0;
}

// Materializes the standing test inputs (binary source, two-mode spectrum,
// correlated scalar pair, simulation config, game spec) for reproduction.
int write_fixtures(const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    const auto path = [&](const char* name) { return (fs::path(dir) / name).string(); };

    ratedist::serde::write_file(
        path("binary_source.json"),
        json{{"alphabet", {"0", "1"}}, {"mass", {0.5, 0.5}}}.dump(2) + "\n");
    ratedist::serde::write_file(
        path("binary_hamming.json"),
        json{{"source", {"0", "1"}}, {"repro", {"0", "1"}}, {"d", {{0.0, 1.0}, {1.0, 0.0}}}}.dump(2) +
            "\n");
    ratedist::serde::write_file(
        path("solver.json"),
        json{{"tol", 1e-10}, {"max_iter", 100000}, {"betas", {0.5, 1.0, 2.0, 4.0, 8.0}}}.dump(2) +
            "\n");
    ratedist::serde::write_file(path("spectrum_4_1.csv"), "4,0\n0,1\n");
    ratedist::serde::write_file(
        path("joint_rho08.json"),
        json{{"cov", {{1.0, 0.8}, {0.8, 1.0}}}, {"nx", 1}, {"ny", 1}}.dump(2) + "\n");
    ratedist::serde::write_file(
        path("wz_sim.json"),
        ratedist::serde::wz_config_to_json(ratedist::WZConfig{}).dump(2) + "\n");
    ratedist::serde::write_file(
        path("game_4_1.json"),
        json{{"lambdas", {4.0, 1.0}},
             {"budget", {{"type", "distortion"}, {"value", 2.0}}},
             {"quality", "gaussian"}}.dump(2) +
            "\n");

    std::cout << "fixtures written to " << dir << "\n";
    return 0;
}

int error_exit(int code, const std::string& message, const std::string& context) {
    const json err{{"code", code}, {"message", message}, {"context", context}};
    std::cerr << err.dump() << "\n";
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"rate-distortion optimization toolkit"};
    app.require_subcommand(0, 1);

    GlobalOpts g;
    std::string fixtures_dir;
    app.add_option("--fixtures", fixtures_dir, "write the standing test fixtures to a directory");

    const auto add_common = [&](CLI::App* sub) {
        sub->add_option("--seed", g.seed, "rng seed")->each([&](const std::string&) {
            g.seed_given = true;
        });
        sub->add_option("--format", g.format, "output format: csv or json");
        sub->add_option("--out", g.out, "output file (stdout when omitted)");
        sub->add_option("--threads", g.threads, "worker threads; never changes results")
            ->check(CLI::PositiveNumber);
        sub->add_option("--config", g.config, "config file (JSON)");
    };

    std::string dist_path, source_path, distortion_path, cov_path, joint_path, game_path;
    std::string lattice_name = "Z1", point_csv;
    double scale = 1.0;
    double target_distortion = 0.0;
    std::uint64_t dither_samples = 0;

    CLI::App* entropy_cmd = app.add_subcommand("entropy", "entropy of a distribution file");
    entropy_cmd->add_option("--dist", dist_path, "distribution JSON")->required();
    add_common(entropy_cmd);

    CLI::App* rd_cmd = app.add_subcommand("rd-curve", "rate-distortion frontier sweep");
    rd_cmd->add_option("--source", source_path, "source distribution JSON")->required();
    rd_cmd->add_option("--distortion", distortion_path, "distortion matrix JSON")->required();
    add_common(rd_cmd);

    CLI::App* wf_cmd = app.add_subcommand("waterfill", "reverse water-filling allocation");
    wf_cmd->add_option("--cov", cov_path, "covariance (CSV matrix or JSON)")->required();
    wf_cmd->add_option("--target-distortion", target_distortion, "total distortion budget")
        ->required();
    add_common(wf_cmd);

    CLI::App* bound_cmd = app.add_subcommand("wz-bound", "side-information rate bound");
    bound_cmd->add_option("--joint", joint_path, "stacked (X, Y) covariance JSON")->required();
    bound_cmd->add_option("--target-distortion", target_distortion, "total distortion budget")
        ->required();
    add_common(bound_cmd);

    CLI::App* sim_cmd = app.add_subcommand("wz-sim", "nested-lattice coding simulation");
    sim_cmd->add_option("--trace", g.trace, "per-sample CSV trace file");
    add_common(sim_cmd);

    CLI::App* game_cmd = app.add_subcommand("game", "rate-allocation equilibrium");
    game_cmd->add_option("--game", game_path, "game spec JSON")->required();
    add_common(game_cmd);

    CLI::App* probe_cmd = app.add_subcommand("lattice-probe", "nearest-point and dither diagnostics");
    probe_cmd->add_option("--lattice", lattice_name, "Z<n>, D4 or E8");
    probe_cmd->add_option("--scale", scale, "lattice scale")->check(CLI::PositiveNumber);
    probe_cmd->add_option("--point", point_csv, "comma-separated coordinates to quantize");
    probe_cmd->add_option("--dither-samples", dither_samples, "sample count for dither statistics");
    add_common(probe_cmd);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return error_exit(2, e.what(), "argv");
    }

    std::string context = "argv";
    try {
        if (!fixtures_dir.empty()) return write_fixtures(fixtures_dir);
        if (entropy_cmd->parsed()) return (context = "entropy", run_entropy(g, dist_path));
        if (rd_cmd->parsed()) {
            return (context = "rd-curve", run_rd_curve(g, source_path, distortion_path));
        }
        if (wf_cmd->parsed()) {
            return (context = "waterfill", run_waterfill(g, cov_path, target_distortion));
        }
        if (bound_cmd->parsed()) {
            return (context = "wz-bound", run_wz_bound(g, joint_path, target_distortion));
        }
        if (sim_cmd->parsed()) return (context = "wz-sim", run_wz_sim(g));
        if (game_cmd->parsed()) return (context = "game", run_game(g, game_path));
        if (probe_cmd->parsed()) {
            context = "lattice-probe";
            return run_lattice_probe(g, lattice_name, scale, point_csv, dither_samples);
        }
        std::cerr << app.help();
        return 2;
    } catch (const ratedist::ParseError& e) {
        return error_exit(2, e.what(), context);
    } catch (const ratedist::ConvergenceError& e) {
        return error_exit(4, e.what(), context);
    } catch (const ratedist::DegeneracyError& e) {
        return error_exit(4, e.what(), context);
    } catch (const ratedist::ValidationError& e) {
        return error_exit(3, e.what(), context);
    } catch (const ratedist::DomainError& e) {
        return error_exit(3, e.what(), context);
    } catch (const ratedist::InfeasibleError& e) {
        return error_exit(3, e.what(), context);
    } catch (const nlohmann::json::exception& e) {
        return error_exit(2, e.what(), context);
    } catch (const std::exception& e) {
        return error_exit(3, e.what(), context);
    }
}
