#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "riesz/harness.hpp"

namespace {

std::vector<riesz::Point> read_points(const std::string& path, int& d) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open points file " + path);
    std::vector<riesz::Point> pts;
    std::string line;
    d = 0;
    while (std::getline(in, line)) {
        for (char& c : line)
            if (c == ',') c = ' ';
        std::istringstream ss(line);
        double a, b;
        if (!(ss >> a)) continue;
        if (ss >> b) {
            if (d == 1) throw std::runtime_error("points file mixes 1D and 2D rows");
            d = 2;
            pts.push_back(riesz::point2(a, b));
        } else {
            if (d == 2) throw std::runtime_error("points file mixes 1D and 2D rows");
            d = 1;
            pts.push_back(riesz::point1(a));
        }
    }
    if (pts.empty()) throw std::runtime_error("points file is empty");
    return pts;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"rieszflow: Riesz gradient-flow particle systems, their mean-field "
                 "limit PDE, and modulated-energy diagnostics"};
    app.require_subcommand(1);

    std::string config_path;
    auto* run = app.add_subcommand("run", "run the experiment described by a config file");
    run->add_option("config", config_path, "JSON config file")->required();

    auto* suite = app.add_subcommand("suite", "run the identity suite with default settings");
    std::string suite_out = "suite.json";
    suite->add_option("--out", suite_out, "output JSON path");

    auto* balls = app.add_subcommand("balls", "growth-and-merge ball construction");
    std::string points_path, balls_out = "balls.json";
    double R_target = 0.0;
    balls->add_option("--points", points_path, "points file (one point per line)")->required();
    balls->add_option("--R", R_target, "target total radius")->required();
    balls->add_option("--out", balls_out, "output JSON path");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            riesz::ExperimentConfig cfg = riesz::load_config(config_path);
            if (cfg.experiment == "convergence") {
                riesz::ConvergenceResult res = riesz::run_convergence(cfg);
                std::printf("fitted exponent (largest three N): %.6g\n", res.fitted_exponent);
                for (const auto& r : res.runs)
                    std::printf("N=%-6ld E_N(T)=% .6e energy_gap=%.6e prep_gap=%.3e\n", r.n,
                                r.points.back().e_n, r.points.back().energy_gap,
                                r.prep.relative_gap);
                std::printf("outputs in %s\n", cfg.output_dir.c_str());
            } else if (cfg.experiment == "stability") {
                riesz::StabilityResult res = riesz::run_stability(cfg, cfg.perturbation);
                for (const auto& row : res.rows)
                    std::printf("t=%.4f D=%.6e sqrtD=%.6e envelope=%.6e\n", row.t, row.distance,
                                row.sqrt_distance, row.envelope);
                std::printf("outputs in %s\n", cfg.output_dir.c_str());
            } else if (cfg.experiment == "suite") {
                riesz::IdentityTable table = riesz::run_identity_suite(cfg);
                riesz::print_identity_table(table);
                riesz::ensure_dir(cfg.output_dir);
                riesz::write_identity_table(table, cfg.output_dir + "/suite.json");
                return table.all_pass() ? 0 : 1;
            } else {
                std::fprintf(stderr, "unknown experiment '%s'\n", cfg.experiment.c_str());
                return 2;
            }
        } else if (suite->parsed()) {
            riesz::ExperimentConfig cfg;
            riesz::IdentityTable table = riesz::run_identity_suite(cfg);
            riesz::print_identity_table(table);
            riesz::write_identity_table(table, suite_out);
            return table.all_pass() ? 0 : 1;
        } else if (balls->parsed()) {
            int d = 0;
            std::vector<riesz::Point> pts = read_points(points_path, d);
            double eta_n = pts.size() > 1 ? riesz::min_pair_distance(pts, d) : 1.0;
            riesz::BallCollection bc = riesz::grow_and_merge(pts, d, R_target, eta_n);
            riesz::write_balls_json(bc, balls_out);
            std::printf("%zu balls, total radius %.17g, %zu merges -> %s\n", bc.balls.size(),
                        bc.total_radius, bc.merges.size(), balls_out.c_str());
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}
