// radarsense command line: scenario / simulate / evaluate / sample / sensitivity / run.
//
// Exit codes: 0 success, 2 validation error, 3 experiment error.

#include "radarsense/pipeline.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace rs = radarsense;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitExperiment = 3;

struct CommonOptions {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> workers;
    std::string out;
    std::string mode;
};

rs::ExperimentConfig resolve_config(const CommonOptions& o) {
    rs::ExperimentConfig c = o.config.empty() ? rs::ExperimentConfig{} : rs::load_config(o.config);
    if (o.seed) c.seed = *o.seed;
    if (o.workers) c.workers = *o.workers;
    if (!o.mode.empty()) c.mode = o.mode;
    c.validate();
    return c;
}

/// Writes to `path`, or stdout when path is empty.
template <class Fn>
void emit(const std::string& path, Fn&& write) {
    if (path.empty()) {
        write(std::cout);
        return;
    }
    std::ofstream out(path);
    if (!out) throw rs::ValidationError(path + ": cannot open for writing");
    write(out);
}

std::vector<double> union_times(const std::vector<rs::DetectionSet>& a, const std::vector<rs::DetectionSet>& b) {
    std::vector<double> t;
    for (const auto& s : a) t.push_back(s.frame_t);
    for (const auto& s : b) t.push_back(s.frame_t);
    std::sort(t.begin(), t.end());
    t.erase(std::unique(t.begin(), t.end(), [](double x, double y) { return std::abs(x - y) <= 1e-9; }), t.end());
    return t;
}

std::vector<double> read_outputs(const std::string& path) {
    const auto table = rs::csv::read_file(path);
    std::size_t col = table.header.size() - 1;
    for (std::size_t i = 0; i < table.header.size(); ++i) {
        if (table.header[i] == "output") col = i;
    }
    std::vector<double> y;
    for (const auto& row : table.rows) y.push_back(row[col]);
    return y;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Detection-level radar simulation and eFAST sensitivity analysis"};
    app.require_subcommand(1);

    CommonOptions opt;
    const auto add_common = [&](CLI::App* cmd, bool with_mode) {
        cmd->add_option("--config", opt.config, "Experiment config (JSON)");
        cmd->add_option("--seed", opt.seed, "Master seed");
        cmd->add_option("--workers", opt.workers, "Worker threads");
        cmd->add_option("--out", opt.out, "Output path (directory for 'run')");
        if (with_mode) cmd->add_option("--mode", opt.mode, "Aggregation: min|mean|max|all");
    };

    auto* scenario_cmd = app.add_subcommand("scenario", "Generate a figure-eight trajectory or inspect a trajectory CSV");
    add_common(scenario_cmd, false);
    std::string inspect_path;
    scenario_cmd->add_option("--inspect", inspect_path, "Trajectory CSV to summarize");

    auto* simulate_cmd = app.add_subcommand("simulate", "Simulate one parameter set into a detection CSV");
    add_common(simulate_cmd, false);
    std::string params_path;
    bool reference_stream = false;
    simulate_cmd->add_option("--params", params_path, "JSON file with radar parameters (defaults: config truth)");
    simulate_cmd->add_flag("--reference-stream", reference_stream, "Draw from the reserved reference random stream");

    auto* evaluate_cmd = app.add_subcommand("evaluate", "Compare two detection CSVs with k-means");
    add_common(evaluate_cmd, false);
    std::string sim_path, ref_path;
    std::size_t k = 1;
    evaluate_cmd->add_option("--sim", sim_path, "Simulated detections CSV")->required();
    evaluate_cmd->add_option("--ref", ref_path, "Reference detections CSV")->required();
    evaluate_cmd->add_option("--k", k, "Number of clusters");

    auto* sample_cmd = app.add_subcommand("sample", "Emit the eFAST sample matrix CSV");
    add_common(sample_cmd, false);

    auto* sensitivity_cmd = app.add_subcommand("sensitivity", "Compute indices from sample matrix and outputs");
    add_common(sensitivity_cmd, false);
    std::string samples_path, outputs_path;
    std::size_t interference = 4;
    sensitivity_cmd->add_option("--samples", samples_path, "Sample matrix CSV")->required();
    sensitivity_cmd->add_option("--outputs", outputs_path, "Outputs CSV (column 'output' or last column)")->required();
    sensitivity_cmd->add_option("--interference", interference, "Interference factor M");

    auto* run_cmd = app.add_subcommand("run", "Full experiment from a config");
    add_common(run_cmd, true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitValidation;
    }

    try {
        if (scenario_cmd->parsed()) {
            if (!inspect_path.empty()) {
                const auto s = rs::load_trajectory(inspect_path);
                double r_min = 1e300, r_max = 0.0;
                for (const auto& f : s.frames) {
                    const double r = rs::norm(f.target.position() - f.ego.position());
                    r_min = std::min(r_min, r);
                    r_max = std::max(r_max, r);
                }
                rs::Json j{{"frames", s.frames.size()},
                           {"dt", s.dt},
                           {"duration", s.frames.back().t - s.frames.front().t},
                           {"range_min", r_min},
                           {"range_max", r_max}};
                std::cout << j.dump(2) << '\n';
                return 0;
            }
            const auto config = resolve_config(opt);
            const auto s = rs::build_scenario(config);
            emit(opt.out, [&](std::ostream& out) { rs::write_trajectory(out, s); });
        } else if (simulate_cmd->parsed()) {
            const auto config = resolve_config(opt);
            rs::RadarParams params = config.reference.truth;
            if (!params_path.empty()) {
                std::ifstream in(params_path);
                if (!in) throw rs::ValidationError(params_path + ": cannot open");
                try {
                    params = rs::detail::params_from_json(rs::Json::parse(in), params);
                } catch (const nlohmann::json::exception& e) {
                    throw rs::ConfigError(params_path + ": " + e.what());
                }
            }
            rs::validate_params(params);
            const auto s = rs::build_scenario(config);
            const auto frames = rs::simulate_scenario(s, params, config.constants, config.seed,
                                                      reference_stream ? rs::kReferenceStream : 0u);
            emit(opt.out, [&](std::ostream& out) { rs::write_detections(out, frames); });
        } else if (evaluate_cmd->parsed()) {
            const std::uint64_t seed = opt.seed.value_or(1);
            const auto sim_raw = rs::load_detections(sim_path);
            const auto ref_raw = rs::load_detections(ref_path);
            const auto times = union_times(sim_raw, ref_raw);
            const auto sim = rs::align_detections(sim_raw, times, 1e-9);
            const auto ref = rs::align_detections(ref_raw, times, 1e-9);
            const auto summary = rs::evaluate_run(sim, ref, k, seed);
            auto j = rs::summary_to_json(summary);
            j["per_frame_distance"] = summary.per_frame_distance;
            emit(opt.out, [&](std::ostream& out) { out << j.dump(2) << '\n'; });
        } else if (sample_cmd->parsed()) {
            const auto config = resolve_config(opt);
            const auto m = rs::efast_samples(config.parameters, config.ns_per_param, config.interference, config.seed);
            emit(opt.out, [&](std::ostream& out) { rs::write_samples(out, m); });
        } else if (sensitivity_cmd->parsed()) {
            const auto m = rs::load_samples(samples_path, interference);
            const auto y = read_outputs(outputs_path);
            const auto result = rs::analyze(m, y);
            emit(opt.out, [&](std::ostream& out) { out << rs::sensitivity_to_json(result).dump(2) << '\n'; });
        } else if (run_cmd->parsed()) {
            auto config = resolve_config(opt);
            if (!opt.out.empty()) config.output_dir = opt.out;
            const auto result = rs::run_experiment(config);
            rs::write_experiment(result, config.output_dir);
            std::cout << "runs: " << result.records.size() << ", imputed: " << result.flagged_runs << '\n';
            for (const auto& m : result.modes) {
                std::cout << "[" << rs::to_string(m.mode) << "]\n";
                for (std::size_t i = 0; i < m.sensitivity.names.size(); ++i) {
                    const auto& idx = m.sensitivity.indices[i];
                    std::cout << "  " << m.sensitivity.names[i] << ": S=" << idx.s_first << " ST=" << idx.s_total
                              << (idx.flagged ? " (flagged)" : "") << '\n';
                }
            }
        }
    } catch (const rs::ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const rs::ExperimentError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitExperiment;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
