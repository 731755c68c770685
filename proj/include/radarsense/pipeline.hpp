#pragma once

// Experiment orchestration: scenario -> reference detections -> eFAST sample
// matrix -> one simulated run per sample row -> clustering evaluation ->
// sensitivity indices per aggregation mode.

#include "radarsense/clustering.hpp"
#include "radarsense/error.hpp"
#include "radarsense/fast.hpp"
#include "radarsense/radar.hpp"
#include "radarsense/scenario.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <numbers>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace radarsense {

using Json = nlohmann::ordered_json;

enum class Aggregation { Min, Mean, Max };

inline const char* to_string(Aggregation a) {
    switch (a) {
    case Aggregation::Min: return "min";
    case Aggregation::Mean: return "mean";
    case Aggregation::Max: return "max";
    }
    return "?";
}

/// "min" | "mean" | "max" | "all".
inline std::vector<Aggregation> parse_mode(const std::string& mode) {
    if (mode == "min") return {Aggregation::Min};
    if (mode == "mean") return {Aggregation::Mean};
    if (mode == "max") return {Aggregation::Max};
    if (mode == "all") return {Aggregation::Min, Aggregation::Mean, Aggregation::Max};
    throw ValidationError("unknown aggregation mode '" + mode + "' (expected min|mean|max|all)");
}

/// Sampling bounds of the six sensor-effect parameters.
inline std::vector<ParameterSpec> default_parameter_specs() {
    return {{"awg_noise_sd", 0.0, 8.0},  {"dp_offset", -5.0, 5.0},   {"g_max", 10.0, 25.0},
            {"noise_figure", 10.0, 20.0}, {"sys_loss", 0.0, 20.0},   {"rcs_mean", -10.0, 10.0}};
}

struct ScenarioSource {
    std::optional<std::string> path;  ///< trajectory CSV; generated figure-eight when empty
    double half_length = 25.0;
    Pose2D center{45.0, 0.0, 0.0};
    double speed = 5.0;
    double dt = 0.1;
    VehicleShape target_shape;
};

struct ReferenceSource {
    std::optional<std::string> path;  ///< detection CSV; synthetic truth when empty
    RadarParams truth;
    /// Ray count of the synthetic reference fan; reference_ray_count() when unset.
    std::optional<std::size_t> n_rays;
};

/// Default synthetic-reference fan: about four times denser than the simulated
/// fan and not nested with it (4(n-1)+2 rays), so the two fans share no rays
/// except the field-of-view edges.
inline std::size_t reference_ray_count(std::size_t sim_rays) { return 4 * (sim_rays - 1) + 2; }

struct ExperimentConfig {
    ScenarioSource scenario;
    ReferenceSource reference;
    RadarConstants constants;
    std::vector<ParameterSpec> parameters = default_parameter_specs();
    std::size_t ns_per_param = 65;
    std::size_t interference = 4;
    std::string mode = "all";
    std::size_t k = 1;
    std::uint64_t seed = 1;
    std::string output_dir = "out";
    std::size_t workers = 1;

    void validate() const {
        validate_specs(parameters);
        for (const auto& p : parameters) {
            RadarParams probe;
            param_field(probe, p.name);
        }
        validate_efast_sizes(ns_per_param, interference);
        parse_mode(mode);
        if (k < 1) throw ValidationError("config: k must be >= 1");
        if (workers < 1) throw ValidationError("config: workers must be >= 1");
        constants.validate();
        validate_params(reference.truth);
        if (reference.n_rays && *reference.n_rays < 2) throw ValidationError("config: reference.n_rays must be >= 2");
    }
};

namespace detail {

template <class T>
void read_opt(const Json& j, const char* key, T& dst) {
    if (j.contains(key)) dst = j.at(key).get<T>();
}

inline RadarParams params_from_json(const Json& j, RadarParams p = {}) {
    for (auto name : kRadarParamNames) {
        const std::string key(name);
        if (j.contains(key)) param_field(p, name) = j.at(key).get<double>();
    }
    for (auto it = j.begin(); it != j.end(); ++it) param_field(p, it.key());
    return p;
}

} // namespace detail

inline Json params_to_json(const RadarParams& p) {
    Json j;
    for (auto name : kRadarParamNames) j[std::string(name)] = param_field(p, name);
    return j;
}

/// Parses the JSON experiment config. Relative file paths resolve against `base_dir`.
/// A "seed" entry is required so that no run depends on wall-clock seeding.
inline ExperimentConfig config_from_json(const Json& j, const std::filesystem::path& base_dir = {}) {
    ExperimentConfig c;
    try {
        const auto resolve = [&](const std::string& p) {
            const std::filesystem::path path(p);
            return (path.is_absolute() || base_dir.empty() ? path : base_dir / path).string();
        };
        if (j.contains("scenario")) {
            const auto& s = j.at("scenario");
            const std::string source = s.value("source", "generated");
            if (source == "file") {
                c.scenario.path = resolve(s.at("path").get<std::string>());
            } else if (source != "generated") {
                throw ValidationError("config: scenario.source must be 'generated' or 'file'");
            }
            detail::read_opt(s, "half_length", c.scenario.half_length);
            detail::read_opt(s, "speed", c.scenario.speed);
            detail::read_opt(s, "dt", c.scenario.dt);
            if (s.contains("center")) {
                const auto& o = s.at("center");
                c.scenario.center = {o.value("x", 0.0), o.value("y", 0.0), wrap_angle(o.value("yaw", 0.0))};
            }
            if (s.contains("target")) {
                detail::read_opt(s.at("target"), "length", c.scenario.target_shape.length);
                detail::read_opt(s.at("target"), "width", c.scenario.target_shape.width);
            }
        }
        if (j.contains("reference")) {
            const auto& r = j.at("reference");
            const std::string source = r.value("source", "synthetic");
            if (source == "file") {
                c.reference.path = resolve(r.at("path").get<std::string>());
            } else if (source != "synthetic") {
                throw ValidationError("config: reference.source must be 'synthetic' or 'file'");
            }
            if (r.contains("truth")) c.reference.truth = detail::params_from_json(r.at("truth"));
            if (r.contains("n_rays")) c.reference.n_rays = r.at("n_rays").get<std::size_t>();
        }
        if (j.contains("constants")) {
            const auto& k = j.at("constants");
            auto& rc = c.constants;
            detail::read_opt(k, "tx_power", rc.tx_power);
            if (k.contains("carrier_hz")) rc.wavelength = 299792458.0 / k.at("carrier_hz").get<double>();
            detail::read_opt(k, "wavelength", rc.wavelength);
            detail::read_opt(k, "noise_bandwidth", rc.noise_bandwidth);
            detail::read_opt(k, "std_temperature", rc.std_temperature);
            detail::read_opt(k, "snr50", rc.snr50);
            detail::read_opt(k, "roc_slope", rc.roc_slope);
            detail::read_opt(k, "gain_floor", rc.gain_floor);
            detail::read_opt(k, "n_rays", rc.n_rays);
            constexpr double deg = std::numbers::pi / 180.0;
            if (k.contains("fov_deg")) rc.fov = k.at("fov_deg").get<double>() * deg;
            if (k.contains("antenna_null_deg")) rc.antenna_null = k.at("antenna_null_deg").get<double>() * deg;
            if (k.contains("rcs_table")) {
                const auto& t = k.at("rcs_table");
                auto angles = t.at("angles_deg").get<std::vector<double>>();
                for (auto& a : angles) a *= deg;
                rc.rcs_profile = RcsProfile(std::move(angles), t.at("values_db").get<std::vector<double>>());
            }
        }
        if (j.contains("parameters")) {
            c.parameters.clear();
            for (const auto& p : j.at("parameters")) {
                c.parameters.push_back({p.at("name").get<std::string>(), p.at("min").get<double>(),
                                        p.at("max").get<double>()});
            }
        }
        detail::read_opt(j, "ns_per_param", c.ns_per_param);
        detail::read_opt(j, "interference", c.interference);
        detail::read_opt(j, "mode", c.mode);
        detail::read_opt(j, "k", c.k);
        detail::read_opt(j, "workers", c.workers);
        detail::read_opt(j, "output_dir", c.output_dir);
        if (!j.contains("seed")) throw ValidationError("config: 'seed' is required");
        c.seed = j.at("seed").get<std::uint64_t>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    c.validate();
    return c;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path + ": cannot open config");
    Json j;
    try {
        j = Json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(path + ": " + e.what());
    }
    return config_from_json(j, std::filesystem::path(path).parent_path());
}

inline Scenario build_scenario(const ExperimentConfig& config) {
    const auto& s = config.scenario;
    if (s.path) return load_trajectory(*s.path, s.target_shape);
    return generate_figure_eight(s.half_length, s.center, s.speed, s.dt, s.target_shape);
}

/// Detections of every scenario frame for one parameter set and random stream.
inline std::vector<DetectionSet> simulate_scenario(const Scenario& scenario, const RadarParams& params,
                                                   const RadarConstants& constants, std::uint64_t seed,
                                                   std::uint32_t stream) {
    std::vector<DetectionSet> frames;
    frames.reserve(scenario.frames.size());
    for (std::size_t f = 0; f < scenario.frames.size(); ++f) {
        frames.push_back(generate_detections(scenario.frames[f], static_cast<std::uint32_t>(f), params, constants,
                                             scenario.target_shape, seed, stream));
    }
    return frames;
}

inline std::vector<double> frame_times(const Scenario& scenario) {
    std::vector<double> t;
    for (const auto& f : scenario.frames) t.push_back(f.t);
    return t;
}

/// Reference detections: ingested from CSV and aligned to the scenario frames,
/// or simulated with the truth parameters and the reference ray fan on the
/// reserved reference stream.
inline std::vector<DetectionSet> build_reference(const ExperimentConfig& config, const Scenario& scenario) {
    if (config.reference.path) {
        return align_detections(load_detections(*config.reference.path), frame_times(scenario), 0.5 * scenario.dt);
    }
    validate_params(config.reference.truth);
    RadarConstants constants = config.constants;
    constants.n_rays = config.reference.n_rays.value_or(reference_ray_count(config.constants.n_rays));
    return simulate_scenario(scenario, config.reference.truth, constants, config.seed, kReferenceStream);
}

struct RunRecord {
    std::size_t run_id = 0;
    RadarParams params;
    std::optional<EvalSummary> summary;  ///< empty when the run retained no frame
    std::size_t skipped_frames = 0;
    double wall_time_s = 0.0;

    bool flagged() const { return !summary.has_value(); }

    double metric(Aggregation a) const {
        switch (a) {
        case Aggregation::Min: return summary->min;
        case Aggregation::Mean: return summary->mean;
        case Aggregation::Max: return summary->max;
        }
        return 0.0;
    }
};

struct ModeResult {
    Aggregation mode = Aggregation::Mean;
    std::vector<double> outputs;  ///< analysis input after imputation, in run_id order
    SensitivityResult sensitivity;
};

struct ExperimentResult {
    SampleMatrix samples;
    std::vector<DetectionSet> reference;
    std::vector<double> frame_times;
    std::vector<RunRecord> records;
    std::size_t flagged_runs = 0;
    std::vector<ModeResult> modes;
};

inline RadarParams params_for_row(const ExperimentConfig& config, const SampleMatrix& samples, std::size_t row) {
    RadarParams p = config.reference.truth;
    for (std::size_t j = 0; j < samples.specs.size(); ++j) param_field(p, samples.specs[j].name) = samples.values[row][j];
    return p;
}

/// Simulates and evaluates one sample row.
inline RunRecord execute_run(const ExperimentConfig& config, const Scenario& scenario,
                             const std::vector<DetectionSet>& reference, const SampleMatrix& samples,
                             std::size_t run_id) {
    const auto start = std::chrono::steady_clock::now();
    RunRecord rec;
    rec.run_id = run_id;
    rec.params = params_for_row(config, samples, run_id);
    const auto sim = simulate_scenario(scenario, rec.params, config.constants, config.seed,
                                       static_cast<std::uint32_t>(run_id));
    try {
        rec.summary = evaluate_run(sim, reference, config.k, config.seed);
        rec.skipped_frames = rec.summary->skipped_frames;
    } catch (const EvaluationError&) {
        rec.skipped_frames = scenario.frames.size();
    }
    rec.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return rec;
}

/// Analysis input for one mode; flagged runs take the median of their block's valid runs.
inline std::vector<double> imputed_outputs(const std::vector<RunRecord>& records, const SampleMatrix& samples,
                                           Aggregation mode) {
    std::vector<double> outputs(records.size());
    const std::size_t ns = samples.ns_per_param;
    for (std::size_t block = 0; block * ns < records.size(); ++block) {
        std::vector<double> valid;
        for (std::size_t r = block * ns; r < (block + 1) * ns; ++r) {
            if (!records[r].flagged()) valid.push_back(records[r].metric(mode));
        }
        if (valid.empty()) {
            throw ExperimentError("experiment: every run of block " + std::to_string(block) + " yielded no metric");
        }
        std::sort(valid.begin(), valid.end());
        const std::size_t mid = valid.size() / 2;
        const double median = valid.size() % 2 == 1 ? valid[mid] : 0.5 * (valid[mid - 1] + valid[mid]);
        for (std::size_t r = block * ns; r < (block + 1) * ns; ++r) {
            outputs[r] = records[r].flagged() ? median : records[r].metric(mode);
        }
    }
    return outputs;
}

/// Runs every sample row (in parallel with config.workers threads) and computes
/// the sensitivity indices per aggregation mode. Does not write files.
inline ExperimentResult run_experiment(const ExperimentConfig& config) {
    config.validate();
    const Scenario scenario = build_scenario(config);
    ExperimentResult result;
    result.frame_times = frame_times(scenario);
    result.reference = build_reference(config, scenario);
    result.samples = efast_samples(config.parameters, config.ns_per_param, config.interference, config.seed);

    const std::size_t rows = result.samples.rows();
    result.records.resize(rows);
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    const auto worker = [&] {
        for (std::size_t r = next++; r < rows; r = next++) {
            try {
                result.records[r] = execute_run(config, scenario, result.reference, result.samples, r);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    {
        std::vector<std::jthread> pool;
        for (std::size_t w = 1; w < std::min(config.workers, rows); ++w) pool.emplace_back(worker);
        worker();
    }
    if (failure) std::rethrow_exception(failure);

    for (const auto& rec : result.records) result.flagged_runs += rec.flagged() ? 1 : 0;
    if (10 * result.flagged_runs > rows) {
        throw ExperimentError("experiment: " + std::to_string(result.flagged_runs) + " of " + std::to_string(rows) +
                              " runs yielded no metric (limit 10%)");
    }
    for (auto mode : parse_mode(config.mode)) {
        ModeResult m;
        m.mode = mode;
        m.outputs = imputed_outputs(result.records, result.samples, mode);
        m.sensitivity = analyze(result.samples, m.outputs);
        result.modes.push_back(std::move(m));
    }
    return result;
}

inline Json sensitivity_to_json(const SensitivityResult& s) {
    Json j;
    for (std::size_t i = 0; i < s.names.size(); ++i) {
        const auto& idx = s.indices[i];
        j[s.names[i]] = {{"s_first", idx.s_first},
                         {"s_total", idx.s_total},
                         {"interaction", idx.interaction},
                         {"flagged", idx.flagged}};
    }
    j["total_variance"] = s.total_variance;
    return j;
}

inline Json summary_to_json(const EvalSummary& s) {
    return {{"skipped_frames", s.skipped_frames}, {"min", s.min}, {"mean", s.mean}, {"max", s.max}};
}

inline Json run_record_to_json(const RunRecord& r) {
    Json j{{"run_id", r.run_id}, {"skipped_frames", r.skipped_frames}};
    if (r.summary) {
        j["min"] = r.summary->min;
        j["mean"] = r.summary->mean;
        j["max"] = r.summary->max;
    } else {
        j["min"] = nullptr;
        j["mean"] = nullptr;
        j["max"] = nullptr;
    }
    j["flagged"] = r.flagged();
    return j;
}

namespace detail {

inline std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw ExperimentError(path.string() + ": cannot open for writing");
    return out;
}

} // namespace detail

/// Bar-chart data per mode (bars_<mode>.csv) and the per-frame distance table (distances.csv).
inline void export_plot_data(const ExperimentResult& result, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    for (const auto& m : result.modes) {
        auto out = detail::open_out(dir / (std::string("bars_") + to_string(m.mode) + ".csv"));
        out << "parameter,s_first,s_total,interaction\n";
        const auto& s = m.sensitivity;
        for (std::size_t i = 0; i < s.names.size(); ++i) {
            out << s.names[i] << ',' << csv::fmt(s.indices[i].s_first) << ',' << csv::fmt(s.indices[i].s_total) << ','
                << csv::fmt(s.indices[i].interaction) << '\n';
        }
    }
    auto out = detail::open_out(dir / "distances.csv");
    out << "run_id,frame_index,frame_t,distance\n";
    for (const auto& rec : result.records) {
        if (!rec.summary) continue;
        const auto& s = *rec.summary;
        for (std::size_t i = 0; i < s.per_frame_distance.size(); ++i) {
            out << rec.run_id << ',' << s.retained_frames[i] << ',' << csv::fmt(result.frame_times[s.retained_frames[i]])
                << ',' << csv::fmt(s.per_frame_distance[i]) << '\n';
        }
    }
}

/// Writes every artifact. All files except timing.csv are a pure function of the config.
inline void write_experiment(const ExperimentResult& result, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    save_samples((dir / "samples.csv").string(), result.samples);
    save_detections((dir / "reference_detections.csv").string(), result.reference);
    {
        auto out = detail::open_out(dir / "runs.jsonl");
        for (const auto& r : result.records) out << run_record_to_json(r).dump() << '\n';
    }
    {
        auto out = detail::open_out(dir / "timing.csv");
        out << "run_id,wall_time_s\n";
        for (const auto& r : result.records) out << r.run_id << ',' << csv::fmt(r.wall_time_s) << '\n';
    }
    for (const auto& m : result.modes) {
        Json j = sensitivity_to_json(m.sensitivity);
        j["imputed_runs"] = result.flagged_runs;
        auto out = detail::open_out(dir / (std::string("sensitivity_") + to_string(m.mode) + ".json"));
        out << j.dump(2) << '\n';
    }
    export_plot_data(result, dir);
}

} // namespace radarsense
