#pragma once

#include "radarsense/csv.hpp"
#include "radarsense/error.hpp"
#include "radarsense/raycast.hpp"
#include "radarsense/rng.hpp"
#include "radarsense/scenario.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <numbers>
#include <ostream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace radarsense {

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double ratio) { return 10.0 * std::log10(ratio); }

/// The six sampled sensor-effect parameters.
struct RadarParams {
    double awg_noise_sd = 2.0;  ///< dB, std. dev. of the per-hit SNR perturbation
    double dp_offset = 0.0;     ///< dB shift of the ROC operating point
    double g_max = 20.0;        ///< dB, antenna boresight gain
    double noise_figure = 15.0; ///< dB
    double sys_loss = 10.0;     ///< dB
    double rcs_mean = 0.0;      ///< dBsm, circular mean of the RCS profile

    friend bool operator==(const RadarParams&, const RadarParams&) = default;
};

inline constexpr std::array<std::string_view, 6> kRadarParamNames = {
    "awg_noise_sd", "dp_offset", "g_max", "noise_figure", "sys_loss", "rcs_mean"};

/// Field access by name; throws ValidationError for unknown names.
inline double& param_field(RadarParams& p, std::string_view name) {
    if (name == "awg_noise_sd") return p.awg_noise_sd;
    if (name == "dp_offset") return p.dp_offset;
    if (name == "g_max") return p.g_max;
    if (name == "noise_figure") return p.noise_figure;
    if (name == "sys_loss") return p.sys_loss;
    if (name == "rcs_mean") return p.rcs_mean;
    throw ValidationError("unknown radar parameter '" + std::string(name) + "'");
}

inline double param_field(const RadarParams& p, std::string_view name) {
    return param_field(const_cast<RadarParams&>(p), name);
}

/// Physical validity of a parameter set (not the sampling bounds).
inline void validate_params(const RadarParams& p) {
    for (auto name : kRadarParamNames) {
        if (!std::isfinite(param_field(p, name))) {
            throw ValidationError("radar params: " + std::string(name) + " is not finite");
        }
    }
    if (p.awg_noise_sd < 0.0) throw ValidationError("radar params: awg_noise_sd must be >= 0");
    if (p.sys_loss < 0.0) throw ValidationError("radar params: sys_loss must be >= 0 dB");
    if (p.noise_figure < 0.0) throw ValidationError("radar params: noise_figure must be >= 0 dB");
}

/// Aspect-dependent RCS profile in dB, piecewise linear over angle, shifted so
/// that its mean over the full circle is zero.
class RcsProfile {
public:
    RcsProfile(std::vector<double> angles, std::vector<double> values_db)
        : angles_(std::move(angles)), values_(std::move(values_db)) {
        if (angles_.size() < 2 || angles_.size() != values_.size()) {
            throw ConfigError("rcs table: need >= 2 points and matching angle/value counts");
        }
        for (std::size_t i = 1; i < angles_.size(); ++i) {
            if (!(angles_[i] > angles_[i - 1])) throw ConfigError("rcs table: angles must be strictly increasing");
        }
        constexpr double pi = std::numbers::pi;
        if (std::abs(angles_.front() + pi) > 1e-9 || std::abs(angles_.back() - pi) > 1e-9) {
            throw ConfigError("rcs table: angles must span [-pi, pi]");
        }
        if (std::abs(values_.front() - values_.back()) > 1e-9) {
            throw ConfigError("rcs table: values at -pi and pi must agree");
        }
        double integral = 0.0;
        for (std::size_t i = 1; i < angles_.size(); ++i) {
            integral += 0.5 * (values_[i] + values_[i - 1]) * (angles_[i] - angles_[i - 1]);
        }
        const double mean = integral / (2.0 * pi);
        for (auto& v : values_) v -= mean;
    }

    /// Passenger-car profile, 37 points at 10 degree spacing: about +5 dB at
    /// front and rear, +10 dB broadside, shallow troughs in between.
    static RcsProfile passenger_car() {
        constexpr std::array<double, 19> half = {5, 2, -1, -3, -4, -4, -3, 0, 6, 10,
                                                 6, 0, -3, -4, -4, -3, -1, 2, 5};
        std::vector<double> angles, values;
        for (int deg = -180; deg <= 180; deg += 10) {
            angles.push_back(deg * std::numbers::pi / 180.0);
            values.push_back(half[static_cast<std::size_t>(std::abs(deg) / 10)]);
        }
        return RcsProfile(std::move(angles), std::move(values));
    }

    /// Zero-mean profile value at a wrapped aspect angle.
    double relative_db(double aspect) const {
        const double a = std::clamp(aspect, angles_.front(), angles_.back());
        const auto it = std::upper_bound(angles_.begin(), angles_.end(), a);
        const std::size_t hi = std::min<std::size_t>(static_cast<std::size_t>(it - angles_.begin()), angles_.size() - 1);
        const std::size_t lo = hi - 1;
        const double w = (a - angles_[lo]) / (angles_[hi] - angles_[lo]);
        return values_[lo] + w * (values_[hi] - values_[lo]);
    }

    const std::vector<double>& angles() const { return angles_; }
    const std::vector<double>& values_db() const { return values_; }

private:
    std::vector<double> angles_;
    std::vector<double> values_;
};

/// Fixed physical constants and sensor configuration (not sampled).
struct RadarConstants {
    double tx_power = 10.0;                         ///< W (effective, includes processing gain)
    double wavelength = 299792458.0 / 76.5e9;       ///< m, 76.5 GHz carrier
    double noise_bandwidth = 1e6;                   ///< Hz
    double std_temperature = 290.0;                 ///< K
    double boltzmann = 1.380649e-23;                ///< J/K
    double snr50 = 13.0;                            ///< dB, SNR at Pd = 0.5
    double roc_slope = 0.5;                         ///< 1/dB, logistic steepness
    double sidelobe_suppression = -13.0;            ///< dB, nominal first sidelobe level of the sinc pattern
    double antenna_null = 25.0 * std::numbers::pi / 180.0; ///< rad, first null of the sinc pattern
    double gain_floor = 60.0;                       ///< dB below g_max where pattern nulls are clamped
    double fov = 120.0 * std::numbers::pi / 180.0;  ///< rad
    std::size_t n_rays = 241;
    RcsProfile rcs_profile = RcsProfile::passenger_car();

    void validate() const {
        const double positives[] = {tx_power, wavelength, noise_bandwidth, std_temperature, boltzmann,
                                    roc_slope, antenna_null, gain_floor};
        for (double v : positives) {
            if (!(v > 0.0) || !std::isfinite(v)) throw ValidationError("radar constants: values must be positive");
        }
        if (!(fov > 0.0) || !(fov < 2.0 * std::numbers::pi)) throw ValidationError("radar constants: fov out of range");
        if (n_rays < 2) throw ValidationError("radar constants: n_rays must be >= 2");
    }
};

/// Received power from the radar range equation, all inputs linear.
inline double received_power(double p_t, double gain_linear, double wavelength, double rcs_m2, double range,
                             double loss_linear) {
    if (range == 0.0) throw SingularityError("received power: zero range");
    if (!(p_t > 0.0 && gain_linear > 0.0 && wavelength > 0.0 && rcs_m2 > 0.0 && range > 0.0 && loss_linear > 0.0)) {
        throw ValidationError("received power: inputs must be positive");
    }
    constexpr double four_pi_cubed = 64.0 * std::numbers::pi * std::numbers::pi * std::numbers::pi;
    const double r2 = range * range;
    return p_t * gain_linear * gain_linear * wavelength * wavelength * rcs_m2 / (four_pi_cubed * r2 * r2 * loss_linear);
}

/// Thermal noise power k_B * F_n * B_n * T_0.
inline double noise_power(double noise_figure_linear, double bandwidth, double temperature,
                          double boltzmann = 1.380649e-23) {
    if (!(noise_figure_linear > 0.0 && bandwidth > 0.0 && temperature > 0.0)) {
        throw ValidationError("noise power: inputs must be positive");
    }
    return boltzmann * noise_figure_linear * bandwidth * temperature;
}

inline double snr(double p_r, double p_n) {
    if (p_n == 0.0) throw SingularityError("snr: zero noise power");
    if (!(p_n > 0.0)) throw ValidationError("snr: noise power must be positive");
    return p_r / p_n;
}

/// Single-expression SNR combining range equation and noise power.
inline double snr_radar_equation(double p_t, double gain_linear, double wavelength, double rcs_m2, double range,
                                 double loss_linear, double noise_figure_linear, double bandwidth, double temperature,
                                 double boltzmann = 1.380649e-23) {
    if (range == 0.0) throw SingularityError("snr: zero range");
    constexpr double four_pi_cubed = 64.0 * std::numbers::pi * std::numbers::pi * std::numbers::pi;
    const double r2 = range * range;
    return p_t * gain_linear * gain_linear * wavelength * wavelength * rcs_m2 /
           (boltzmann * noise_figure_linear * bandwidth * temperature * four_pi_cubed * r2 * r2 * loss_linear);
}

inline double sinc(double u) {
    if (u == 0.0) return 1.0;
    const double x = std::numbers::pi * u;
    return std::sin(x) / x;
}

/// Sinc antenna diagram in dB, clamped at g_max - floor_db.
inline double antenna_gain_db(double azimuth, double g_max, double theta_null, double floor_db = 60.0) {
    if (!(theta_null > 0.0)) throw ValidationError("antenna gain: theta_null must be positive");
    const double floor = g_max - floor_db;
    const double s = std::abs(sinc(azimuth / theta_null));
    if (s == 0.0) return floor;
    return std::max(floor, g_max + 20.0 * std::log10(s));
}

inline double rcs_dbsm(double aspect, double rcs_mean, const RcsProfile& profile) {
    return rcs_mean + profile.relative_db(aspect);
}

/// Logistic ROC: Pd = 1 / (1 + exp(-slope * (snr_db - (snr50 + dp_offset)))).
inline double detection_probability(double snr_db, double dp_offset, double snr50, double slope) {
    if (!(slope > 0.0)) throw ValidationError("detection probability: slope must be positive");
    return 1.0 / (1.0 + std::exp(-slope * (snr_db - (snr50 + dp_offset))));
}

struct Detection {
    double range = 0.0;
    double azimuth = 0.0;
    double snr_db = 0.0;
    double power_rx = 0.0;
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Detection&, const Detection&) = default;
};

struct DetectionSet {
    double frame_t = 0.0;
    std::vector<Detection> detections;

    friend bool operator==(const DetectionSet&, const DetectionSet&) = default;
};

/// Noise-free link budget of one hit.
struct HitBudget {
    double power_rx = 0.0;
    double snr_db = 0.0;
};

inline HitBudget hit_budget(const RayHit& hit, const RadarParams& params, const RadarConstants& constants) {
    const double gain = db_to_linear(antenna_gain_db(hit.azimuth, params.g_max, constants.antenna_null,
                                                     constants.gain_floor));
    const double rcs = db_to_linear(rcs_dbsm(hit.aspect_angle, params.rcs_mean, constants.rcs_profile));
    const double loss = db_to_linear(params.sys_loss);
    const double p_r = received_power(constants.tx_power, gain, constants.wavelength, rcs, hit.range, loss);
    const double p_n = noise_power(db_to_linear(params.noise_figure), constants.noise_bandwidth,
                                   constants.std_temperature, constants.boltzmann);
    return {p_r, linear_to_db(snr(p_r, p_n))};
}

/// Random-stream identifier; the reference stream is disjoint from every run stream.
inline constexpr std::uint32_t kReferenceStream = 0xFFFFFFFFu;

/// Stochastic detections for one frame. Each ray draws from its own counter
/// stream keyed by (seed, frame_index, ray_index, stream), so the outcome is
/// independent of evaluation order.
inline DetectionSet generate_detections(const Frame& frame, std::uint32_t frame_index, const RadarParams& params,
                                        const RadarConstants& constants, const VehicleShape& shape,
                                        std::uint64_t rng_seed, std::uint32_t stream = 0) {
    DetectionSet set;
    set.frame_t = frame.t;
    const auto hits = cast_fan_indexed(frame.ego, constants.fov, constants.n_rays, frame.target, shape);
    for (const auto& [ray_index, hit] : hits) {
        const HitBudget budget = hit_budget(hit, params, constants);
        CounterRng rng(rng_seed, frame_index, static_cast<std::uint32_t>(ray_index), stream);
        const double snr_db = budget.snr_db + params.awg_noise_sd * rng.normal();
        const double pd = detection_probability(snr_db, params.dp_offset, constants.snr50, constants.roc_slope);
        if (rng.uniform() < pd) {
            set.detections.push_back({hit.range, hit.azimuth, snr_db, budget.power_rx,
                                      hit.range * std::cos(hit.azimuth), hit.range * std::sin(hit.azimuth)});
        }
    }
    std::stable_sort(set.detections.begin(), set.detections.end(),
                     [](const Detection& a, const Detection& b) { return a.azimuth < b.azimuth; });
    return set;
}

/// E[Pd] of a hit with Gaussian SNR perturbation, integrated with composite
/// Simpson over +-8 standard deviations.
inline double expected_detection_probability(double snr_db, const RadarParams& params,
                                             const RadarConstants& constants) {
    if (params.awg_noise_sd == 0.0) {
        return detection_probability(snr_db, params.dp_offset, constants.snr50, constants.roc_slope);
    }
    constexpr int intervals = 320;
    constexpr double z_max = 8.0;
    const double h = 2.0 * z_max / intervals;
    double sum = 0.0;
    for (int i = 0; i <= intervals; ++i) {
        const double z = -z_max + i * h;
        const double weight = (i == 0 || i == intervals) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
        const double density = std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
        sum += weight * density *
               detection_probability(snr_db + params.awg_noise_sd * z, params.dp_offset, constants.snr50,
                                     constants.roc_slope);
    }
    return sum * h / 3.0;
}

/// Expected number of detections in a frame (sum of per-ray E[Pd]).
inline double expected_detection_count(const Frame& frame, const RadarParams& params, const RadarConstants& constants,
                                       const VehicleShape& shape) {
    double count = 0.0;
    for (const auto& [ray_index, hit] : cast_fan_indexed(frame.ego, constants.fov, constants.n_rays, frame.target, shape)) {
        count += expected_detection_probability(hit_budget(hit, params, constants).snr_db, params, constants);
    }
    return count;
}

inline constexpr const char* kDetectionHeader = "frame_t,range,azimuth,snr_db,x,y";

inline void write_detections(std::ostream& out, const std::vector<DetectionSet>& frames) {
    out << kDetectionHeader << '\n';
    for (const auto& set : frames) {
        for (const auto& d : set.detections) {
            out << csv::fmt(set.frame_t) << ',' << csv::fmt(d.range) << ',' << csv::fmt(d.azimuth) << ','
                << csv::fmt(d.snr_db) << ',' << csv::fmt(d.x) << ',' << csv::fmt(d.y) << '\n';
        }
    }
}

inline void save_detections(const std::string& path, const std::vector<DetectionSet>& frames) {
    std::ofstream out(path);
    if (!out) throw ValidationError(path + ": cannot open for writing");
    write_detections(out, frames);
}

/// Groups detection rows by frame_t (ascending). Frames without detections are
/// not present in the file; see align_detections for placing them on a time grid.
inline std::vector<DetectionSet> detections_from_table(const csv::Table& table, const std::string& source) {
    const std::size_t ct = table.column("frame_t", source);
    const std::size_t cr = table.column("range", source);
    const std::size_t ca = table.column("azimuth", source);
    const std::size_t cs = table.column("snr_db", source);
    const std::size_t cx = table.column("x", source);
    const std::size_t cy = table.column("y", source);
    std::map<double, DetectionSet> by_time;
    for (const auto& r : table.rows) {
        auto& set = by_time[r[ct]];
        set.frame_t = r[ct];
        set.detections.push_back({r[cr], r[ca], r[cs], 0.0, r[cx], r[cy]});
    }
    std::vector<DetectionSet> frames;
    for (auto& [t, set] : by_time) {
        std::stable_sort(set.detections.begin(), set.detections.end(),
                         [](const Detection& a, const Detection& b) { return a.azimuth < b.azimuth; });
        frames.push_back(std::move(set));
    }
    return frames;
}

inline std::vector<DetectionSet> load_detections(const std::string& path) {
    return detections_from_table(csv::read_file(path), path);
}

/// Places detection sets on the given frame times; each set goes to the frame
/// within `tolerance` of its frame_t. Unmatched sets are an error.
inline std::vector<DetectionSet> align_detections(const std::vector<DetectionSet>& sets,
                                                  const std::vector<double>& frame_times, double tolerance) {
    std::vector<DetectionSet> aligned(frame_times.size());
    for (std::size_t i = 0; i < frame_times.size(); ++i) aligned[i].frame_t = frame_times[i];
    for (const auto& set : sets) {
        const auto it = std::lower_bound(frame_times.begin(), frame_times.end(), set.frame_t);
        std::size_t best = frame_times.size();
        double best_gap = tolerance;
        for (auto cand = it == frame_times.begin() ? it : it - 1; cand != frame_times.end() && cand <= it; ++cand) {
            const double gap = std::abs(*cand - set.frame_t);
            if (gap <= best_gap) {
                best_gap = gap;
                best = static_cast<std::size_t>(cand - frame_times.begin());
            }
        }
        if (best == frame_times.size()) {
            throw ParseError("detections at t=" + csv::fmt(set.frame_t) + " do not match any scenario frame");
        }
        auto& dst = aligned[best].detections;
        dst.insert(dst.end(), set.detections.begin(), set.detections.end());
    }
    return aligned;
}

} // namespace radarsense
