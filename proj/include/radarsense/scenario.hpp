#pragma once

#include "radarsense/csv.hpp"
#include "radarsense/error.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <ostream>
#include <string>
#include <vector>

namespace radarsense {

/// Wraps an angle into (-pi, pi].
inline double wrap_angle(double a) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    double r = std::remainder(a, two_pi);
    if (r <= -std::numbers::pi) r += two_pi;
    return r;
}

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
    friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
    friend Vec2 operator*(double s, Vec2 v) { return {s * v.x, s * v.y}; }
    friend bool operator==(Vec2, Vec2) = default;
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double norm(Vec2 v) { return std::hypot(v.x, v.y); }

/// Rotates v counterclockwise by angle.
inline Vec2 rotate(Vec2 v, double angle) {
    const double c = std::cos(angle), s = std::sin(angle);
    return {c * v.x - s * v.y, s * v.x + c * v.y};
}

/// Planar pose; yaw counterclockwise from +x, kept in (-pi, pi].
struct Pose2D {
    double x = 0.0;
    double y = 0.0;
    double yaw = 0.0;

    Vec2 position() const { return {x, y}; }
    friend bool operator==(const Pose2D&, const Pose2D&) = default;
};

struct VehicleShape {
    double length = 4.5;
    double width = 1.8;

    void validate() const {
        if (!(length > 0.0) || !(width > 0.0)) {
            throw ValidationError("vehicle shape: length and width must be positive");
        }
    }
};

struct Frame {
    double t = 0.0;
    Pose2D ego;
    Pose2D target;
};

struct Scenario {
    std::vector<Frame> frames;
    VehicleShape target_shape;
    double dt = 0.0;

    /// Checks >= 2 frames, t >= 0, strictly increasing t with constant spacing.
    void validate() const {
        target_shape.validate();
        if (frames.size() < 2) throw ValidationError("scenario: at least 2 frames required");
        if (!(dt > 0.0)) throw ValidationError("scenario: dt must be positive");
        if (frames.front().t < 0.0) throw ValidationError("scenario: negative frame time");
        for (std::size_t i = 1; i < frames.size(); ++i) {
            const double step = frames[i].t - frames[i - 1].t;
            if (!(step > 0.0)) throw ValidationError("scenario: frame times not strictly increasing");
            if (std::abs(step - dt) > 1e-9) throw ValidationError("scenario: non-uniform frame spacing");
        }
    }
};

/// Point of the Gerono lemniscate x = a sin u, y = a sin u cos u (centered at the origin).
inline Vec2 lemniscate_point(double half_length, double u) {
    const double s = std::sin(u);
    return {half_length * s, half_length * s * std::cos(u)};
}

/// Derivative of lemniscate_point with respect to u.
inline Vec2 lemniscate_tangent(double half_length, double u) {
    return {half_length * std::cos(u), half_length * std::cos(2.0 * u)};
}

/// Stationary ego at the origin, target driving one full period of a Gerono
/// figure-eight placed by `offset`. The curve parameter is advanced with a
/// midpoint step so the distance travelled per frame approximates speed * dt.
inline Scenario generate_figure_eight(double half_length, const Pose2D& offset, double speed, double dt,
                                      VehicleShape shape = {}) {
    if (!(half_length > 0.0)) throw ValidationError("figure eight: half_length must be positive");
    if (!(speed > 0.0)) throw ValidationError("figure eight: speed must be positive");
    if (!(dt > 0.0)) throw ValidationError("figure eight: dt must be positive");
    shape.validate();

    constexpr double period = 2.0 * std::numbers::pi;
    const double step = speed * dt;

    Scenario scenario;
    scenario.dt = dt;
    scenario.target_shape = shape;

    double u = 0.0;
    for (std::size_t k = 0; u < period; ++k) {
        const Vec2 p = lemniscate_point(half_length, u);
        const Vec2 d = lemniscate_tangent(half_length, u);
        const Vec2 world = offset.position() + rotate(p, offset.yaw);
        Frame frame;
        frame.t = static_cast<double>(k) * dt;
        frame.target = {world.x, world.y, wrap_angle(std::atan2(d.y, d.x) + offset.yaw)};
        scenario.frames.push_back(frame);

        const double half = 0.5 * step / norm(lemniscate_tangent(half_length, u));
        u += step / norm(lemniscate_tangent(half_length, u + half));
    }
    if (scenario.frames.size() < 2) {
        throw ValidationError("figure eight: speed * dt too large to sample the curve");
    }
    return scenario;
}

inline constexpr const char* kTrajectoryHeader = "t,ego_x,ego_y,ego_yaw,target_x,target_y,target_yaw";

inline void write_trajectory(std::ostream& out, const Scenario& scenario) {
    out << kTrajectoryHeader << '\n';
    for (const auto& f : scenario.frames) {
        out << csv::fmt(f.t) << ',' << csv::fmt(f.ego.x) << ',' << csv::fmt(f.ego.y) << ',' << csv::fmt(f.ego.yaw)
            << ',' << csv::fmt(f.target.x) << ',' << csv::fmt(f.target.y) << ',' << csv::fmt(f.target.yaw) << '\n';
    }
}

inline void save_trajectory(const std::string& path, const Scenario& scenario) {
    std::ofstream out(path);
    if (!out) throw ValidationError(path + ": cannot open for writing");
    write_trajectory(out, scenario);
}

/// Builds a scenario from parsed trajectory rows. The shape is not part of the
/// file format and is supplied by the caller.
inline Scenario scenario_from_table(const csv::Table& table, const std::string& source, VehicleShape shape) {
    const std::size_t ct = table.column("t", source);
    const std::size_t cex = table.column("ego_x", source);
    const std::size_t cey = table.column("ego_y", source);
    const std::size_t ceyaw = table.column("ego_yaw", source);
    const std::size_t ctx = table.column("target_x", source);
    const std::size_t cty = table.column("target_y", source);
    const std::size_t ctyaw = table.column("target_yaw", source);

    if (table.rows.size() < 2) {
        throw ParseError(source + ": row " + std::to_string(table.rows.size()) + ": at least 2 rows required");
    }
    Scenario scenario;
    scenario.target_shape = shape;
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const auto& r = table.rows[i];
        const std::string where = source + ": row " + std::to_string(i + 1);
        Frame f;
        f.t = r[ct];
        f.ego = {r[cex], r[cey], wrap_angle(r[ceyaw])};
        f.target = {r[ctx], r[cty], wrap_angle(r[ctyaw])};
        if (f.t < 0.0) throw ParseError(where + ": negative time");
        if (!scenario.frames.empty() && !(f.t > scenario.frames.back().t)) {
            throw ParseError(where + ": time not strictly increasing");
        }
        scenario.frames.push_back(f);
    }
    scenario.dt = scenario.frames[1].t - scenario.frames[0].t;
    for (std::size_t i = 1; i < scenario.frames.size(); ++i) {
        const double step = scenario.frames[i].t - scenario.frames[i - 1].t;
        if (std::abs(step - scenario.dt) > 1e-9) {
            throw ParseError(source + ": row " + std::to_string(i + 1) + ": non-uniform frame spacing");
        }
    }
    return scenario;
}

inline Scenario load_trajectory(const std::string& path, VehicleShape shape = {}) {
    return scenario_from_table(csv::read_file(path), path, shape);
}

} // namespace radarsense
