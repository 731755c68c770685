#pragma once

#include "radarsense/error.hpp"
#include "radarsense/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <vector>

namespace radarsense {

/// Half-line from `origin` in direction `azimuth` (same frame as the geometry it is cast against).
struct Ray {
    Vec2 origin;
    double azimuth = 0.0;
};

struct RayHit {
    Vec2 point;
    double range = 0.0;
    double azimuth = 0.0;
    /// Sensor direction seen from the target's forward axis: 0 front, pi rear.
    double aspect_angle = 0.0;
};

/// Aspect of `sensor_position` relative to the target's heading, wrapped to (-pi, pi].
inline double aspect_angle(const Pose2D& target, Vec2 sensor_position) {
    const Vec2 d = sensor_position - target.position();
    if (d.x == 0.0 && d.y == 0.0) throw ValidationError("aspect angle: sensor and target positions coincide");
    return wrap_angle(std::atan2(d.y, d.x) - target.yaw);
}

/// Nearest intersection of the ray with the boundary of the oriented rectangle
/// (slab test in the rectangle frame). A ray starting inside reports its exit point.
inline std::optional<RayHit> ray_rect_intersect(const Ray& ray, const Pose2D& rect_pose, const VehicleShape& shape) {
    const Vec2 o = rotate(ray.origin - rect_pose.position(), -rect_pose.yaw);
    const Vec2 d = rotate({std::cos(ray.azimuth), std::sin(ray.azimuth)}, -rect_pose.yaw);
    const double half[2] = {0.5 * shape.length, 0.5 * shape.width};
    const double origin[2] = {o.x, o.y};
    const double dir[2] = {d.x, d.y};

    double t_enter = -std::numeric_limits<double>::infinity();
    double t_exit = std::numeric_limits<double>::infinity();
    for (int axis = 0; axis < 2; ++axis) {
        if (dir[axis] == 0.0) {
            if (std::abs(origin[axis]) > half[axis]) return std::nullopt;
            continue;
        }
        double t0 = (-half[axis] - origin[axis]) / dir[axis];
        double t1 = (half[axis] - origin[axis]) / dir[axis];
        if (t0 > t1) std::swap(t0, t1);
        t_enter = std::max(t_enter, t0);
        t_exit = std::min(t_exit, t1);
    }
    if (t_enter > t_exit) return std::nullopt;
    const double t = t_enter > 0.0 ? t_enter : t_exit;
    if (!(t > 0.0)) return std::nullopt;

    RayHit hit;
    hit.range = t;
    hit.point = ray.origin + t * Vec2{std::cos(ray.azimuth), std::sin(ray.azimuth)};
    hit.azimuth = ray.azimuth;
    hit.aspect_angle = aspect_angle(rect_pose, ray.origin);
    return hit;
}

/// Sensor-frame azimuth of ray `index` in a fan of `n_rays` spanning `fov` centered on boresight.
inline double fan_azimuth(double fov, std::size_t n_rays, std::size_t index) {
    return -0.5 * fov + fov * static_cast<double>(index) / static_cast<double>(n_rays - 1);
}

struct FanHit {
    std::size_t ray_index = 0;
    RayHit hit;
};

/// Casts the fan and keeps the ray index of each hit (needed for per-ray random streams).
/// Hit azimuths are in the sensor frame; points are in the world frame.
inline std::vector<FanHit> cast_fan_indexed(const Pose2D& sensor, double fov, std::size_t n_rays, const Pose2D& target,
                                            const VehicleShape& shape) {
    if (!(fov > 0.0) || !(fov < 2.0 * std::numbers::pi)) throw ValidationError("cast fan: fov must be in (0, 2pi)");
    if (n_rays < 2) throw ValidationError("cast fan: at least 2 rays required");
    shape.validate();

    std::vector<FanHit> hits;
    for (std::size_t i = 0; i < n_rays; ++i) {
        const double az = fan_azimuth(fov, n_rays, i);
        if (auto hit = ray_rect_intersect({sensor.position(), sensor.yaw + az}, target, shape)) {
            hit->azimuth = az;
            hits.push_back({i, *hit});
        }
    }
    return hits;
}

inline std::vector<RayHit> cast_fan(const Pose2D& sensor, double fov, std::size_t n_rays, const Pose2D& target,
                                    const VehicleShape& shape) {
    std::vector<RayHit> hits;
    for (auto& h : cast_fan_indexed(sensor, fov, n_rays, target, shape)) hits.push_back(h.hit);
    return hits;
}

} // namespace radarsense
