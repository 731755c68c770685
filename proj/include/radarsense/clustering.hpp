#pragma once

#include "radarsense/error.hpp"
#include "radarsense/radar.hpp"
#include "radarsense/rng.hpp"
#include "radarsense/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

namespace radarsense {

struct ClusterResult {
    std::vector<Vec2> centroids;
    std::vector<std::size_t> assignment;
    double inertia = 0.0;
    /// Inertia after every assignment and every update step, in order.
    std::vector<double> inertia_history;
    std::size_t iterations = 0;
};

inline double squared_distance(Vec2 a, Vec2 b) {
    const Vec2 d = a - b;
    return d.x * d.x + d.y * d.y;
}

inline std::size_t count_distinct(std::span<const Vec2> points) {
    std::vector<std::pair<double, double>> sorted;
    sorted.reserve(points.size());
    for (auto p : points) sorted.emplace_back(p.x, p.y);
    std::sort(sorted.begin(), sorted.end());
    return static_cast<std::size_t>(std::unique(sorted.begin(), sorted.end()) - sorted.begin());
}

namespace detail {

inline double inertia_of(std::span<const Vec2> points, const std::vector<Vec2>& centroids,
                         const std::vector<std::size_t>& assignment) {
    double total = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) total += squared_distance(points[i], centroids[assignment[i]]);
    return total;
}

/// Nearest centroid per point; ties go to the lowest index.
inline void assign(std::span<const Vec2> points, const std::vector<Vec2>& centroids,
                   std::vector<std::size_t>& assignment) {
    for (std::size_t i = 0; i < points.size(); ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < centroids.size(); ++c) {
            const double d = squared_distance(points[i], centroids[c]);
            if (d < best) {
                best = d;
                assignment[i] = c;
            }
        }
    }
}

/// k-means++ seeding: first center uniform, then proportional to squared distance.
inline std::vector<Vec2> seed_plus_plus(std::span<const Vec2> points, std::size_t k, CounterRng& rng) {
    std::vector<Vec2> centers;
    centers.push_back(points[rng.index(points.size())]);
    std::vector<double> d2(points.size(), std::numeric_limits<double>::infinity());
    while (centers.size() < k) {
        double total = 0.0;
        for (std::size_t i = 0; i < points.size(); ++i) {
            d2[i] = std::min(d2[i], squared_distance(points[i], centers.back()));
            total += d2[i];
        }
        const double target = rng.uniform() * total;
        double acc = 0.0;
        std::size_t chosen = points.size();
        std::size_t last_positive = 0;
        for (std::size_t i = 0; i < points.size(); ++i) {
            if (d2[i] <= 0.0) continue;
            last_positive = i;
            acc += d2[i];
            if (acc >= target) {
                chosen = i;
                break;
            }
        }
        centers.push_back(points[chosen == points.size() ? last_positive : chosen]);
    }
    return centers;
}

} // namespace detail

namespace detail {

/// One Lloyd run from a k-means++ start drawn from `rng`.
inline ClusterResult lloyd(std::span<const Vec2> points, std::size_t k, CounterRng& rng, std::size_t max_iter,
                           double tol) {
    ClusterResult result;
    result.centroids = detail::seed_plus_plus(points, k, rng);
    result.assignment.assign(points.size(), 0);

    for (std::size_t iter = 0; iter < std::max<std::size_t>(max_iter, 1); ++iter) {
        detail::assign(points, result.centroids, result.assignment);
        result.inertia_history.push_back(detail::inertia_of(points, result.centroids, result.assignment));

        std::vector<Vec2> sums(k);
        std::vector<std::size_t> counts(k, 0);
        for (std::size_t i = 0; i < points.size(); ++i) {
            sums[result.assignment[i]] = sums[result.assignment[i]] + points[i];
            ++counts[result.assignment[i]];
        }
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] > 0) continue;
            // Steal the worst-fitting point from a cluster that has more than one.
            std::size_t worst = points.size();
            double worst_d = -1.0;
            for (std::size_t i = 0; i < points.size(); ++i) {
                const std::size_t owner = result.assignment[i];
                if (counts[owner] < 2) continue;
                const double d = squared_distance(points[i], result.centroids[owner]);
                if (d > worst_d) {
                    worst_d = d;
                    worst = i;
                }
            }
            const std::size_t owner = result.assignment[worst];
            sums[owner] = sums[owner] - points[worst];
            --counts[owner];
            result.assignment[worst] = c;
            sums[c] = points[worst];
            counts[c] = 1;
        }

        double max_shift = 0.0;
        for (std::size_t c = 0; c < k; ++c) {
            const Vec2 mean = (1.0 / static_cast<double>(counts[c])) * sums[c];
            max_shift = std::max(max_shift, norm(mean - result.centroids[c]));
            result.centroids[c] = mean;
        }
        result.inertia_history.push_back(detail::inertia_of(points, result.centroids, result.assignment));
        result.iterations = iter + 1;
        if (max_shift < tol) break;
    }
    result.inertia = result.inertia_history.back();
    return result;
}

} // namespace detail

/// Lloyd's algorithm from `n_init` seeded k-means++ starts; the lowest final
/// inertia wins (earliest start on ties). Each start stops when every centroid
/// moves less than `tol` or after `max_iter` updates. Empty clusters take the
/// point farthest from its centroid.
inline ClusterResult kmeans(std::span<const Vec2> points, std::size_t k, std::uint64_t seed,
                            std::size_t max_iter = 100, double tol = 1e-9, std::size_t n_init = 10) {
    if (k < 1) throw ValidationError("kmeans: k must be >= 1");
    if (points.empty()) throw ValidationError("kmeans: no points");
    if (n_init < 1) throw ValidationError("kmeans: n_init must be >= 1");
    if (k > count_distinct(points)) throw ValidationError("kmeans: k exceeds the number of distinct points");

    std::optional<ClusterResult> best;
    for (std::size_t start = 0; start < n_init; ++start) {
        CounterRng rng(seed, 0x6b6du, static_cast<std::uint32_t>(start), 0u);
        auto run = detail::lloyd(points, k, rng, max_iter, tol);
        if (!best || run.inertia < best->inertia) best = std::move(run);
        if (k == 1) break;
    }
    return *best;
}

/// Mean euclidean distance under the minimum-cost perfect matching of two
/// centroid sets. Exhaustive for k <= 6, Hungarian algorithm above.
inline double match_and_distance(const ClusterResult& sim, const ClusterResult& ref) {
    const std::size_t k = sim.centroids.size();
    if (k != ref.centroids.size()) throw ValidationError("match: cluster counts differ");
    if (k == 0) throw ValidationError("match: empty cluster sets");

    std::vector<std::vector<double>> cost(k, std::vector<double>(k));
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j < k; ++j) cost[i][j] = norm(sim.centroids[i] - ref.centroids[j]);
    }

    std::vector<std::size_t> match(k);
    if (k <= 6) {
        std::vector<std::size_t> perm(k);
        std::iota(perm.begin(), perm.end(), 0);
        double best = std::numeric_limits<double>::infinity();
        do {
            double total = 0.0;
            for (std::size_t i = 0; i < k; ++i) total += cost[i][perm[i]];
            if (total < best) {
                best = total;
                match = perm;
            }
        } while (std::next_permutation(perm.begin(), perm.end()));
    } else {
        // Hungarian algorithm with potentials (1-based rows/cols, O(k^3)).
        const double inf = std::numeric_limits<double>::infinity();
        std::vector<double> u(k + 1, 0.0), v(k + 1, 0.0);
        std::vector<std::size_t> p(k + 1, 0), way(k + 1, 0);
        for (std::size_t i = 1; i <= k; ++i) {
            p[0] = i;
            std::size_t j0 = 0;
            std::vector<double> minv(k + 1, inf);
            std::vector<bool> used(k + 1, false);
            do {
                used[j0] = true;
                const std::size_t i0 = p[j0];
                double delta = inf;
                std::size_t j1 = 0;
                for (std::size_t j = 1; j <= k; ++j) {
                    if (used[j]) continue;
                    const double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if (cur < minv[j]) {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if (minv[j] < delta) {
                        delta = minv[j];
                        j1 = j;
                    }
                }
                for (std::size_t j = 0; j <= k; ++j) {
                    if (used[j]) {
                        u[p[j]] += delta;
                        v[j] -= delta;
                    } else {
                        minv[j] -= delta;
                    }
                }
                j0 = j1;
            } while (p[j0] != 0);
            do {
                const std::size_t j1 = way[j0];
                p[j0] = p[j1];
                j0 = j1;
            } while (j0 != 0);
        }
        for (std::size_t j = 1; j <= k; ++j) match[p[j] - 1] = j - 1;
    }

    // Sum in a fixed order so the result does not depend on argument order.
    std::vector<double> matched(k);
    for (std::size_t i = 0; i < k; ++i) matched[i] = cost[i][match[i]];
    std::sort(matched.begin(), matched.end());
    return std::accumulate(matched.begin(), matched.end(), 0.0) / static_cast<double>(k);
}

struct EvalSummary {
    std::vector<double> per_frame_distance;
    /// Frame index of every entry in per_frame_distance.
    std::vector<std::size_t> retained_frames;
    std::size_t skipped_frames = 0;
    double min = 0.0;
    double mean = 0.0;
    double max = 0.0;
};

inline std::vector<Vec2> detection_points(const DetectionSet& set) {
    std::vector<Vec2> points;
    points.reserve(set.detections.size());
    for (const auto& d : set.detections) points.push_back({d.x, d.y});
    return points;
}

/// Clusters both detection sets of every frame and aggregates the matched
/// centroid distance. Frames where either side has fewer than k distinct
/// points are skipped and counted.
inline EvalSummary evaluate_run(std::span<const DetectionSet> sim_frames, std::span<const DetectionSet> ref_frames,
                                std::size_t k, std::uint64_t seed) {
    if (sim_frames.size() != ref_frames.size()) throw ValidationError("evaluate: frame counts differ");
    if (k < 1) throw ValidationError("evaluate: k must be >= 1");
    const double half_dt = ref_frames.size() >= 2 ? 0.5 * std::abs(ref_frames[1].frame_t - ref_frames[0].frame_t)
                                                  : 1e-9;

    EvalSummary summary;
    for (std::size_t f = 0; f < sim_frames.size(); ++f) {
        if (std::abs(sim_frames[f].frame_t - ref_frames[f].frame_t) > half_dt) {
            throw ValidationError("evaluate: frame " + std::to_string(f) + " is not time-aligned");
        }
        const auto sim_points = detection_points(sim_frames[f]);
        const auto ref_points = detection_points(ref_frames[f]);
        if (count_distinct(sim_points) < k || count_distinct(ref_points) < k) {
            ++summary.skipped_frames;
            continue;
        }
        const std::uint64_t frame_seed = seed ^ (0x9E3779B97F4A7C15ull * (f + 1));
        const auto sim = kmeans(sim_points, k, frame_seed);
        const auto ref = kmeans(ref_points, k, frame_seed);
        summary.per_frame_distance.push_back(match_and_distance(sim, ref));
        summary.retained_frames.push_back(f);
    }
    if (summary.per_frame_distance.empty()) {
        throw EvaluationError("evaluate: no frame retained (" + std::to_string(summary.skipped_frames) + " skipped)");
    }
    const auto& d = summary.per_frame_distance;
    summary.min = *std::min_element(d.begin(), d.end());
    summary.max = *std::max_element(d.begin(), d.end());
    summary.mean = std::clamp(std::accumulate(d.begin(), d.end(), 0.0) / static_cast<double>(d.size()),
                              summary.min, summary.max);
    return summary;
}

} // namespace radarsense
