#include <gtest/gtest.h>

#include "radarsense/radar.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

using namespace radarsense;

namespace {

constexpr double pi = std::numbers::pi;

Frame frame_at(double x, double y, double yaw) {
    Frame f;
    f.target = {x, y, yaw};
    return f;
}

} // namespace

TEST(ReceivedPower, Cancellation) {
    const double sigma = std::pow(4 * pi, 3);
    EXPECT_NEAR(received_power(1, 1, 1, sigma, 1, 1), 1.0, 1e-15);
}

TEST(ReceivedPower, TypicalLinkBudget) {
    // 30-digit reference evaluation of the range equation.
    EXPECT_NEAR(received_power(1, 100, 0.0039, 10, 50, 1), 1.22636459682241e-10, 1e-22);
}

TEST(ReceivedPower, FourthPowerLawAndErrors) {
    const double p1 = received_power(2.5, 31.6, 0.0039, 3.3, 17.0, 4.0);
    const double p2 = received_power(2.5, 31.6, 0.0039, 3.3, 34.0, 4.0);
    EXPECT_NEAR(p1 / p2, 16.0, 16.0 * 1e-12);
    EXPECT_THROW(received_power(1, 1, 1, 1, 0.0, 1), SingularityError);
    EXPECT_THROW(received_power(1, 1, 1, -1, 1, 1), ValidationError);
}

TEST(NoisePower, Values) {
    constexpr double kb = 1.380649e-23;
    EXPECT_DOUBLE_EQ(noise_power(1, 1, 1), kb);
    EXPECT_NEAR(noise_power(10, 1e6, 290), 4.0038821e-14, 1e-22);
    EXPECT_DOUBLE_EQ(noise_power(20, 1e6, 290), 2 * noise_power(10, 1e6, 290));
    EXPECT_THROW(noise_power(0, 1, 1), ValidationError);
}

TEST(Snr, RatioAndErrors) {
    EXPECT_DOUBLE_EQ(snr(3e-14, 3e-14), 1.0);
    EXPECT_NEAR(snr(1e-13, 1e-14), 10.0, 1e-12);
    EXPECT_NEAR(linear_to_db(snr(1e-13, 1e-14)), 10.0, 1e-12);
    EXPECT_THROW(snr(1, 0), SingularityError);
}

TEST(Snr, ComposedEqualsSingleExpression) {
    std::mt19937_64 gen(4);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 100; ++i) {
        const double pt = 0.01 + 10 * u(gen), g = db_to_linear(10 + 15 * u(gen)), lambda = 0.0039;
        const double sigma = db_to_linear(-10 + 30 * u(gen)), r = 1 + 150 * u(gen), l = db_to_linear(20 * u(gen));
        const double fn = db_to_linear(10 + 10 * u(gen)), bn = 1e5 + 1e7 * u(gen), t0 = 250 + 60 * u(gen);
        const double composed = snr(received_power(pt, g, lambda, sigma, r, l), noise_power(fn, bn, t0));
        const double direct = snr_radar_equation(pt, g, lambda, sigma, r, l, fn, bn, t0);
        EXPECT_NEAR(composed / direct, 1.0, 1e-12);
        // dB consistency: linear ratio converted equals the difference of dB powers.
        EXPECT_NEAR(linear_to_db(composed),
                    linear_to_db(received_power(pt, g, lambda, sigma, r, l)) - linear_to_db(noise_power(fn, bn, t0)),
                    1e-9);
    }
}

TEST(Antenna, BoresightNullAndSidelobe) {
    const double null = 25 * pi / 180;
    EXPECT_EQ(antenna_gain_db(0.0, 20.0, null), 20.0);
    EXPECT_EQ(antenna_gain_db(null, 20.0, null), 20.0 - 60.0);
    // Scan (null, 2 null) for the first sidelobe peak.
    double peak = -1e9;
    for (int i = 1; i < 100000; ++i) peak = std::max(peak, antenna_gain_db(null * (1 + i / 100000.0), 20.0, null));
    EXPECT_NEAR(peak, 20.0 - 13.2614588840483, 1e-6);
    EXPECT_NEAR(peak - 20.0, RadarConstants{}.sidelobe_suppression, 0.3);
    EXPECT_THROW(antenna_gain_db(0.1, 20, 0.0), ValidationError);
}

TEST(Antenna, GainNeverExceedsBoresight) {
    const double null = 0.4;
    for (int i = 1; i <= 2000; ++i) {
        const double az = -pi + 2 * pi * i / 2001.0;
        if (az == 0.0) continue;
        EXPECT_LT(antenna_gain_db(az, 17.0, null), 17.0) << az;
        EXPECT_GE(antenna_gain_db(az, 17.0, null), 17.0 - 60.0);
    }
}

TEST(Rcs, ConstantTableGivesMean) {
    std::vector<double> angles, values;
    for (int i = 0; i <= 36; ++i) {
        angles.push_back(-pi + 2 * pi * i / 36.0);
        values.push_back(7.0);
    }
    const RcsProfile profile(angles, values);
    for (double a : {-pi, -1.0, 0.0, 0.3, pi}) EXPECT_NEAR(rcs_dbsm(a, -3.5, profile), -3.5, 1e-12);
}

TEST(Rcs, ShiftedTableIsNormalized) {
    const auto base = RcsProfile::passenger_car();
    auto shifted = base.values_db();
    for (auto& v : shifted) v += 12.0;
    const RcsProfile moved(base.angles(), shifted);
    for (int i = 0; i < 100; ++i) {
        const double a = -pi + 2 * pi * i / 100.0;
        EXPECT_NEAR(rcs_dbsm(a, 2.0, base), rcs_dbsm(a, 2.0, moved), 1e-12);
    }
}

TEST(Rcs, DefaultProfileShape) {
    const auto p = RcsProfile::passenger_car();
    EXPECT_GT(rcs_dbsm(pi / 2, 0, p), rcs_dbsm(pi / 4, 0, p));
    EXPECT_NEAR(rcs_dbsm(pi / 2, 0, p), 10.0, 0.5);
    EXPECT_NEAR(rcs_dbsm(0.0, 0, p), 5.0, 0.5);
    EXPECT_NEAR(rcs_dbsm(pi, 0, p), 5.0, 0.5);
    // Circular mean is zero: trapezoid over a fine grid.
    double sum = 0.0;
    constexpr int n = 36000;
    for (int i = 0; i < n; ++i) sum += rcs_dbsm(-pi + 2 * pi * (i + 0.5) / n, 0, p);
    EXPECT_NEAR(sum / n, 0.0, 1e-6);
}

TEST(Rcs, MalformedTable) {
    EXPECT_THROW(RcsProfile({-pi, 0.5, 0.2, pi}, {0, 0, 0, 0}), ConfigError);
    EXPECT_THROW(RcsProfile({-pi, pi}, {0, 1}), ConfigError);
    EXPECT_THROW(RcsProfile({-1, 1}, {0, 0}), ConfigError);
}

TEST(DetectionProbability, LogisticShape) {
    EXPECT_DOUBLE_EQ(detection_probability(13 + 2, 2, 13, 0.5), 0.5);
    EXPECT_NEAR(detection_probability(13 + 6, 0, 13, 0.5), 0.952574126822433, 1e-14);
    EXPECT_EQ(detection_probability(1e6, 0, 13, 0.5), 1.0);
    EXPECT_EQ(detection_probability(-1e6, 0, 13, 0.5), 0.0);
    EXPECT_THROW(detection_probability(0, 0, 13, 0.0), ValidationError);
}

TEST(DetectionProbability, Monotone) {
    double prev = -1;
    for (int i = -100; i <= 100; ++i) {
        const double pd = detection_probability(i * 0.5, 0, 13, 0.5);
        EXPECT_GE(pd, prev);
        prev = pd;
    }
    prev = 2;
    for (int i = -10; i <= 10; ++i) {
        const double pd = detection_probability(15, i * 0.5, 13, 0.5);
        EXPECT_LE(pd, prev);
        prev = pd;
    }
}

TEST(GenerateDetections, SaturatedIsSeedIndependent) {
    RadarConstants c;
    c.tx_power = 1e30;
    RadarParams p;
    p.awg_noise_sd = 0.0;
    const auto f = frame_at(30, 2, 0.4);
    const auto a = generate_detections(f, 0, p, c, {}, 1);
    const auto b = generate_detections(f, 0, p, c, {}, 999);
    EXPECT_EQ(a, b);
    EXPECT_EQ(a.detections.size(), cast_fan(f.ego, c.fov, c.n_rays, f.target, {}).size());

    c.tx_power = 1e-30;
    EXPECT_TRUE(generate_detections(f, 0, p, c, {}, 1).detections.empty());
}

TEST(GenerateDetections, EmptyHitsAndContractFields) {
    RadarParams p;
    const auto none = generate_detections(frame_at(-30, 0, 0), 3, p, {}, {}, 1);
    EXPECT_TRUE(none.detections.empty());

    RadarConstants c;
    c.tx_power = 1e30;
    const auto f = frame_at(25, -4, 1.0);
    const auto set = generate_detections(f, 3, p, c, {}, 1);
    ASSERT_FALSE(set.detections.empty());
    for (std::size_t i = 0; i < set.detections.size(); ++i) {
        const auto& d = set.detections[i];
        EXPECT_NEAR(d.x, d.range * std::cos(d.azimuth), 1e-9);
        EXPECT_NEAR(d.y, d.range * std::sin(d.azimuth), 1e-9);
        EXPECT_TRUE(std::isfinite(d.snr_db));
        if (i > 0) EXPECT_LE(set.detections[i - 1].azimuth, d.azimuth);
    }
}

TEST(GenerateDetections, BitwiseDeterministic) {
    RadarParams p;
    p.awg_noise_sd = 5.0;
    const auto f = frame_at(40, 3, 2.0);
    const auto a = generate_detections(f, 17, p, {}, {}, 12345, 4);
    const auto b = generate_detections(f, 17, p, {}, {}, 12345, 4);
    EXPECT_EQ(a, b);
}

TEST(GenerateDetections, EmpiricalRateMatchesPd) {
    // Single ray straight at the target's rear face; awg = 0 so Pd is closed form.
    RadarConstants c;
    c.n_rays = 3;
    c.fov = 0.02;
    RadarParams p;
    p.awg_noise_sd = 0.0;
    const auto f = frame_at(40, 0, 0);
    const auto hits = cast_fan_indexed(f.ego, c.fov, c.n_rays, f.target, {});
    ASSERT_EQ(hits.size(), 3u);
    const double snr_db = hit_budget(hits[1].hit, p, c).snr_db;
    p.dp_offset = snr_db - c.snr50 - 1.0;  // operating point 1 dB above the midpoint
    const double pd = detection_probability(snr_db, p.dp_offset, c.snr50, c.roc_slope);
    constexpr int trials = 10000;
    int detected = 0;
    for (int t = 0; t < trials; ++t) {
        const auto set = generate_detections(f, static_cast<std::uint32_t>(t), p, c, {}, 77);
        for (const auto& d : set.detections) detected += d.azimuth == 0.0 ? 1 : 0;
    }
    const double rate = static_cast<double>(detected) / trials;
    EXPECT_NEAR(rate, pd, 3 * std::sqrt(pd * (1 - pd) / trials));
}

TEST(ExpectedDetections, MonotoneInSystemLoss) {
    const auto f = frame_at(45, 5, 0.7);
    RadarParams p;
    double prev = 1e9;
    for (int l = 0; l <= 20; ++l) {
        p.sys_loss = l;
        const double count = expected_detection_count(f, p, {}, {});
        EXPECT_LE(count, prev + 1e-12);
        prev = count;
    }
}

TEST(ExpectedDetections, NoiseFreeMatchesClosedForm) {
    RadarParams p;
    p.awg_noise_sd = 0.0;
    const double direct = detection_probability(14.0, p.dp_offset, 13.0, 0.5);
    EXPECT_DOUBLE_EQ(expected_detection_probability(14.0, p, {}), direct);
    // Gaussian smoothing of a logistic centered at the midpoint stays at 0.5 by symmetry.
    p.awg_noise_sd = 4.0;
    EXPECT_NEAR(expected_detection_probability(13.0, p, {}), 0.5, 1e-12);
}

TEST(DetectionCsv, RoundTripAndAlignment) {
    RadarConstants c;
    c.tx_power = 1e30;
    RadarParams p;
    std::vector<DetectionSet> frames;
    for (int i = 0; i < 4; ++i) {
        Frame f = frame_at(20 + i, i, 0.1 * i);
        f.t = 0.1 * i;
        frames.push_back(generate_detections(f, i, p, c, {}, 1));
    }
    frames[2].detections.clear();
    std::stringstream buf;
    write_detections(buf, frames);
    const auto loaded = detections_from_table(csv::read_stream(buf, "mem"), "mem");
    ASSERT_EQ(loaded.size(), 3u);  // empty frame has no rows
    const auto aligned = align_detections(loaded, {0.0, 0.1, 0.2, 0.30000000000000004}, 0.05);
    ASSERT_EQ(aligned.size(), 4u);
    for (std::size_t i = 0; i < 4; ++i) {
        ASSERT_EQ(aligned[i].detections.size(), frames[i].detections.size());
        for (std::size_t j = 0; j < frames[i].detections.size(); ++j) {
            EXPECT_EQ(aligned[i].detections[j].x, frames[i].detections[j].x);
            EXPECT_EQ(aligned[i].detections[j].snr_db, frames[i].detections[j].snr_db);
        }
    }
    EXPECT_THROW(align_detections(loaded, {5.0}, 0.05), ParseError);
}
