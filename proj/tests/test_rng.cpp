#include <gtest/gtest.h>

#include "radarsense/rng.hpp"

#include <cmath>
#include <vector>

using namespace radarsense;

// Known-answer vectors published with Random123.
TEST(Philox, KnownAnswerVectors) {
    EXPECT_EQ(philox4x32({0, 0, 0, 0}, {0, 0}), (PhiloxCounter{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8}));
    EXPECT_EQ(philox4x32({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}),
              (PhiloxCounter{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd}));
    EXPECT_EQ(philox4x32({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}),
              (PhiloxCounter{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1}));
}

TEST(CounterRng, SameKeyAndCounterReproduce) {
    CounterRng a(42, 3, 7, 0), b(42, 3, 7, 0);
    for (int i = 0; i < 100; ++i) EXPECT_EQ(a.uniform(), b.uniform());
}

TEST(CounterRng, DifferentStreamsDiffer) {
    CounterRng a(42, 3, 7, 0), b(42, 3, 7, 1);
    EXPECT_NE(a.uniform(), b.uniform());
}

TEST(CounterRng, UniformIsInOpenUnitInterval) {
    EXPECT_GT(to_unit_open(0, 0), 0.0);
    EXPECT_LT(to_unit_open(0xffffffff, 0xffffffff), 1.0);
    CounterRng rng(1, 0, 0, 0);
    double sum = 0.0;
    constexpr int n = 100000;
    for (int i = 0; i < n; ++i) sum += rng.uniform();
    EXPECT_NEAR(sum / n, 0.5, 0.005);
}

TEST(CounterRng, NormalMoments) {
    CounterRng rng(9, 1, 2, 3);
    constexpr int n = 200000;
    double s1 = 0.0, s2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double z = rng.normal();
        s1 += z;
        s2 += z * z;
    }
    EXPECT_NEAR(s1 / n, 0.0, 0.01);
    EXPECT_NEAR(s2 / n, 1.0, 0.02);
}
