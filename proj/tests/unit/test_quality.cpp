#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "batchlens/quality.hpp"
#include "oracles.hpp"

using namespace batchlens;
using namespace batchlens::quality;

TEST(Psnr, IdenticalIsSentinel) {
    imaging::Image a(12, 12, 1, 0.3);
    EXPECT_EQ(psnr(a, a), kPsnrIdentical);
}

TEST(Psnr, UniformTenthDifferenceIsTwentyDecibels) {
    imaging::Image a(12, 12, 3, 0.25), b(12, 12, 3, 0.35);
    EXPECT_NEAR(psnr(a, b), 20.0, 1e-12);
}

TEST(Psnr, DecreasesWithErrorAndIsSymmetric) {
    imaging::Image a(12, 12, 1, 0.5);
    double prev = kPsnrIdentical;
    for (double d : {0.01, 0.05, 0.1, 0.3}) {
        imaging::Image b(12, 12, 1, 0.5 + d);
        const double p = psnr(a, b);
        EXPECT_LT(p, prev);
        EXPECT_EQ(p, psnr(b, a));
        EXPECT_GE(p, 0.0);
        prev = p;
    }
}

TEST(Ssim, IdentityAndInversion) {
    std::mt19937_64 rng(1);
    const auto x = oracle::random_image(24, 24, 1, rng);
    EXPECT_NEAR(ssim(x, x), 1.0, 1e-12);
    auto inv = x;
    for (double& v : inv.data) v = 1.0 - v;
    EXPECT_LT(ssim(x, inv), ssim(x, x));
}

TEST(Ssim, MatchesPerWindowOracle) {
    std::mt19937_64 rng(2);
    for (int t = 0; t < 20; ++t) {
        const int ch = t % 2 ? 3 : 1;
        const auto a = oracle::random_image(16, 16, ch, rng);
        const auto b = oracle::random_image(16, 16, ch, rng);
        const double s = ssim(a, b);
        EXPECT_NEAR(s, oracle::ssim(a, b), 1e-7);
        EXPECT_NEAR(s, ssim(b, a), 1e-12);
        EXPECT_GE(s, -1.0);
        EXPECT_LE(s, 1.0);
    }
}

TEST(Ssim, TapsAreNormalized) {
    double sum = 0;
    for (double t : ssim_gaussian_taps()) sum += t;
    EXPECT_NEAR(sum, 1.0, 1e-15);
}

TEST(Quality, RejectsMismatchedOrTinyImages) {
    imaging::Image a(12, 12, 1), b(12, 13, 1), tiny(8, 8, 1);
    EXPECT_THROW(psnr(a, b), std::invalid_argument);
    EXPECT_THROW(ssim(tiny, tiny), std::invalid_argument);
}
