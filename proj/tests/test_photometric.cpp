// Copyright Contributors to the motionloss project
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "motionloss/photometric.hpp"

namespace motionloss {
namespace {

Image random_image(int rows, int cols, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Image img(rows, cols);
    for (auto &ch : img.channel)
        for (Eigen::Index i = 0; i < ch.size(); ++i) ch.data()[i] = unit(rng);
    return img;
}

int mirror(int i, int n) {
    if (i < 0) return -i;
    if (i >= n) return 2 * (n - 1) - i;
    return i;
}

// Per-pixel SSIM/L1 blend from explicit nine-sample window sums.
double oracle_error(const Image &a, const Image &b, int y, int x) {
    double total = 0;
    for (int c = 0; c < 3; ++c) {
        double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
        for (int dy = -1; dy <= 1; ++dy) {
            for (int dx = -1; dx <= 1; ++dx) {
                const int yy = mirror(y + dy, int(a.rows()));
                const int xx = mirror(x + dx, int(a.cols()));
                const double va = a.channel[c](yy, xx), vb = b.channel[c](yy, xx);
                sa += va;
                sb += vb;
                saa += va * va;
                sbb += vb * vb;
                sab += va * vb;
            }
        }
        const double ma = sa / 9, mb = sb / 9;
        const double va = saa / 9 - ma * ma, vb = sbb / 9 - mb * mb, cov = sab / 9 - ma * mb;
        const double c1 = 0.0001, c2 = 0.0009;
        const double ssim = (2 * ma * mb + c1) * (2 * cov + c2) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
        total += 0.85 * (1 - ssim) / 2 + 0.15 * std::abs(a.channel[c](y, x) - b.channel[c](y, x));
    }
    return total / 3;
}

TEST(PhotometricError, IdenticalImagesGiveZero) {
    const Image a = random_image(7, 9, 1);
    const ErrorMap e = photometric_error(a, a);
    EXPECT_TRUE(e.valid.all());
    EXPECT_LT(e.value.abs().maxCoeff(), 1e-12);
}

TEST(PhotometricError, ConstantImagesMatchClosedForm) {
    const Image a = Image::constant(5, 5, Rgb<double>::Zero());
    const Image b = Image::constant(5, 5, Rgb<double>::Ones());
    const ErrorMap e = photometric_error(a, b);
    const double ssim = 0.0001 / (1.0 + 0.0001);
    const double expected = 0.85 * (1 - ssim) / 2 + 0.15;
    for (int y = 0; y < 5; ++y)
        for (int x = 0; x < 5; ++x) EXPECT_NEAR(e.value(y, x), expected, 1e-12);
}

TEST(PhotometricError, MatchesBruteForceWindowOracle) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const Image a = random_image(6, 8, seed);
        const Image b = random_image(6, 8, seed + 100);
        const ErrorMap e = photometric_error(a, b);
        for (int y = 0; y < 6; ++y)
            for (int x = 0; x < 8; ++x) EXPECT_NEAR(e.value(y, x), oracle_error(a, b, y, x), 1e-12);
    }
}

TEST(PhotometricError, SinglePixelChangeStaysInsideItsWindow) {
    const Image a = random_image(9, 9, 4);
    Image b = a;
    b.channel[1](4, 5) += 0.3;
    const ErrorMap e = photometric_error(a, b);
    for (int y = 0; y < 9; ++y) {
        for (int x = 0; x < 9; ++x) {
            const bool inside = std::abs(y - 4) <= 1 && std::abs(x - 5) <= 1;
            if (inside)
                EXPECT_GT(e.value(y, x), 1e-6);
            else
                EXPECT_LT(e.value(y, x), 1e-12);
        }
    }
}

TEST(PhotometricError, IsSymmetric) {
    const Image a = random_image(8, 6, 11);
    const Image b = random_image(8, 6, 12);
    const ErrorMap ab = photometric_error(a, b);
    const ErrorMap ba = photometric_error(b, a);
    EXPECT_LT((ab.value - ba.value).abs().maxCoeff(), 1e-15);
}

TEST(PhotometricError, InvalidPixelInvalidatesItsWindow) {
    const Image a = random_image(8, 8, 2);
    Image b = random_image(8, 8, 3);
    b.valid(3, 3) = false;
    const ErrorMap e = photometric_error(a, b);
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x) EXPECT_EQ(e.valid(y, x), std::abs(y - 3) > 1 || std::abs(x - 3) > 1);
    EXPECT_TRUE((e.valid || e.value == 0.0).all());
}

TEST(PhotometricError, DimensionMismatchIsContractViolation) {
    EXPECT_THROW(photometric_error(Image(4, 4), Image(4, 5)), ContractViolation);
}

TEST(PhotometricError, VjpMatchesFiniteDifferences) {
    const Image a = random_image(7, 10, 21);
    const Image b = random_image(7, 10, 22);
    const Field<double> adjoint = random_image(7, 10, 23).channel[0];
    const auto grad = photometric_error_vjp(a, b, adjoint);
    const double h = 1e-6;
    for (int c = 0; c < 3; ++c) {
        for (int y = 0; y < 7; ++y) {
            for (int x = 0; x < 10; ++x) {
                Image up = a, dn = a;
                up.channel[c](y, x) += h;
                dn.channel[c](y, x) -= h;
                const double fd =
                    ((adjoint * photometric_error(up, b).value).sum() - (adjoint * photometric_error(dn, b).value).sum()) /
                    (2 * h);
                EXPECT_NEAR(grad[c](y, x), fd, 1e-7 * std::max(1.0, std::abs(fd)));
            }
        }
    }
}

ErrorMap uniform_error(int rows, int cols, double v) {
    ErrorMap e(rows, cols);
    e.value.setConstant(v);
    return e;
}

TEST(SelectPixels, SingleCandidateIsReturnedUnchanged) {
    const Image img = random_image(4, 5, 1);
    const ErrorMap err = photometric_error(img, random_image(4, 5, 2));
    const std::vector<Candidate> cands{{&img, &err}};
    const Selection s = select_pixels(cands);
    EXPECT_TRUE(s.image == img);
    EXPECT_TRUE((s.error.value == err.value).all());
    EXPECT_TRUE((s.index == 0).all());
}

TEST(SelectPixels, TakesTheLowerError) {
    const Image a = Image::constant(2, 2, Rgb<double>::Constant(0.2));
    const Image b = Image::constant(2, 2, Rgb<double>::Constant(0.7));
    const ErrorMap ea = uniform_error(2, 2, 0.3), eb = uniform_error(2, 2, 0.1);
    const std::vector<Candidate> cands{{&a, &ea}, {&b, &eb}};
    const Selection s = select_pixels(cands);
    EXPECT_DOUBLE_EQ(s.image.channel[0](1, 1), 0.7);
    EXPECT_DOUBLE_EQ(s.error.value(1, 1), 0.1);
    EXPECT_EQ(s.index(1, 1), 1);
}

TEST(SelectPixels, FirstCandidateWinsTies) {
    const Image a = Image::constant(2, 2, Rgb<double>::Constant(0.2));
    const Image b = Image::constant(2, 2, Rgb<double>::Constant(0.7));
    const ErrorMap e = uniform_error(2, 2, 0.25);
    const std::vector<Candidate> cands{{&a, &e}, {&b, &e}};
    EXPECT_TRUE((select_pixels(cands).index == 0).all());
}

TEST(SelectPixels, SkipsInvalidAndFlagsAllInvalid) {
    const Image a = Image::constant(1, 2, Rgb<double>::Constant(0.2));
    const Image b = Image::constant(1, 2, Rgb<double>::Constant(0.7));
    ErrorMap ea = uniform_error(1, 2, 0.01), eb = uniform_error(1, 2, 0.5);
    ea.valid(0, 0) = false;
    ea.valid(0, 1) = false;
    eb.valid(0, 1) = false;
    const std::vector<Candidate> cands{{&a, &ea}, {&b, &eb}};
    const Selection s = select_pixels(cands);
    EXPECT_EQ(s.index(0, 0), 1);
    EXPECT_TRUE(s.error.valid(0, 0));
    EXPECT_EQ(s.index(0, 1), -1);
    EXPECT_FALSE(s.error.valid(0, 1));
    EXPECT_FALSE(s.image.valid(0, 1));
}

TEST(SelectPixels, EmptyListIsContractViolation) {
    EXPECT_THROW(select_pixels({}), ContractViolation);
}

TEST(SelectPixels, ErrorIsExactPixelwiseMinimum) {
    const Image target = random_image(12, 12, 50);
    std::vector<Image> imgs;
    std::vector<ErrorMap> errs;
    for (int i = 0; i < 4; ++i) imgs.push_back(random_image(12, 12, 51 + i));
    for (auto &img : imgs) errs.push_back(photometric_error(img, target));
    std::vector<Candidate> cands;
    for (int i = 0; i < 4; ++i) cands.push_back({&imgs[i], &errs[i]});
    const Selection s = select_pixels(cands);
    Field<double> min = errs[0].value;
    for (int i = 1; i < 4; ++i) min = min.min(errs[i].value);
    EXPECT_TRUE((s.error.value == min).all());
}

double smoothness_oracle(const DepthMap &d, const Image &img) {
    const int rows = int(d.rows()), cols = int(d.cols());
    double mean_inv = 0;
    for (int y = 0; y < rows; ++y)
        for (int x = 0; x < cols; ++x) mean_inv += 1.0 / d(y, x);
    mean_inv /= rows * cols;
    const auto grad_i = [&](int y0, int x0, int y1, int x1) {
        double g = 0;
        for (int c = 0; c < 3; ++c) g += std::abs(img.channel[c](y1, x1) - img.channel[c](y0, x0));
        return g / 3;
    };
    double sx = 0, sy = 0;
    for (int y = 0; y < rows; ++y)
        for (int x = 0; x + 1 < cols; ++x)
            sx += std::abs(1 / d(y, x + 1) - 1 / d(y, x)) / mean_inv * std::exp(-grad_i(y, x, y, x + 1));
    for (int y = 0; y + 1 < rows; ++y)
        for (int x = 0; x < cols; ++x)
            sy += std::abs(1 / d(y + 1, x) - 1 / d(y, x)) / mean_inv * std::exp(-grad_i(y, x, y + 1, x));
    return sx / (rows * (cols - 1)) + sy / ((rows - 1) * cols);
}

DepthMap random_depth(int rows, int cols, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(2.0, 30.0);
    DepthMap d(rows, cols);
    for (Eigen::Index i = 0; i < d.size(); ++i) d.data()[i] = dist(rng);
    return d;
}

TEST(Smoothness, ConstantDepthGivesZero) {
    EXPECT_EQ(smoothness_loss(DepthMap::Constant(6, 7, 12.0), random_image(6, 7, 3)), 0.0);
}

TEST(Smoothness, InverseDepthRampOverFlatImage) {
    const int rows = 5, cols = 8;
    const double s = 0.01;
    DepthMap d(rows, cols);
    double mean_inv = 0;
    for (int y = 0; y < rows; ++y) {
        for (int x = 0; x < cols; ++x) {
            d(y, x) = 1.0 / (0.05 + s * x);
            mean_inv += 0.05 + s * x;
        }
    }
    mean_inv /= rows * cols;
    const Image flat = Image::constant(rows, cols, Rgb<double>::Constant(0.4));
    EXPECT_NEAR(smoothness_loss(d, flat), s / mean_inv, 1e-12);
}

TEST(Smoothness, MatchesDirectSummation) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const DepthMap d = random_depth(7, 9, seed);
        const Image img = random_image(7, 9, seed + 40);
        EXPECT_NEAR(smoothness_loss(d, img), smoothness_oracle(d, img), 1e-12);
    }
}

TEST(Smoothness, ImageEdgeAtDepthEdgeLowersTheLoss) {
    DepthMap d = DepthMap::Constant(6, 8, 20.0);
    d.rightCols(4).setConstant(8.0);
    const Image flat = Image::constant(6, 8, Rgb<double>::Constant(0.3));
    Image edged = flat;
    for (auto &ch : edged.channel) ch.rightCols(4).setConstant(0.9);
    EXPECT_LT(smoothness_loss(d, edged), smoothness_loss(d, flat));
}

TEST(Smoothness, InvariantToDepthScale) {
    const DepthMap d = random_depth(6, 6, 9);
    const Image img = random_image(6, 6, 10);
    const double base = smoothness_loss(d, img);
    for (double c : {0.1, 3.0, 250.0}) EXPECT_NEAR(smoothness_loss(c * d, img), base, 1e-12 * std::max(1.0, base));
}

TEST(Smoothness, NonPositiveDepthIsDomainError) {
    DepthMap d = DepthMap::Constant(3, 3, 5.0);
    d(1, 1) = 0.0;
    EXPECT_THROW(smoothness_loss(d, Image(3, 3)), DomainError);
}

TEST(Smoothness, GradientMatchesFiniteDifferences) {
    const DepthMap d = random_depth(6, 7, 31);
    const Image img = random_image(6, 7, 32);
    const Field<double> g = smoothness_loss_gradient(d, img);
    for (Eigen::Index i = 0; i < d.size(); ++i) {
        const double h = 1e-6 * d.data()[i];
        DepthMap up = d, dn = d;
        up.data()[i] += h;
        dn.data()[i] -= h;
        const double fd = (smoothness_loss(up, img) - smoothness_loss(dn, img)) / (2 * h);
        EXPECT_NEAR(g.data()[i], fd, 1e-6 * std::max(std::abs(fd), 1e-4)) << i;
    }
}

TEST(Reprojection, EmptyMaskGivesZero) {
    EXPECT_EQ(reprojection_loss(uniform_error(3, 3, 0.7), PixelMask::Constant(3, 3, false)), 0.0);
}

TEST(Reprojection, UniformErrorIsItsOwnMean) {
    EXPECT_DOUBLE_EQ(reprojection_loss(uniform_error(4, 4, 0.2), PixelMask::Constant(4, 4, true)), 0.2);
}

TEST(Reprojection, AveragesOnlyTheSelectedHalf) {
    ErrorMap e = uniform_error(4, 4, 0.1);
    e.value.rightCols(2).setConstant(0.5);
    PixelMask m = PixelMask::Constant(4, 4, false);
    m.rightCols(2).setConstant(true);
    m(0, 1) = true;
    EXPECT_NEAR(reprojection_loss(e, m), (8 * 0.5 + 0.1) / 9, 1e-15);
}

TEST(Reprojection, IgnoresInvalidError) {
    ErrorMap e = uniform_error(2, 2, 0.2);
    e.value(0, 0) = 5.0;
    e.valid(0, 0) = false;
    EXPECT_DOUBLE_EQ(reprojection_loss(e, PixelMask::Constant(2, 2, true)), 0.2);
}

TEST(Reprojection, ShrinkingOntoLowerErrorPixelsDoesNotIncrease) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        ErrorMap e(5, 5);
        for (Eigen::Index i = 0; i < e.value.size(); ++i) e.value.data()[i] = unit(rng);
        const PixelMask full = PixelMask::Constant(5, 5, true);
        const double threshold = unit(rng);
        const PixelMask low = e.value <= threshold;
        if (!low.any()) continue;
        EXPECT_LE(reprojection_loss(e, low), reprojection_loss(e, full));
    }
}

} // namespace
} // namespace motionloss
