// Copyright Contributors to the motionloss project
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <random>

#include "motionloss/geometry.hpp"

namespace motionloss {
namespace {

Intrinsics<double> test_k() { return {100.0, 100.0, 64.0, 48.0, 128, 96}; }

// Independent projection: 4x4 homogeneous matrices, no shared code with reproject().
Eigen::Vector2d homogeneous_oracle(double u, double v, double depth, const Intrinsics<double> &k,
                                   const Eigen::Matrix4d &t) {
    Eigen::Matrix4d k4 = Eigen::Matrix4d::Identity();
    k4.topLeftCorner<3, 3>() = k.matrix();
    const Eigen::Vector4d p(u * depth, v * depth, depth, 1.0);
    const Eigen::Vector4d q = k4 * t * k4.inverse() * p;
    return {q.x() / q.z(), q.y() / q.z()};
}

Eigen::Matrix3d euler_oracle(double a, double b, double c) {
    const auto rx = [](double x) {
        Eigen::Matrix3d m;
        m << 1, 0, 0, 0, std::cos(x), -std::sin(x), 0, std::sin(x), std::cos(x);
        return m;
    };
    const auto ry = [](double x) {
        Eigen::Matrix3d m;
        m << std::cos(x), 0, std::sin(x), 0, 1, 0, -std::sin(x), 0, std::cos(x);
        return m;
    };
    const auto rz = [](double x) {
        Eigen::Matrix3d m;
        m << std::cos(x), -std::sin(x), 0, std::sin(x), std::cos(x), 0, 0, 0, 1;
        return m;
    };
    return rx(a) * ry(b) * rz(c);
}

Image ramp_image(Eigen::Index rows, Eigen::Index cols) {
    Image img(rows, cols);
    for (Eigen::Index y = 0; y < rows; ++y)
        for (Eigen::Index x = 0; x < cols; ++x)
            img.set_pixel(y, x, Rgb<double>(0.01 * x, 0.02 * y, 0.3 + 0.001 * x * y));
    return img;
}

TEST(Projection, IdentityPoseKeepsPixel) {
    const auto k = test_k();
    for (double d : {0.5, 3.0, 70.0}) {
        const auto p = project_pixel<double>({10, 20}, d, k, Pose<double>::identity());
        EXPECT_TRUE(p.valid);
        EXPECT_EQ(p.u, 10.0);
        EXPECT_EQ(p.v, 20.0);
    }
}

TEST(Projection, LateralTranslationShiftsByFocalOverDepth) {
    const auto k = test_k();
    const auto t = Pose<double>::translation_only({1.0, 0.0, 0.0});
    for (double d : {10.0, 20.0}) {
        const auto p = project_pixel<double>({64, 48}, d, k, t);
        const Eigen::Vector2d oracle = homogeneous_oracle(64, 48, d, k, t.matrix());
        EXPECT_NEAR(p.u, oracle.x(), 1e-12);
        EXPECT_NEAR(p.v, oracle.y(), 1e-12);
        EXPECT_NEAR(p.u - 64.0, 100.0 / d, 1e-12);
    }
}

TEST(Projection, MatchesHomogeneousOracleOnRandomPoses) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> angle(-0.1, 0.1), shift(-1.0, 1.0), px(0.0, 127.0), py(0.0, 95.0),
        depth(1.0, 50.0);
    const auto k = test_k();
    for (int i = 0; i < 500; ++i) {
        const auto t = Pose<double>::from_euler({angle(rng), angle(rng), angle(rng)}, {shift(rng), shift(rng), shift(rng)});
        const double u = px(rng), v = py(rng), d = depth(rng);
        const auto r = reproject<double>({u, v}, d, k, t);
        const Eigen::Vector2d oracle = homogeneous_oracle(u, v, d, k, t.matrix());
        ASSERT_NEAR(r.pixel.u, oracle.x(), 1e-9);
        ASSERT_NEAR(r.pixel.v, oracle.y(), 1e-9);
    }
}

TEST(Projection, DepthDerivativeMatchesFiniteDifference) {
    const auto k = test_k();
    const auto t = Pose<double>::from_euler({0.02, -0.03, 0.01}, {0.4, -0.1, 0.7});
    for (double d : {2.0, 8.0, 30.0}) {
        const auto r = reproject<double>({30.5, 70.25}, d, k, t);
        const double h = 1e-6;
        const auto up = reproject<double>({30.5, 70.25}, d + h, k, t);
        const auto dn = reproject<double>({30.5, 70.25}, d - h, k, t);
        EXPECT_NEAR(r.du_ddepth, (up.pixel.u - dn.pixel.u) / (2 * h), 1e-6);
        EXPECT_NEAR(r.dv_ddepth, (up.pixel.v - dn.pixel.v) / (2 * h), 1e-6);
    }
}

TEST(Projection, NonPositiveDepthIsDomainError) {
    const auto k = test_k();
    EXPECT_THROW(project_pixel<double>({10, 10}, 0.0, k, Pose<double>()), DomainError);
    EXPECT_THROW(project_pixel<double>({10, 10}, -1.0, k, Pose<double>()), DomainError);
}

TEST(Projection, SourceOutsideImageIsContractViolation) {
    EXPECT_THROW(project_pixel<double>({-1, 10}, 5.0, test_k(), Pose<double>()), ContractViolation);
}

TEST(Projection, PointBehindCameraIsInvalid) {
    const auto p = project_pixel<double>({64, 48}, 5.0, test_k(), Pose<double>::translation_only({0, 0, -6}));
    EXPECT_FALSE(p.valid);
}

TEST(Projection, RoundTripThroughInversePose) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> angle(-0.1, 0.1), shift(-0.5, 0.5), px(20.0, 100.0), py(20.0, 70.0),
        depth(3.0, 40.0);
    const auto k = test_k();
    for (int i = 0; i < 500; ++i) {
        const auto t = Pose<double>::from_euler({angle(rng), angle(rng), angle(rng)}, {shift(rng), shift(rng), shift(rng)});
        const double u = px(rng), v = py(rng);
        const auto fwd = reproject<double>({u, v}, depth(rng), k, t);
        const auto back = reproject<double>({fwd.pixel.u, fwd.pixel.v}, fwd.depth, k, t.inverse());
        ASSERT_NEAR(back.pixel.u, u, 1e-6);
        ASSERT_NEAR(back.pixel.v, v, 1e-6);
    }
}

TEST(Projection, LateralShiftStrictlyDecreasesWithDepth) {
    const auto k = test_k();
    const auto t = Pose<double>::translation_only({0.3, 0, 0});
    double previous = std::numeric_limits<double>::infinity();
    for (double d = 0.5; d < 100; d *= 1.2) {
        const double shift = std::abs(project_pixel<double>({40, 40}, d, k, t).u - 40.0);
        EXPECT_LT(shift, previous);
        previous = shift;
    }
}

TEST(Pose, EulerConventionIsIntrinsicXyz) {
    const Eigen::Vector3d a(0.1, -0.2, 0.3);
    const auto p = Pose<double>::from_euler(a, Eigen::Vector3d::Zero());
    EXPECT_TRUE(p.rotation().isApprox(euler_oracle(a.x(), a.y(), a.z()), 1e-14));
    EXPECT_TRUE(p.euler().isApprox(a, 1e-12));
}

TEST(Pose, ComposeWithInverseIsIdentity) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> angle(-1.0, 1.0), shift(-5.0, 5.0);
    for (int i = 0; i < 200; ++i) {
        const auto t = Pose<double>::from_euler({angle(rng), angle(rng), angle(rng)}, {shift(rng), shift(rng), shift(rng)});
        EXPECT_TRUE(compose(t, t.inverse()).inverse().is_approx(Pose<double>::identity(), 1e-9));
        EXPECT_TRUE((t * t.inverse()).matrix().isApprox(Eigen::Matrix4d::Identity(), 1e-12));
    }
}

TEST(Pose, CompositionMatchesMatrixProduct) {
    const auto a = Pose<double>::from_euler({0.1, 0.2, -0.1}, {1, 2, 3});
    const auto b = Pose<double>::from_euler({-0.3, 0.05, 0.2}, {-1, 0.5, 0});
    EXPECT_TRUE((a * b).matrix().isApprox(a.matrix() * b.matrix(), 1e-14));
}

TEST(Intrinsics, ValidateRejectsBadValues) {
    EXPECT_NO_THROW(test_k().validate());
    EXPECT_THROW((Intrinsics<double>{0, 1, 1, 1, 4, 4}.validate()), ContractViolation);
    EXPECT_THROW((Intrinsics<double>{1, 1, 4, 1, 4, 4}.validate()), ContractViolation);
}

TEST(Bilinear, ExactOnIntegerCoordinates) {
    const Image img = ramp_image(10, 12);
    const auto s = bilinear_sample<double>(img, {3, 5});
    ASSERT_TRUE(s.valid);
    EXPECT_EQ(s.value, img.pixel(5, 3));
    const auto corner = bilinear_sample<double>(img, {11, 9});
    ASSERT_TRUE(corner.valid);
    EXPECT_EQ(corner.value, img.pixel(9, 11));
}

TEST(Bilinear, MidpointBetweenZeroAndOne) {
    Image img = Image::constant(2, 2, Rgb<double>::Zero());
    img.set_pixel(0, 1, Rgb<double>::Ones());
    const auto s = bilinear_sample<double>(img, {0.5, 0});
    ASSERT_TRUE(s.valid);
    EXPECT_DOUBLE_EQ(s.value[0], 0.5);
}

TEST(Bilinear, OutsideIsInvalid) {
    const Image img = ramp_image(4, 4);
    EXPECT_FALSE((bilinear_sample<double>(img, {-0.5, 0}).valid));
    EXPECT_FALSE((bilinear_sample<double>(img, {0, 3.01}).valid));
}

TEST(Bilinear, InvalidContributorPropagates) {
    Image img = ramp_image(4, 4);
    img.valid(1, 2) = false;
    EXPECT_FALSE((bilinear_sample<double>(img, {1.5, 0.5}).valid));
    EXPECT_TRUE((bilinear_sample<double>(img, {1.0, 0.5}).valid));  // zero-weight neighbor ignored
}

TEST(Bilinear, LinearAlongEachAxis) {
    const Image img = ramp_image(8, 8);
    for (double t : {0.0, 0.25, 0.5, 0.9}) {
        const auto s = bilinear_sample<double>(img, {2.0 + t, 3.0});
        const Rgb<double> expected = (1 - t) * img.pixel(3, 2) + t * img.pixel(3, 3);
        EXPECT_TRUE(s.value.isApprox(expected, 1e-14));
        const auto sv = bilinear_sample<double>(img, {2.0, 3.0 + t});
        const Rgb<double> expected_v = (1 - t) * img.pixel(3, 2) + t * img.pixel(4, 2);
        EXPECT_TRUE(sv.value.isApprox(expected_v, 1e-14));
    }
}

TEST(Bilinear, GradientMatchesFiniteDifference) {
    Image img(6, 6);
    for (Eigen::Index y = 0; y < 6; ++y)
        for (Eigen::Index x = 0; x < 6; ++x)
            img.set_pixel(y, x, Rgb<double>(std::sin(0.7 * x + 0.3 * y), std::cos(x * y * 0.2), 0.1 * x));
    const double h = 1e-7;
    for (const auto &p : {PixelCoord<double>{1.3, 2.6}, PixelCoord<double>{4.7, 0.2}, PixelCoord<double>{0.1, 4.9}}) {
        const auto g = bilinear_sample_with_gradient(img, p);
        const auto up = bilinear_sample<double>(img, {p.u + h, p.v}), un = bilinear_sample<double>(img, {p.u - h, p.v});
        const auto vp = bilinear_sample<double>(img, {p.u, p.v + h}), vn = bilinear_sample<double>(img, {p.u, p.v - h});
        EXPECT_TRUE(g.d_du.isApprox((up.value - un.value) / (2 * h), 1e-6));
        EXPECT_TRUE(g.d_dv.isApprox((vp.value - vn.value) / (2 * h), 1e-6));
    }
}

TEST(Warp, IdentityPoseIsBitExact) {
    const Image img = ramp_image(20, 30);
    const DepthMap depth = DepthMap::Constant(20, 30, 7.3);
    const Image warped = warp_image(img, depth, {50, 50, 14.5, 9.5, 30, 20}, Pose<double>::identity());
    EXPECT_TRUE(warped == img);
}

TEST(Warp, EverythingBehindCameraIsInvalid) {
    const Image img = ramp_image(20, 30);
    const DepthMap depth = DepthMap::Constant(20, 30, 5.0);
    const Image warped = warp_image(img, depth, {50, 50, 14.5, 9.5, 30, 20}, Pose<double>::translation_only({0, 0, -10}));
    EXPECT_FALSE(warped.valid.any());
}

TEST(Warp, DimensionMismatchIsContractViolation) {
    const Image img = ramp_image(20, 30);
    EXPECT_THROW(warp_image(img, DepthMap::Constant(20, 29, 5.0), {50, 50, 14.5, 9.5, 30, 20}, Pose<double>()),
                 ContractViolation);
}

TEST(Warp, NonPositiveDepthIsDomainError) {
    const Image img = ramp_image(20, 30);
    DepthMap depth = DepthMap::Constant(20, 30, 5.0);
    depth(3, 3) = 0;
    EXPECT_THROW(warp_image(img, depth, {50, 50, 14.5, 9.5, 30, 20}, Pose<double>()), DomainError);
}

TEST(Warp, ColorJacobianMatchesFiniteDifference) {
    Image img(24, 32);
    for (Eigen::Index y = 0; y < 24; ++y)
        for (Eigen::Index x = 0; x < 32; ++x)
            img.set_pixel(y, x, Rgb<double>(0.5 + 0.3 * std::sin(0.5 * x), 0.5 + 0.2 * std::cos(0.4 * y), 0.4));
    const Intrinsics<double> k{40, 40, 15.5, 11.5, 32, 24};
    const auto t = Pose<double>::from_euler({0.01, -0.02, 0.0}, {0.3, 0.05, 0.2});
    DepthMap depth(24, 32);
    for (Eigen::Index i = 0; i < depth.size(); ++i) depth(i) = 6.0 + 0.37 * double(i % 7);
    const auto grid = sample_grid(depth, k, t);
    const auto w = warp_image_with_jacobian(img, grid);
    const double h = 1e-6;
    int checked = 0;
    for (Eigen::Index y = 2; y < 22; y += 3) {
        for (Eigen::Index x = 2; x < 30; x += 3) {
            if (!w.image.valid(y, x)) continue;
            DepthMap dp = depth, dn = depth;
            dp(y, x) += h;
            dn(y, x) -= h;
            const Image ip = warp_image(img, dp, k, t), in = warp_image(img, dn, k, t);
            for (int c = 0; c < 3; ++c)
                EXPECT_NEAR(w.dcolor_ddepth[c](y, x), (ip.channel[c](y, x) - in.channel[c](y, x)) / (2 * h), 1e-6);
            ++checked;
        }
    }
    EXPECT_GT(checked, 20);
}

} // namespace
} // namespace motionloss
