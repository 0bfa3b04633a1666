// Copyright Contributors to the motionloss project
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include "motionloss/harness.hpp"
#include "motionloss/scenesim.hpp"

namespace motionloss {
namespace {

SceneConfig one_billboard(const Eigen::Vector3d &center, const Eigen::Vector3d &velocity) {
    SceneConfig cfg;
    cfg.seed = 17;
    cfg.background.depth = 30;
    Billboard b;
    b.center = center;
    b.velocity = velocity;
    cfg.objects.push_back(b);
    return cfg;
}

double masked_mean(const Field<double> &f, const PixelMask &m) {
    const long n = m.count();
    return n == 0 ? 0.0 : m.select(f, 0.0).sum() / double(n);
}

Field<double> abs_error(const Image &a, const Image &b) {
    Field<double> e = Field<double>::Zero(a.rows(), a.cols());
    for (int c = 0; c < 3; ++c) e += (a.channel[c] - b.channel[c]).abs() / 3.0;
    return e;
}

TEST(Scene, StaticWorldGivesIdenticalFrames) {
    SceneConfig cfg = one_billboard({0.5, 0.2, 9}, Eigen::Vector3d::Zero());
    const Triplet tri = render_triplet(cfg);
    EXPECT_TRUE(tri.frames[0] == tri.frames[1]);
    EXPECT_TRUE(tri.frames[1] == tri.frames[2]);
    EXPECT_TRUE((tri.depth[0] == tri.depth[1]).all());
}

TEST(Scene, SameSeedIsBitIdentical) {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        const Triplet a = render_triplet(dynamic_scene(seed));
        const Triplet b = render_triplet(dynamic_scene(seed));
        for (int f = 0; f < 3; ++f) {
            EXPECT_TRUE(a.frames[f] == b.frames[f]);
            EXPECT_TRUE((a.depth[f] == b.depth[f]).all());
        }
    }
}

TEST(Scene, DifferentSeedsDiffer) {
    EXPECT_FALSE(render_triplet(static_scene(1)).frames[1] == render_triplet(static_scene(2)).frames[1]);
}

TEST(Scene, LateralDisplacementMatchesPinholeFormula) {
    for (double vx : {-6.0, 3.0, 8.0}) {
        const double d = 12.0;
        const Triplet tri = render_triplet(one_billboard({0.0, 0.0, d}, {vx, 0.0, 0.0}));
        const Displacement disp = gt_displacement(tri, 1);
        EXPECT_NEAR(disp.dh, 110.0 * vx * 0.2 / d, 1e-9);
        EXPECT_NEAR(disp.dv, 0.0, 1e-12);
    }
}

TEST(Scene, StaticObjectHasZeroDisplacement) {
    const Triplet tri = render_triplet(one_billboard({1.0, 0.5, 9}, Eigen::Vector3d::Zero()));
    EXPECT_EQ(gt_displacement(tri, 1).dh, 0.0);
    EXPECT_EQ(gt_displacement(tri, 1).dv, 0.0);
}

TEST(Scene, AxialMotionAtPrincipalPointHasZeroDisplacement) {
    SceneConfig cfg = one_billboard({0.0, 0.0, 10}, {0.0, 0.0, 5.0});
    const Triplet tri = render_triplet(cfg);
    EXPECT_NEAR(gt_displacement(tri, 1).dh, 0.0, 1e-12);
    EXPECT_NEAR(gt_displacement(tri, 1).dv, 0.0, 1e-12);
}

TEST(Scene, ObjectLeavingTheViewHasNoDisplacement) {
    SceneConfig cfg = one_billboard({5.0, 0.0, 8}, {60.0, 0.0, 0.0});
    const Triplet tri = render_triplet(cfg);
    EXPECT_THROW(gt_displacement(tri, 1), LookupError);
    EXPECT_THROW(gt_displacement(tri, 7), LookupError);
}

TEST(Scene, OverlapAtIdenticalDepthIsContractViolation) {
    SceneConfig cfg = one_billboard({0.0, 0.0, 10}, Eigen::Vector3d::Zero());
    Billboard twin = cfg.objects.front();
    twin.center.x() = 0.5;
    cfg.objects.push_back(twin);
    EXPECT_THROW(render_triplet(cfg), ContractViolation);
}

TEST(Scene, ValidateRejectsBadConfigs) {
    SceneConfig behind = one_billboard({0, 0, 40}, Eigen::Vector3d::Zero());
    EXPECT_THROW(behind.validate(), ContractViolation);
    SceneConfig dt = one_billboard({0, 0, 10}, Eigen::Vector3d::Zero());
    dt.frame_interval = 0;
    EXPECT_THROW(dt.validate(), ContractViolation);
}

TEST(Scene, DepthMatchesPlacement) {
    const Triplet tri = render_triplet(one_billboard({0.0, 0.0, 9.0}, Eigen::Vector3d::Zero()));
    const auto &d = tri.depth[kCurrentFrame];
    EXPECT_DOUBLE_EQ(d(47, 63), 9.0);  // principal point hits the billboard
    EXPECT_DOUBLE_EQ(d(2, 2), 30.0);
    const PixelMask obj = tri.instances[kCurrentFrame].front().mask;
    EXPECT_TRUE((obj.select(d, 9.0) == 9.0).all());
}

TEST(Scene, MasksAreExactSilhouettes) {
    const Triplet tri = render_triplet(one_billboard({0.0, 0.0, 10.0}, Eigen::Vector3d::Zero()));
    const Instance &inst = tri.instances[kCurrentFrame].front();
    // Billboard 2 m x 1.5 m at 10 m with f = 110: |u - 63.5| <= 11 and |v - 47.5| <= 8.25.
    for (int v = 0; v < 96; ++v)
        for (int u = 0; u < 128; ++u)
            ASSERT_EQ(inst.mask(v, u), std::abs(u - 63.5) <= 11.0 && std::abs(v - 47.5) <= 8.25) << u << "," << v;
}

TEST(Scene, StaticWarpReconstructsCurrentFrame) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const Triplet tri = render_triplet(static_scene(seed));
        const DepthMap &gt = tri.depth[kCurrentFrame];
        const PixelMask interior = interior_mask(gt, 2);
        for (int f : {kPrevFrame, kNextFrame}) {
            const Image w = warp_image(tri.frames[f], gt, tri.intrinsics, f == kPrevFrame ? tri.to_prev : tri.to_next);
            const PixelMask m = interior && w.valid && visible_in(tri, f);
            ASSERT_GT(m.count(), 5000);
            EXPECT_LT(masked_mean(abs_error(w, tri.current()), m), 1e-2) << "seed " << seed;
        }
    }
}

TEST(Scene, MovingObjectBreaksTheStaticWarp) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const Triplet tri = render_triplet(dynamic_scene(seed));
        const DepthMap &gt = tri.depth[kCurrentFrame];
        const Image w = warp_image(tri.prev(), gt, tri.intrinsics, tri.to_prev);
        const PixelMask interior = interior_mask(gt, 2) && w.valid;
        const PixelMask moving = moving_object_mask(tri);
        const Field<double> err = abs_error(w, tri.current());
        const double object_err = masked_mean(err, interior && moving);
        const double static_err = masked_mean(err, interior && !moving && visible_in(tri, kPrevFrame));
        EXPECT_GE(object_err, 5.0 * static_err) << "seed " << seed;
    }
}

TEST(Scene, InteriorMaskExcludesBorderAndEdges) {
    const Triplet tri = render_triplet(one_billboard({0.0, 0.0, 10.0}, Eigen::Vector3d::Zero()));
    const PixelMask m = interior_mask(tri.depth[kCurrentFrame], 2);
    EXPECT_FALSE(m(0, 50));
    EXPECT_FALSE(m(1, 50));
    EXPECT_TRUE(m(2, 50));
    EXPECT_FALSE(m(47, 52));  // billboard edge at u = 52.5
    EXPECT_TRUE(m(47, 63));
}

} // namespace
} // namespace motionloss
