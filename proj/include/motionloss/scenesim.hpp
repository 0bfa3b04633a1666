// Copyright Contributors to the motionloss project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <map>
#include <vector>

#include "motionloss/geometry.hpp"
#include "motionloss/image.hpp"
#include "motionloss/instances.hpp"

namespace motionloss {

enum class BackgroundKind { kPlane, kRamp };

/// Background surface Z = depth + slope * Y in frame-t camera coordinates (Y points down).
/// kPlane forces slope = 0.
struct Background {
    BackgroundKind kind = BackgroundKind::kPlane;
    double depth = 30.0;
    double slope = 0.0;
    int texture = 0;

    double depth_at(double y) const { return kind == BackgroundKind::kPlane ? depth : depth + slope * y; }
};

/// Fronto-parallel textured rectangle moving with constant velocity.
struct Billboard {
    int class_id = 1;
    Eigen::Vector3d center = Eigen::Vector3d(0, 0, 10);  // at frame t, meters
    double width = 2.0;
    double height = 1.5;
    Eigen::Vector3d velocity = Eigen::Vector3d::Zero();  // meters / second
    int texture = 1;

    Eigen::Vector3d center_at(int frame_offset, double frame_interval) const {
        return center + velocity * (frame_offset * frame_interval);
    }
    bool is_moving() const { return velocity.squaredNorm() > 0; }
};

struct SceneConfig {
    std::uint64_t seed = 0;
    Intrinsics<double> intrinsics{110.0, 110.0, 63.5, 47.5, 128, 96};
    Background background;
    std::vector<Billboard> objects;
    Pose<double> ego_motion;  // camera pose at t+1 expressed in the frame-t camera
    double frame_interval = 0.1;

    void validate() const;
};

/// Smooth world-anchored color pattern: a sum of low-frequency sinusoids plus a few
/// low-amplitude mid-frequency components acting as texture noise.
class ProceduralTexture {
  public:
    /// `meters_per_pixel` is the footprint of one pixel at the surface's nominal depth; it keeps
    /// every wavelength at several pixels on screen.
    static ProceduralTexture generate(std::uint64_t seed, double meters_per_pixel);

    Rgb<double> operator()(double x, double y) const;

  private:
    struct Wave {
        Eigen::Vector2d frequency;  // radians per meter
        double phase = 0;
        Eigen::Vector3d amplitude;
    };
    Eigen::Vector3d base_;
    std::vector<Wave> waves_;
};

enum FrameIndex : int { kPrevFrame = 0, kCurrentFrame = 1, kNextFrame = 2 };

/// Frames t-1, t, t+1 with ground truth.
struct Triplet {
    Intrinsics<double> intrinsics;
    std::array<Image, 3> frames;
    std::array<DepthMap, 3> depth;
    Pose<double> to_prev;  // T_{t->t-1}
    Pose<double> to_next;  // T_{t->t+1}
    std::array<InstanceSet, 3> instances;
    std::map<int, Displacement> displacement;  // per object id, t-1 -> t+1 in frame-t pixels
    std::vector<Billboard> objects;            // object id i+1 is objects[i]
    double frame_interval = 0.1;

    const Image &prev() const { return frames[kPrevFrame]; }
    const Image &current() const { return frames[kCurrentFrame]; }
    const Image &next() const { return frames[kNextFrame]; }
};

Triplet render_triplet(const SceneConfig &cfg);

/// Signed displacement of the object's projected center between t-1 and t+1, seen from the
/// frame-t camera. Throws LookupError when the object is absent in t-1 or t+1.
Displacement gt_displacement(const Triplet &tri, int object_id);

/// Frame-t pixels covered by objects with non-zero velocity.
PixelMask moving_object_mask(const Triplet &tri);

/// Frame-t pixels whose surface point is visible (not occluded, inside the image) in frame t-1
/// (`frame = kPrevFrame`) or t+1, checked against the ground-truth depth of that frame.
PixelMask visible_in(const Triplet &tri, int frame);

/// Pixels at least `radius` away from the image border and from any depth discontinuity
/// (relative jump above 1%).
PixelMask interior_mask(const DepthMap &depth, int radius);

} // namespace motionloss
