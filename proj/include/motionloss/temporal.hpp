// Copyright Contributors to the motionloss project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>

#include <array>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "motionloss/geometry.hpp"
#include "motionloss/image.hpp"
#include "motionloss/instances.hpp"
#include "motionloss/photometric.hpp"

namespace motionloss {

struct Triplet;

/// Raised when every boundary of an axis is truncated in one of the two frames.
class DisplacementUnavailable : public std::runtime_error {
  public:
    explicit DisplacementUnavailable(char axis)
        : std::runtime_error(std::string("displacement unavailable on axis ") + axis), axis_(axis) {}
    char axis() const { return axis_; }

  private:
    char axis_;
};

/// Minimum-cost assignment (Kuhn-Munkres with potentials) of rows to columns of a rectangular
/// cost matrix with rows <= cols. Returns the column assigned to each row.
std::vector<int> solve_assignment(const Eigen::MatrixXd &cost);

struct Correspondence {
    int prev = -1;  // index into the t-1 set
    int next = -1;  // index into the t+1 set
    double cost = 0;
};

/// Pair cost of instances that cannot be matched. Pairs with IoU = 0 cost the same, so the
/// assignment maximizes the summed IoU over admissible same-class pairs.
inline constexpr double kNoMatchCost = 1.0;

/// One-to-one matching with cost 1 - IoU; cross-class and non-overlapping pairs are dropped.
std::vector<Correspondence> match_instances(const InstanceSet &a, const InstanceSet &b);

/// Box-level displacement from t-1 to t+1: per axis the larger of the two boundary shifts, using
/// only boundaries intact in both frames; the sign is that of the shift achieving the maximum.
Displacement boundary_displacement(const Instance &prev, const Instance &next);

/// Transports instance masks through a warp grid (bilinear, thresholded at 0.5).
InstanceSet warp_instances(const InstanceSet &set, const SampleGrid &grid);

enum class WarpSource { kFromPrev, kFromNext };

/// How each pixel of a rectified image was produced.
struct RectifyPlan {
    enum Kind : std::int8_t { kKeep = 0, kShifted = 1, kDonor = 2, kInvalid = 3 };
    Field<std::int8_t> kind;
    Field<double> src_u, src_v;  // bilinear source position for kShifted pixels
};

struct Rectified {
    Image image;
    InstanceSet moved;
    RectifyPlan plan;
};

/// Moves every instance of a warped image to its estimated frame-t position: by -disp/2 when the
/// image was warped from t+1 and by +disp/2 when warped from t-1. Pixels the objects vacate are
/// taken from `donor` (the symmetric warped image) at the same coordinates; pixels left without
/// a source are invalid.
Rectified rectify_warped(const Image &img, std::span<const Instance> warped_instances,
                         std::span<const Displacement> displacement, WarpSource direction, const Image &donor);

/// Four-candidate reconstruction of `target` from the warped and rectified images.
Selection temporal_reconstruct(const Image &warped_prev, const Image &warped_next, const Image &rectified_prev,
                               const Image &rectified_next, const Image &target);

enum class ReconstructionMode {
    kBaseline,  // pixel selection over the two warped neighbors
    kTemporal,  // adds the two motion-rectified images
};

/// Everything needed to reconstruct frame t from its neighbors under a depth hypothesis.
struct ReprojectionInputs {
    const Image *prev = nullptr;
    const Image *current = nullptr;
    const Image *next = nullptr;
    Intrinsics<double> intrinsics;
    Pose<double> to_prev;
    Pose<double> to_next;
    const InstanceSet *instances_prev = nullptr;
    const InstanceSet *instances_next = nullptr;

    static ReprojectionInputs from_triplet(const Triplet &tri);
};

struct TemporalHints {
    InstanceSet warped_prev, warped_next;
    std::vector<Correspondence> matches;
    std::vector<Displacement> displacement;  // one per match, or skipped matches omitted
    std::vector<int> used;                   // indices into `matches` that produced a displacement
    Rectified rectified_prev, rectified_next;
};

struct Reconstruction {
    SampleGrid grid_prev, grid_next;
    WarpWithJacobian warp_prev, warp_next;
    std::optional<TemporalHints> hints;
    std::vector<ErrorMap> errors;  // warped prev, warped next, [rectified prev, rectified next]
    Selection selection;

    const Image &candidate(int i) const;
};

/// Warps both neighbors with `depth`, applies temporal hints when requested and selects the
/// lowest-error candidate per pixel.
Reconstruction reconstruct(const ReprojectionInputs &in, const DepthMap &depth, ReconstructionMode mode);

/// Correspondence table of a reconstruction as CSV (debug dump).
std::string correspondence_csv(const TemporalHints &hints);

} // namespace motionloss
