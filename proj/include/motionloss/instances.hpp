// Copyright Contributors to the motionloss project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "motionloss/image.hpp"

namespace motionloss {

/// Inclusive pixel boundaries of a mask.
struct BoundingBox {
    int left = 0;
    int right = 0;
    int top = 0;
    int bottom = 0;

    double center_u() const { return 0.5 * (left + right); }
    double center_v() const { return 0.5 * (top + bottom); }
};

/// A labeled object silhouette. `box` is the tight box of `mask`; a side is truncated when it
/// touches the image border.
struct Instance {
    int id = 0;
    int class_id = 0;
    PixelMask mask;
    BoundingBox box;
    bool truncated_left = false;
    bool truncated_right = false;
    bool truncated_top = false;
    bool truncated_bottom = false;

    /// Builds an instance and derives its box and truncation flags. Throws on an empty mask.
    static Instance from_mask(int id, int class_id, PixelMask mask);

    long area() const { return mask.count(); }
};

using InstanceSet = std::vector<Instance>;

/// Signed pixel displacement of an object over the t-1 -> t+1 interval.
struct Displacement {
    double dh = 0;
    double dv = 0;
};

/// Intersection over union of two masks of equal shape; 0 when both are empty.
double mask_iou(const PixelMask &a, const PixelMask &b);

} // namespace motionloss
