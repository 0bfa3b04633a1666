// Copyright Contributors to the motionloss project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "motionloss/geometry.hpp"
#include "motionloss/image.hpp"

namespace motionloss {

/// Depth hypotheses uniformly spaced in depth on [d_min, d_max].
struct DepthPlanes {
    int count = 32;
    double d_min = 2.0;
    double d_max = 40.0;

    void validate() const;
    double depth(int i) const { return count == 1 ? d_min : d_min + (d_max - d_min) * double(i) / double(count - 1); }
    std::vector<double> values() const;
};

/// Matching cost per pixel and plane.
struct CostVolume {
    std::vector<Field<double>> cost;  // one H x W slice per plane
    std::vector<PixelMask> valid;

    int planes() const { return int(cost.size()); }
    Eigen::Index rows() const { return cost.empty() ? 0 : cost.front().rows(); }
    Eigen::Index cols() const { return cost.empty() ? 0 : cost.front().cols(); }
};

/// Plane sweep of I_prev into frame t: the cost of a plane is the sum of absolute differences over
/// the 3x3 patch (clipped to the image) and all channels. A slice entry is invalid when any patch
/// sample leaves the source image.
CostVolume build_cost_volume(const Image &prev, const Image &current, const Intrinsics<double> &k,
                             const Pose<double> &to_prev, const DepthPlanes &planes);

/// Depth of the cheapest plane per pixel, nearer plane on ties. Pixels without a valid plane take
/// the median of already-resolved 8-neighbors, growing inward until every pixel is resolved.
DepthMap argmin_depth(const CostVolume &cv, const DepthPlanes &planes);

/// True where max((d_cv - d_t) / d_t, (d_t - d_cv) / d_cv) > 1.
PixelMask uncertainty_mask(const DepthMap &cost_volume_depth, const DepthMap &teacher_depth);

} // namespace motionloss
