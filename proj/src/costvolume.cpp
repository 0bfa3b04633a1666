// Copyright Contributors to the motionloss project
// SPDX-License-Identifier: Apache-2.0

#include "motionloss/costvolume.hpp"

#include <algorithm>

namespace motionloss {

void DepthPlanes::validate() const {
    if (count < 1) throw ContractViolation("depth planes: need at least one plane");
    if (!(d_min > 0 && (count == 1 || d_min < d_max))) throw ContractViolation("depth planes: need 0 < d_min < d_max");
}

std::vector<double> DepthPlanes::values() const {
    validate();
    std::vector<double> out(count);
    for (int i = 0; i < count; ++i) out[i] = depth(i);
    return out;
}

CostVolume build_cost_volume(const Image &prev, const Image &current, const Intrinsics<double> &k,
                             const Pose<double> &to_prev, const DepthPlanes &planes) {
    require_same_shape(prev, current, "build_cost_volume");
    require(current.rows() == k.height && current.cols() == k.width, "build_cost_volume: intrinsics/image size");
    planes.validate();
    const Eigen::Index rows = current.rows(), cols = current.cols();
    CostVolume cv;
    for (int p = 0; p < planes.count; ++p) {
        const Image warped = resample(prev, sample_grid(planes.depth(p), k, to_prev));
        Field<double> absdiff = Field<double>::Zero(rows, cols);
        for (int c = 0; c < 3; ++c) absdiff += (warped.channel[c] - current.channel[c]).abs();
        const PixelMask sample_ok = warped.valid && current.valid;

        Field<double> cost = Field<double>::Zero(rows, cols);
        PixelMask valid = PixelMask::Constant(rows, cols, true);
        for (Eigen::Index y = 0; y < rows; ++y) {
            for (Eigen::Index x = 0; x < cols; ++x) {
                const Eigen::Index y0 = std::max<Eigen::Index>(y - 1, 0), y1 = std::min<Eigen::Index>(y + 1, rows - 1);
                const Eigen::Index x0 = std::max<Eigen::Index>(x - 1, 0), x1 = std::min<Eigen::Index>(x + 1, cols - 1);
                const auto ok = sample_ok.block(y0, x0, y1 - y0 + 1, x1 - x0 + 1);
                if (!ok.all()) {
                    valid(y, x) = false;
                    continue;
                }
                cost(y, x) = absdiff.block(y0, x0, y1 - y0 + 1, x1 - x0 + 1).sum();
            }
        }
        cv.cost.push_back(std::move(cost));
        cv.valid.push_back(std::move(valid));
    }
    return cv;
}

DepthMap argmin_depth(const CostVolume &cv, const DepthPlanes &planes) {
    planes.validate();
    require(cv.planes() == planes.count, "argmin_depth: plane count mismatch");
    const Eigen::Index rows = cv.rows(), cols = cv.cols();
    DepthMap depth = DepthMap::Zero(rows, cols);
    PixelMask resolved = PixelMask::Constant(rows, cols, false);
    for (Eigen::Index y = 0; y < rows; ++y) {
        for (Eigen::Index x = 0; x < cols; ++x) {
            int best = -1;
            for (int p = 0; p < cv.planes(); ++p) {
                if (!cv.valid[p](y, x)) continue;
                // Strict comparison keeps the nearer (lower index) plane on ties.
                if (best < 0 || cv.cost[p](y, x) < cv.cost[best](y, x)) best = p;
            }
            if (best >= 0) {
                depth(y, x) = planes.depth(best);
                resolved(y, x) = true;
            }
        }
    }
    if (!resolved.any()) throw ContractViolation("argmin_depth: no valid plane anywhere");

    std::vector<double> neighbors;
    while (!resolved.all()) {
        PixelMask next = resolved;
        DepthMap filled = depth;
        for (Eigen::Index y = 0; y < rows; ++y) {
            for (Eigen::Index x = 0; x < cols; ++x) {
                if (resolved(y, x)) continue;
                neighbors.clear();
                for (int dy = -1; dy <= 1; ++dy) {
                    for (int dx = -1; dx <= 1; ++dx) {
                        const Eigen::Index yy = y + dy, xx = x + dx;
                        if ((dy == 0 && dx == 0) || yy < 0 || xx < 0 || yy >= rows || xx >= cols) continue;
                        if (resolved(yy, xx)) neighbors.push_back(depth(yy, xx));
                    }
                }
                if (neighbors.empty()) continue;
                std::sort(neighbors.begin(), neighbors.end());
                const std::size_t n = neighbors.size();
                filled(y, x) = n % 2 == 1 ? neighbors[n / 2] : 0.5 * (neighbors[n / 2 - 1] + neighbors[n / 2]);
                next(y, x) = true;
            }
        }
        depth = std::move(filled);
        resolved = std::move(next);
    }
    return depth;
}

PixelMask uncertainty_mask(const DepthMap &cost_volume_depth, const DepthMap &teacher_depth) {
    require_same_shape(cost_volume_depth, teacher_depth, "uncertainty_mask");
    validate_depth(cost_volume_depth, "uncertainty_mask");
    validate_depth(teacher_depth, "uncertainty_mask");
    const auto &cv = cost_volume_depth;
    const auto &t = teacher_depth;
    return ((cv - t) / t).max((t - cv) / cv) > 1.0;
}

} // namespace motionloss
