// Copyright Contributors to the motionloss project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "motionloss/image.hpp"

namespace motionloss {

inline constexpr double kDepthCap = 80.0;

struct MetricsReport {
    double abs_rel = 0;
    double sq_rel = 0;
    double rmse = 0;
    double rmse_log = 0;
    double a1 = 0;  // delta < 1.25
    double a2 = 0;  // delta < 1.25^2
    double a3 = 0;  // delta < 1.25^3
    long pixels = 0;
    double scale = 1;  // median ratio applied to the prediction
};

enum class Scaling { kMedian, kNone };

/// Standard depth metrics over `valid`, after median scaling (unless disabled) and capping both
/// maps at 80 m.
MetricsReport depth_metrics(const DepthMap &pred, const DepthMap &gt, const PixelMask &valid,
                            Scaling scaling = Scaling::kMedian);

} // namespace motionloss
