// Copyright Contributors to the motionloss project
// SPDX-License-Identifier: Apache-2.0

#include "motionloss/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "motionloss/errors.hpp"

namespace motionloss {

namespace {

double median(std::vector<double> v) {
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + mid, v.end());
    if (v.size() % 2 == 1) return v[mid];
    const double hi = v[mid];
    const double lo = *std::max_element(v.begin(), v.begin() + mid);
    return 0.5 * (lo + hi);
}

} // namespace

MetricsReport depth_metrics(const DepthMap &pred, const DepthMap &gt, const PixelMask &valid, Scaling scaling) {
    require_same_shape(pred, gt, "depth_metrics");
    require_same_shape(pred, valid, "depth_metrics mask");
    std::vector<double> p, g;
    for (Eigen::Index y = 0; y < pred.rows(); ++y) {
        for (Eigen::Index x = 0; x < pred.cols(); ++x) {
            if (!valid(y, x)) continue;
            if (!(pred(y, x) > 0) || !(gt(y, x) > 0))
                throw ContractViolation("depth_metrics: non-positive depth on a valid pixel");
            p.push_back(pred(y, x));
            g.push_back(gt(y, x));
        }
    }
    if (p.empty()) throw ContractViolation("depth_metrics: no valid pixels");

    MetricsReport r;
    r.pixels = long(p.size());
    if (scaling == Scaling::kMedian) r.scale = median(g) / median(p);
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double pi = std::min(p[i] * r.scale, kDepthCap);
        const double gi = std::min(g[i], kDepthCap);
        const double diff = pi - gi;
        const double ratio = std::max(pi / gi, gi / pi);
        r.abs_rel += std::abs(diff) / gi;
        r.sq_rel += diff * diff / gi;
        r.rmse += diff * diff;
        const double dl = std::log(pi) - std::log(gi);
        r.rmse_log += dl * dl;
        r.a1 += ratio < 1.25;
        r.a2 += ratio < 1.25 * 1.25;
        r.a3 += ratio < 1.25 * 1.25 * 1.25;
    }
    const double n = double(p.size());
    r.abs_rel /= n;
    r.sq_rel /= n;
    r.rmse = std::sqrt(r.rmse / n);
    r.rmse_log = std::sqrt(r.rmse_log / n);
    r.a1 /= n;
    r.a2 /= n;
    r.a3 /= n;
    return r;
}

} // namespace motionloss
