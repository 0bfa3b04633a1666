// Copyright Contributors to the motionloss project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <span>
#include <vector>

#include "motionloss/image.hpp"

namespace motionloss {

/// SSIM/L1 blend weight and SSIM stabilizers.
inline constexpr double kSsimWeight = 0.85;
inline constexpr double kSsimC1 = 0.01 * 0.01;
inline constexpr double kSsimC2 = 0.03 * 0.03;

/// pe = a (1 - SSIM) / 2 + (1 - a) |a - b|, averaged over channels, SSIM over 3x3 windows with
/// reflection padding. A pixel is invalid when any pixel of its window is invalid in either input.
ErrorMap photometric_error(const Image &a, const Image &b);

/// Vector-Jacobian product of photometric_error w.r.t. its first argument: given dL/dpe per
/// pixel, returns dL/da per channel. `b` is treated as a constant.
std::array<Field<double>, 3> photometric_error_vjp(const Image &a, const Image &b, const Field<double> &adjoint);

struct Candidate {
    const Image *image = nullptr;
    const ErrorMap *error = nullptr;
};

/// Outcome of per-pixel selection among candidate reconstructions.
struct Selection {
    Image image;
    ErrorMap error;
    Field<int> index;  // selected candidate, -1 where every candidate is invalid
};

/// Per pixel, keeps the candidate with the smallest valid error (first one on ties).
Selection select_pixels(std::span<const Candidate> candidates);

/// Edge-aware smoothness of mean-normalized inverse depth against image gradients, using
/// forward differences (last column for x, last row for y excluded).
double smoothness_loss(const DepthMap &depth, const Image &img);

/// d smoothness_loss / d depth.
Field<double> smoothness_loss_gradient(const DepthMap &depth, const Image &img);

/// Mean error over pixels where `mask` is set and the error is valid; 0 when there are none.
double reprojection_loss(const ErrorMap &error, const PixelMask &mask);

} // namespace motionloss
