// Copyright Contributors to the motionloss project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>

#include "motionloss/image.hpp"
#include "motionloss/temporal.hpp"

namespace motionloss {

inline constexpr double kSmoothnessWeight = 1e-3;

/// Named scalar loss terms of one evaluation.
struct LossTerms {
    double reproj = 0;   // mean error over the reliable region (not M)
    double consis = 0;   // mean |D_s - D_teacher| over M
    double smooth = 0;   // edge-aware smoothness, unweighted
    double ori = 0;      // reproj + consis + lambda_s * smooth
    double distil = 0;   // mean |D_s - D_td| over not-M
    double total = 0;    // w1 * ori + w2 * distil
    double lambda_s = kSmoothnessWeight;
    std::array<double, 2> weights = {1.0, 0.0};
};

/// Mean |D_s - D_teacher| over M; 0 when M is empty. The teacher is read-only.
double consistency_loss(const DepthMap &student, const DepthMap &teacher, const PixelMask &uncertain);

/// L_ori = reprojection over not-M + consistency over M + lambda_s * smoothness(student, img).
LossTerms original_loss(const ErrorMap &error, const DepthMap &student, const DepthMap &teacher,
                        const PixelMask &uncertain, const Image &img, double lambda_s = kSmoothnessWeight);

struct FusedTarget {
    DepthMap depth;
    PixelMask from_student;  // pixels where the student depth won
};

/// Per pixel, keeps the depth whose reconstruction error is lower; the teacher wins ties and
/// pixels where neither error is valid.
FusedTarget fuse_by_error(const DepthMap &teacher, const DepthMap &student, const ErrorMap &teacher_error,
                          const ErrorMap &student_error);

/// Evaluates the reconstruction error under the teacher and under the student depth and fuses
/// them with fuse_by_error.
FusedTarget fuse_target_depth(const DepthMap &teacher, const DepthMap &student, const ReprojectionInputs &in,
                              ReconstructionMode mode = ReconstructionMode::kTemporal);

/// Mean |D_s - D_td| over not-M; 0 when M covers everything.
double distillation_loss(const DepthMap &student, const DepthMap &target, const PixelMask &uncertain);

double total_loss(double original, double distillation, const std::array<double, 2> &weights);

} // namespace motionloss
