// Copyright Contributors to the motionloss project
// SPDX-License-Identifier: Apache-2.0

#include "motionloss/distill.hpp"

namespace motionloss {

namespace {

double masked_mean_abs(const DepthMap &a, const DepthMap &b, const PixelMask &mask) {
    const long count = mask.count();
    if (count == 0) return 0.0;
    return mask.select((a - b).abs(), 0.0).sum() / double(count);
}

} // namespace

double consistency_loss(const DepthMap &student, const DepthMap &teacher, const PixelMask &uncertain) {
    require_same_shape(student, teacher, "consistency_loss");
    require_same_shape(student, uncertain, "consistency_loss mask");
    return masked_mean_abs(student, teacher, uncertain);
}

LossTerms original_loss(const ErrorMap &error, const DepthMap &student, const DepthMap &teacher,
                        const PixelMask &uncertain, const Image &img, double lambda_s) {
    require_same_shape(error, student, "original_loss");
    LossTerms t;
    t.lambda_s = lambda_s;
    t.reproj = reprojection_loss(error, !uncertain);
    t.consis = consistency_loss(student, teacher, uncertain);
    t.smooth = smoothness_loss(student, img);
    t.ori = t.reproj + t.consis + lambda_s * t.smooth;
    t.total = t.ori;
    return t;
}

FusedTarget fuse_by_error(const DepthMap &teacher, const DepthMap &student, const ErrorMap &teacher_error,
                          const ErrorMap &student_error) {
    require_same_shape(teacher, student, "fuse_target_depth");
    require_same_shape(teacher, teacher_error, "fuse_target_depth teacher error");
    require_same_shape(teacher, student_error, "fuse_target_depth student error");
    const PixelMask student_wins =
        student_error.valid && (!teacher_error.valid || student_error.value < teacher_error.value);
    return {student_wins.select(student, teacher), student_wins};
}

FusedTarget fuse_target_depth(const DepthMap &teacher, const DepthMap &student, const ReprojectionInputs &in,
                              ReconstructionMode mode) {
    validate_depth(teacher, "fuse_target_depth");
    validate_depth(student, "fuse_target_depth");
    const Reconstruction with_teacher = reconstruct(in, teacher, mode);
    const Reconstruction with_student = reconstruct(in, student, mode);
    return fuse_by_error(teacher, student, with_teacher.selection.error, with_student.selection.error);
}

double distillation_loss(const DepthMap &student, const DepthMap &target, const PixelMask &uncertain) {
    require_same_shape(student, target, "distillation_loss");
    require_same_shape(student, uncertain, "distillation_loss mask");
    return masked_mean_abs(student, target, !uncertain);
}

double total_loss(double original, double distillation, const std::array<double, 2> &weights) {
    if (!(weights[0] >= 0 && weights[1] >= 0)) throw ContractViolation("total_loss: weights must be non-negative");
    return weights[0] * original + weights[1] * distillation;
}

} // namespace motionloss
