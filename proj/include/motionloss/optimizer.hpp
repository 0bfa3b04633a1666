// Copyright Contributors to the motionloss project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "motionloss/balance.hpp"
#include "motionloss/distill.hpp"
#include "motionloss/scenesim.hpp"
#include "motionloss/temporal.hpp"

namespace motionloss {

enum class GradientMode { kAnalytic, kFiniteDifference };
enum class WeightMode { kSumUp, kMlra };
enum class StepMethod { kAdam, kGradientDescent };

/// Which terms enter the objective.
struct LossConfig {
    ReconstructionMode reconstruction = ReconstructionMode::kBaseline;
    bool distillation = false;
    WeightMode weights = WeightMode::kMlra;  // only used with distillation; otherwise L = L_ori
    double lambda_s = kSmoothnessWeight;
};

struct OptimConfig {
    double step_size = 0.05;  // meters per Adam step; raw multiplier for gradient descent
    int max_iterations = 500;
    GradientMode gradient = GradientMode::kAnalytic;
    double fd_step = 1e-3;
    double d_min = 0.5;
    double d_max = 100.0;
    LossConfig loss;
    StepMethod method = StepMethod::kAdam;
    double adam_epsilon = 1e-8;  // in units of the pixel-count-scaled gradient
    int mlra_window = 100;
    int divergence_patience = 10;
    double teacher_init_depth = 20.0;

    void validate() const;
};

/// Signals that stay fixed while a depth map is optimized.
struct Supervision {
    std::optional<DepthMap> teacher;  // required for consistency / distillation
    PixelMask uncertain;              // M; empty means "nowhere"
};

struct PixelIndex {
    Eigen::Index v = 0;
    Eigen::Index u = 0;
};

/// Discrete choices made by one loss evaluation. Two evaluations with equal structure lie on
/// the same smooth piece of the loss.
struct LossStructure {
    Field<int> selection;
    std::vector<PixelMask> candidate_valid;
    std::vector<Field<std::int8_t>> l1_sign;  // sign(candidate - target) per candidate and channel
    std::vector<Field<std::int8_t>> plan_kind;
    std::vector<Displacement> displacement;
    std::array<Field<int>, 4> cells;  // bilinear cell of every warp sample (u, v per neighbor)
    PixelMask fused_from_student;
    Field<std::int8_t> teacher_sign, target_sign;
    Field<std::int8_t> smooth_sign_x, smooth_sign_y;

    bool operator==(const LossStructure &other) const;
};

/// Objective over one depth map: reprojection (two- or four-candidate), consistency,
/// smoothness and distillation terms with their analytic gradient.
class LossModel {
  public:
    LossModel(ReprojectionInputs inputs, LossConfig cfg, Supervision supervision);
    LossModel(const Triplet &tri, LossConfig cfg, Supervision supervision);

    struct Evaluation {
        LossTerms terms;
        Reconstruction reconstruction;
        std::optional<FusedTarget> target;
    };

    Evaluation evaluate(const DepthMap &depth, const std::array<double, 2> &weights) const;

    /// Gradient of terms.total w.r.t. depth with every selection frozen at `eval`.
    Field<double> gradient(const DepthMap &depth, const Evaluation &eval) const;

    LossStructure structure(const DepthMap &depth, const Evaluation &eval) const;

    const LossConfig &config() const { return cfg_; }
    const ReprojectionInputs &inputs() const { return in_; }
    /// Weights actually applied: (1, 0) without distillation.
    std::array<double, 2> effective_weights(const std::array<double, 2> &weights) const;

  private:
    ReprojectionInputs in_;
    LossConfig cfg_;
    Supervision sup_;
    PixelMask uncertain_;
    std::optional<ErrorMap> teacher_error_;
};

/// Loss gradient w.r.t. depth. Analytic mode returns the full field; finite-difference mode
/// evaluates central differences with step `cfg.fd_step` at `pixels` (all pixels when empty),
/// leaving the other entries zero. Components pushing a bound-clamped depth out of
/// [d_min, d_max] are zeroed.
Field<double> loss_gradient(const LossModel &model, const DepthMap &depth, const std::array<double, 2> &weights,
                            const OptimConfig &cfg, std::span<const PixelIndex> pixels = {});

struct GradientSample {
    PixelIndex pixel;
    double analytic = 0;
    double numeric = 0;
    bool agrees = false;
};

struct GradientCheck {
    std::vector<GradientSample> samples;  // smooth-point pixels only
    int rejected = 0;                     // candidates whose +-h probe changed the loss structure

    double agreement() const;
};

inline constexpr double kGradientTolerance = 1e-3;

/// Compares analytic and central-difference derivatives at up to `count` random pixels where the
/// selected reconstruction error is valid, skipping pixels whose +-h probe changes any discrete
/// choice of the loss. Agreement: |a - f| <= tol * max(|a|, |f|, 1e-10).
GradientCheck gradient_check(const LossModel &model, const DepthMap &depth, const std::array<double, 2> &weights,
                             double fd_step, int count, std::uint64_t seed, double tol = kGradientTolerance);

struct TraceRow {
    int iteration = 0;
    LossTerms terms;
    double lambda = 0;
    double abs_rel = 0;  // against ground truth, over all pixels, no scaling
};

struct OptimTrace {
    std::vector<TraceRow> rows;
    bool diverged = false;
    std::string diagnostic;
};

struct OptimResult {
    DepthMap depth;
    OptimTrace trace;
    WeightState weights;
};

/// Projected first-order descent of the configured objective, clamping depth to the bounds every
/// step and rebalancing the two loss weights once per window when MLRA is enabled.
OptimResult optimize_depth(const DepthMap &init, const Triplet &tri, const OptimConfig &cfg, WeightState weights,
                           const Supervision &supervision = {});

/// Matching-free estimate: descent from a constant depth using reprojection and smoothness only.
DepthMap teacher_depth(const Triplet &tri, const OptimConfig &cfg);

} // namespace motionloss
