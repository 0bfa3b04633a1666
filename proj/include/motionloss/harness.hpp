// Copyright Contributors to the motionloss project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "motionloss/costvolume.hpp"
#include "motionloss/metrics.hpp"
#include "motionloss/optimizer.hpp"
#include "motionloss/scenesim.hpp"

namespace motionloss {

enum class SceneFamily { kStatic, kDynamic };

/// Static family: textured background (plane or ramp), up to two parked billboards, sideways and
/// forward ego motion.
SceneConfig static_scene(std::uint64_t seed);

/// Dynamic family: plane background 25-35 m, one billboard at 8-13 m crossing at 5-10 m/s,
/// forward ego motion of 0.8 m per frame.
SceneConfig dynamic_scene(std::uint64_t seed);

SceneConfig family_scene(SceneFamily family, std::uint64_t seed);

enum class LossMode { kBaseline, kTemporal, kDistill, kMal };

std::string_view to_string(LossMode mode);
std::string_view to_string(WeightMode mode);
LossMode parse_loss_mode(std::string_view text);
WeightMode parse_weight_mode(std::string_view text);

LossConfig loss_config(LossMode mode, WeightMode weights);

/// Teacher / cost volume / student settings shared by every run of a scenario.
struct PipelineConfig {
    DepthPlanes planes;
    OptimConfig teacher;
    OptimConfig student;

    PipelineConfig();
    void validate() const;
};

struct PipelineResult {
    DepthMap cost_volume_depth;
    DepthMap teacher;
    PixelMask uncertain;
    OptimResult student;
};

/// Cost-volume argmin from (t-1, t), teacher from a constant init, uncertainty mask, then the
/// student from the cost-volume depth. The teacher uses the loss's reconstruction mode.
PipelineResult run_pipeline(const Triplet &tri, const LossConfig &loss, const PipelineConfig &cfg);

/// Same pipeline with a precomputed teacher.
PipelineResult run_pipeline(const Triplet &tri, const LossConfig &loss, const PipelineConfig &cfg,
                            const DepthMap &cost_volume_depth, const DepthMap &teacher);

/// Metrics over all interior pixels (median scaled), and unscaled metrics over the moving-object
/// pixels and the static interior.
struct RegionMetrics {
    MetricsReport all;
    std::optional<MetricsReport> object;
    MetricsReport static_region;
};

RegionMetrics region_metrics(const DepthMap &pred, const Triplet &tri);

struct RunConfig {
    std::optional<SceneConfig> scene;  // explicit scene; otherwise the seeded family
    SceneFamily family = SceneFamily::kDynamic;
    std::uint64_t seed = 0;
    int scenes = 1;
    LossMode loss = LossMode::kMal;
    WeightMode weights = WeightMode::kMlra;
    PipelineConfig pipeline;
    std::filesystem::path output = "out";
    bool dump_images = true;

    void validate() const;
};

/// Scene configs of a run: the explicit scene, or `scenes` family members seeded seed, seed+1, ...
std::vector<SceneConfig> run_scenes(const RunConfig &cfg);

inline constexpr std::string_view kMetricsHeader =
    "scene,variant,region,pixels,scale,abs_rel,sq_rel,rmse,rmse_log,a1,a2,a3";
inline constexpr std::string_view kTraceHeader =
    "iteration,total,ori,reproj,consis,smooth,distil,w1,w2,lambda,abs_rel";

std::string metrics_rows(const std::string &scene, const std::string &variant, const RegionMetrics &m);
std::string trace_csv(const OptimTrace &trace);

/// Renders every scene, runs the configured variant and writes per-scene directories with
/// frames, depths, masks and trace.csv, plus metrics.csv at the output root.
void run_scenario(const RunConfig &cfg);

struct AblationRow {
    std::string name;
    LossMode loss;
    WeightMode weights;
};

/// Baseline, +temporal, +distillation (Sum Up, MLRA), +MAL (Sum Up, MLRA).
const std::vector<AblationRow> &ablation_rows();

/// Six variants per scene; writes ablation.csv at the output root and returns its contents.
std::string run_ablation(const RunConfig &cfg);

/// Ground truth scaled per pixel by an independent factor in [lo, hi]; a generic linearization
/// point with no exactly equal neighbors.
DepthMap perturbed_depth(const DepthMap &gt, std::uint64_t seed, double lo = 1.05, double hi = 1.15);

/// Raises glibc's mmap threshold so that image-sized temporaries are recycled instead of mapped
/// and unmapped on every allocation. No effect elsewhere.
void tune_allocator();

} // namespace motionloss
