// Copyright Contributors to the motionloss project
// SPDX-License-Identifier: Apache-2.0

#include "motionloss/harness.hpp"

#include <cstdio>
#include <random>
#include <sstream>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

#include "motionloss/io.hpp"

namespace motionloss {

namespace {

constexpr std::uint64_t kFamilySalt = 0x2545f4914f6cdd1dULL;

class Draw {
  public:
    explicit Draw(std::uint64_t seed) : rng_(seed ^ kFamilySalt) {}
    double uniform(double lo, double hi) { return lo + (hi - lo) * unit_(rng_); }
    bool coin() { return unit_(rng_) < 0.5; }

  private:
    std::mt19937_64 rng_;
    std::uniform_real_distribution<double> unit_{0.0, 1.0};
};

} // namespace

SceneConfig static_scene(std::uint64_t seed) {
    Draw draw(seed);
    SceneConfig cfg;
    cfg.seed = seed;
    cfg.background.depth = draw.uniform(14.0, 22.0);
    if (draw.coin()) {
        cfg.background.kind = BackgroundKind::kRamp;
        cfg.background.slope = draw.uniform(-2.0, 2.0);
    }
    const int parked = draw.coin() ? 1 : 2;
    for (int i = 0; i < parked; ++i) {
        Billboard b;
        b.class_id = 1 + i;
        b.center = Eigen::Vector3d(i == 0 ? draw.uniform(-3.0, -1.0) : draw.uniform(1.0, 3.0),
                                   draw.uniform(-0.5, 0.5), draw.uniform(6.0, 10.0) + 1.5 * i);
        b.width = draw.uniform(1.5, 2.5);
        b.height = draw.uniform(1.2, 2.0);
        b.texture = 1 + i;
        cfg.objects.push_back(b);
    }
    cfg.ego_motion = Pose<double>::translation_only(
        Eigen::Vector3d(draw.uniform(0.3, 0.5) * (draw.coin() ? 1 : -1), 0.0, draw.uniform(0.3, 0.6)));
    return cfg;
}

SceneConfig dynamic_scene(std::uint64_t seed) {
    Draw draw(seed);
    SceneConfig cfg;
    cfg.seed = seed;
    cfg.background.depth = draw.uniform(25.0, 35.0);
    Billboard b;
    b.center = Eigen::Vector3d(draw.uniform(-1.5, 1.5), draw.uniform(-0.3, 0.3), draw.uniform(8.0, 13.0));
    b.width = draw.uniform(2.5, 3.5);
    b.height = draw.uniform(1.6, 2.2);
    const double speed = draw.uniform(5.0, 10.0);
    b.velocity = Eigen::Vector3d(draw.coin() ? -speed : speed, 0.0, 0.0);
    cfg.objects.push_back(b);
    cfg.ego_motion = Pose<double>::translation_only(Eigen::Vector3d(0.0, 0.0, 0.8));
    return cfg;
}

SceneConfig family_scene(SceneFamily family, std::uint64_t seed) {
    return family == SceneFamily::kStatic ? static_scene(seed) : dynamic_scene(seed);
}

std::string_view to_string(LossMode mode) {
    switch (mode) {
    case LossMode::kBaseline:
        return "baseline";
    case LossMode::kTemporal:
        return "temporal";
    case LossMode::kDistill:
        return "distill";
    case LossMode::kMal:
        return "mal";
    }
    return "?";
}

std::string_view to_string(WeightMode mode) { return mode == WeightMode::kSumUp ? "sumup" : "mlra"; }

LossMode parse_loss_mode(std::string_view text) {
    for (LossMode m : {LossMode::kBaseline, LossMode::kTemporal, LossMode::kDistill, LossMode::kMal})
        if (text == to_string(m)) return m;
    throw ConfigError("unknown loss mode '" + std::string(text) + "' (baseline|temporal|distill|mal)", 0,
                      "loss_mode");
}

WeightMode parse_weight_mode(std::string_view text) {
    for (WeightMode m : {WeightMode::kSumUp, WeightMode::kMlra})
        if (text == to_string(m)) return m;
    throw ConfigError("unknown weight mode '" + std::string(text) + "' (sumup|mlra)", 0, "weight_mode");
}

LossConfig loss_config(LossMode mode, WeightMode weights) {
    LossConfig cfg;
    cfg.reconstruction = mode == LossMode::kTemporal || mode == LossMode::kMal ? ReconstructionMode::kTemporal
                                                                               : ReconstructionMode::kBaseline;
    cfg.distillation = mode == LossMode::kDistill || mode == LossMode::kMal;
    cfg.weights = weights;
    return cfg;
}

PipelineConfig::PipelineConfig() {
    teacher.step_size = 0.2;
    teacher.max_iterations = 300;
    student.step_size = 0.05;
    student.max_iterations = 300;
}

void PipelineConfig::validate() const {
    planes.validate();
    teacher.validate();
    student.validate();
}

PipelineResult run_pipeline(const Triplet &tri, const LossConfig &loss, const PipelineConfig &cfg) {
    cfg.validate();
    const DepthMap cv = argmin_depth(build_cost_volume(tri.prev(), tri.current(), tri.intrinsics, tri.to_prev, cfg.planes),
                                     cfg.planes);
    OptimConfig teacher_cfg = cfg.teacher;
    teacher_cfg.loss = loss;
    return run_pipeline(tri, loss, cfg, cv, teacher_depth(tri, teacher_cfg));
}

PipelineResult run_pipeline(const Triplet &tri, const LossConfig &loss, const PipelineConfig &cfg,
                            const DepthMap &cost_volume_depth, const DepthMap &teacher) {
    cfg.validate();
    PipelineResult out;
    out.cost_volume_depth = cost_volume_depth;
    out.teacher = teacher;
    out.uncertain = uncertainty_mask(cost_volume_depth, teacher);
    OptimConfig student_cfg = cfg.student;
    student_cfg.loss = loss;
    const DepthMap init = cost_volume_depth.max(student_cfg.d_min).min(student_cfg.d_max);
    out.student = optimize_depth(init, tri, student_cfg, WeightState{}, Supervision{teacher, out.uncertain});
    return out;
}

RegionMetrics region_metrics(const DepthMap &pred, const Triplet &tri) {
    const DepthMap &gt = tri.depth[kCurrentFrame];
    const PixelMask interior = interior_mask(gt, 2);
    const PixelMask moving = moving_object_mask(tri);
    RegionMetrics m;
    m.all = depth_metrics(pred, gt, interior);
    if (moving.any()) m.object = depth_metrics(pred, gt, moving, Scaling::kNone);
    m.static_region = depth_metrics(pred, gt, interior && !moving, Scaling::kNone);
    return m;
}

void RunConfig::validate() const {
    pipeline.validate();
    if (scenes < 1) throw ConfigError("must be at least 1", 0, "scenes");
    if (scene) scene->validate();
}

std::vector<SceneConfig> run_scenes(const RunConfig &cfg) {
    std::vector<SceneConfig> out;
    if (cfg.scene) return {*cfg.scene};
    for (int i = 0; i < cfg.scenes; ++i) out.push_back(family_scene(cfg.family, cfg.seed + std::uint64_t(i)));
    return out;
}

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

void append_metrics(std::ostringstream &os, const std::string &scene, const std::string &variant,
                    const std::string &region, const MetricsReport &r) {
    os << scene << ',' << variant << ',' << region << ',' << r.pixels << ',' << fmt(r.scale) << ',' << fmt(r.abs_rel)
       << ',' << fmt(r.sq_rel) << ',' << fmt(r.rmse) << ',' << fmt(r.rmse_log) << ',' << fmt(r.a1) << ','
       << fmt(r.a2) << ',' << fmt(r.a3) << '\n';
}

std::string scene_id(const SceneConfig &scene) { return "scene_" + std::to_string(scene.seed); }

} // namespace

std::string metrics_rows(const std::string &scene, const std::string &variant, const RegionMetrics &m) {
    std::ostringstream os;
    append_metrics(os, scene, variant, "all", m.all);
    if (m.object) append_metrics(os, scene, variant, "object", *m.object);
    append_metrics(os, scene, variant, "static", m.static_region);
    return os.str();
}

std::string trace_csv(const OptimTrace &trace) {
    std::ostringstream os;
    os << kTraceHeader << '\n';
    for (const auto &r : trace.rows) {
        const auto &t = r.terms;
        os << r.iteration << ',' << fmt(t.total) << ',' << fmt(t.ori) << ',' << fmt(t.reproj) << ',' << fmt(t.consis)
           << ',' << fmt(t.smooth) << ',' << fmt(t.distil) << ',' << fmt(t.weights[0]) << ',' << fmt(t.weights[1])
           << ',' << fmt(r.lambda) << ',' << fmt(r.abs_rel) << '\n';
    }
    return os.str();
}

namespace {

void dump_scene(const std::filesystem::path &dir, const Triplet &tri) {
    static const char *names[3] = {"prev", "current", "next"};
    for (int f = 0; f < 3; ++f) {
        write_ppm(dir / (std::string("frame_") + names[f] + ".ppm"), tri.frames[f]);
        write_depth(dir / (std::string("gt_depth_") + names[f] + ".pgm"), tri.depth[f]);
        write_labels(dir / (std::string("labels_") + names[f] + ".pgm"),
                     label_image(tri.instances[f], tri.intrinsics.height, tri.intrinsics.width));
    }
}

} // namespace

void run_scenario(const RunConfig &cfg) {
    cfg.validate();
    const LossConfig loss = loss_config(cfg.loss, cfg.weights);
    std::string variant(to_string(cfg.loss));
    if (loss.distillation) variant += "_" + std::string(to_string(cfg.weights));
    std::ostringstream metrics;
    metrics << kMetricsHeader << '\n';
    for (const SceneConfig &scene : run_scenes(cfg)) {
        const Triplet tri = render_triplet(scene);
        const PipelineResult r = run_pipeline(tri, loss, cfg.pipeline);
        const std::string id = scene_id(scene);
        const std::filesystem::path dir = cfg.output / id;
        if (cfg.dump_images) {
            dump_scene(dir, tri);
            write_depth(dir / "cost_volume_depth.pgm", r.cost_volume_depth);
            write_depth(dir / "teacher_depth.pgm", r.teacher);
            write_depth(dir / ("depth_" + variant + ".pgm"), r.student.depth);
            write_labels(dir / "uncertainty_mask.pgm", r.uncertain.cast<int>());
        }
        write_text(dir / ("trace_" + variant + ".csv"), trace_csv(r.student.trace));
        metrics << metrics_rows(id, variant, region_metrics(r.student.depth, tri));
        if (r.student.trace.diverged) std::fprintf(stderr, "%s: %s\n", id.c_str(), r.student.trace.diagnostic.c_str());
    }
    write_text(cfg.output / "metrics.csv", metrics.str());
}

const std::vector<AblationRow> &ablation_rows() {
    static const std::vector<AblationRow> rows = {
        {"baseline", LossMode::kBaseline, WeightMode::kSumUp},
        {"temporal", LossMode::kTemporal, WeightMode::kSumUp},
        {"distill_sumup", LossMode::kDistill, WeightMode::kSumUp},
        {"distill_mlra", LossMode::kDistill, WeightMode::kMlra},
        {"mal_sumup", LossMode::kMal, WeightMode::kSumUp},
        {"mal_mlra", LossMode::kMal, WeightMode::kMlra},
    };
    return rows;
}

std::string run_ablation(const RunConfig &cfg) {
    cfg.validate();
    std::ostringstream csv;
    csv << kMetricsHeader << '\n';
    for (const SceneConfig &scene : run_scenes(cfg)) {
        const Triplet tri = render_triplet(scene);
        const auto &p = cfg.pipeline;
        const DepthMap cv = argmin_depth(build_cost_volume(tri.prev(), tri.current(), tri.intrinsics, tri.to_prev, p.planes),
                                         p.planes);
        std::optional<DepthMap> teachers[2];
        const std::string id = scene_id(scene);
        for (const auto &row : ablation_rows()) {
            const LossConfig loss = loss_config(row.loss, row.weights);
            auto &teacher = teachers[loss.reconstruction == ReconstructionMode::kTemporal ? 1 : 0];
            if (!teacher) {
                OptimConfig teacher_cfg = p.teacher;
                teacher_cfg.loss = loss;
                teacher = teacher_depth(tri, teacher_cfg);
            }
            const PipelineResult r = run_pipeline(tri, loss, p, cv, *teacher);
            csv << metrics_rows(id, row.name, region_metrics(r.student.depth, tri));
            write_text(cfg.output / id / ("trace_" + row.name + ".csv"), trace_csv(r.student.trace));
        }
    }
    write_text(cfg.output / "ablation.csv", csv.str());
    return csv.str();
}

DepthMap perturbed_depth(const DepthMap &gt, std::uint64_t seed, double lo, double hi) {
    Draw draw(seed);
    DepthMap out(gt.rows(), gt.cols());
    for (Eigen::Index i = 0; i < gt.size(); ++i) out(i) = gt(i) * draw.uniform(lo, hi);
    return out;
}

void tune_allocator() {
#if defined(__GLIBC__)
    mallopt(M_MMAP_THRESHOLD, 256 << 20);
    mallopt(M_TRIM_THRESHOLD, 256 << 20);
#endif
}

} // namespace motionloss
