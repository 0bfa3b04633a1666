// Copyright Contributors to the motionloss project
// SPDX-License-Identifier: Apache-2.0

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "motionloss/config.hpp"
#include "motionloss/costvolume.hpp"
#include "motionloss/harness.hpp"
#include "motionloss/io.hpp"
#include "motionloss/metrics.hpp"
#include "motionloss/optimizer.hpp"

namespace ml = motionloss;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitContract = 3;

struct Common {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::string loss_mode;
    std::string weight_mode;
};

void add_common(CLI::App *cmd, Common &c, bool modes) {
    cmd->add_option("--config", c.config, "YAML configuration file");
    cmd->add_option("--seed", c.seed, "Seed of the first scene (overrides the config)");
    cmd->add_option("--out", c.out, "Output directory (overrides the config)");
    if (modes) {
        cmd->add_option("--loss-mode", c.loss_mode, "baseline | temporal | distill | mal");
        cmd->add_option("--weight-mode", c.weight_mode, "sumup | mlra");
    }
}

ml::RunConfig resolve(const Common &c) {
    ml::RunConfig cfg = c.config.empty() ? ml::RunConfig{} : ml::load_run_config(c.config);
    if (c.seed) {
        cfg.seed = *c.seed;
        if (cfg.scene) cfg.scene->seed = *c.seed;
    }
    if (!c.out.empty()) cfg.output = c.out;
    if (!c.loss_mode.empty()) cfg.loss = ml::parse_loss_mode(c.loss_mode);
    if (!c.weight_mode.empty()) cfg.weights = ml::parse_weight_mode(c.weight_mode);
    cfg.validate();
    return cfg;
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

int cmd_simulate(const Common &c, const std::string &family) {
    ml::RunConfig cfg = resolve(c);
    if (!family.empty()) cfg.family = family == "static" ? ml::SceneFamily::kStatic : ml::SceneFamily::kDynamic;
    for (const auto &scene : ml::run_scenes(cfg)) {
        const ml::Triplet tri = ml::render_triplet(scene);
        const std::filesystem::path dir = cfg.output / ("scene_" + std::to_string(scene.seed));
        static const char *names[3] = {"prev", "current", "next"};
        for (int f = 0; f < 3; ++f) {
            ml::write_ppm(dir / (std::string("frame_") + names[f] + ".ppm"), tri.frames[f]);
            ml::write_depth(dir / (std::string("gt_depth_") + names[f] + ".pgm"), tri.depth[f]);
            ml::write_labels(dir / (std::string("labels_") + names[f] + ".pgm"),
                             ml::label_image(tri.instances[f], tri.intrinsics.height, tri.intrinsics.width));
        }
        ml::write_text(dir / "scene.yaml", ml::scene_config_yaml(scene));
        std::ostringstream disp;
        disp << "object_id,dh,dv\n";
        for (const auto &[id, d] : tri.displacement) disp << id << ',' << fmt(d.dh) << ',' << fmt(d.dv) << '\n';
        ml::write_text(dir / "displacement.csv", disp.str());
        std::cout << dir.string() << '\n';
    }
    return 0;
}

int cmd_loss(const Common &c, const std::string &depth_path, const std::string &teacher_path) {
    const ml::RunConfig cfg = resolve(c);
    const ml::Triplet tri = ml::render_triplet(ml::run_scenes(cfg).front());
    const ml::LossConfig loss = ml::loss_config(cfg.loss, cfg.weights);
    const auto &p = cfg.pipeline;
    const ml::DepthMap depth = depth_path.empty() ? tri.depth[ml::kCurrentFrame] : ml::read_depth(depth_path);
    ml::require_same_shape(depth, tri.current(), "loss: depth file");
    const ml::DepthMap cv = ml::argmin_depth(
        ml::build_cost_volume(tri.prev(), tri.current(), tri.intrinsics, tri.to_prev, p.planes), p.planes);
    ml::DepthMap teacher;
    if (!teacher_path.empty()) {
        teacher = ml::read_depth(teacher_path);
    } else {
        ml::OptimConfig tc = p.teacher;
        tc.loss = loss;
        teacher = ml::teacher_depth(tri, tc);
    }
    const ml::PixelMask uncertain = ml::uncertainty_mask(cv, teacher);
    const ml::LossModel model(tri, loss, ml::Supervision{teacher, uncertain});
    const std::array<double, 2> weights = {0.5, 0.5};
    const auto ev = model.evaluate(depth, weights);
    std::ostringstream os;
    os << "term,value\n";
    const auto &t = ev.terms;
    os << "reproj," << fmt(t.reproj) << "\nconsis," << fmt(t.consis) << "\nsmooth," << fmt(t.smooth) << "\nori,"
       << fmt(t.ori) << "\ndistil," << fmt(t.distil) << "\ntotal," << fmt(t.total) << "\nw1," << fmt(t.weights[0])
       << "\nw2," << fmt(t.weights[1]) << "\nlambda_s," << fmt(t.lambda_s) << "\nuncertain_pixels,"
       << uncertain.count() << '\n';
    std::cout << os.str();
    if (!c.out.empty()) {
        ml::write_text(cfg.output / "loss.csv", os.str());
        ml::write_labels(cfg.output / "uncertainty_mask.pgm", uncertain.cast<int>());
        ml::write_labels(cfg.output / "selection.pgm", (ev.reconstruction.selection.index + 1));
        const ml::ErrorMap &err = ev.reconstruction.selection.error;
        ml::write_error_map(cfg.output / "reprojection_error.pgm", err.value, err.valid);
        if (ev.reconstruction.hints)
            ml::write_text(cfg.output / "correspondences.csv", ml::correspondence_csv(*ev.reconstruction.hints));
    }
    return 0;
}

int cmd_optimize(const Common &c) {
    const ml::RunConfig cfg = resolve(c);
    ml::run_scenario(cfg);
    ml::write_text(cfg.output / "run.yaml", ml::run_config_yaml(cfg));
    std::cout << (cfg.output / "metrics.csv").string() << '\n';
    return 0;
}

int cmd_eval(const Common &c, const std::string &pred_path, const std::string &gt_path, const std::string &mask_path,
             bool no_scaling) {
    if (pred_path.empty() || gt_path.empty()) throw ml::ConfigError("eval needs --pred and --gt", 0, "pred");
    ml::PixelMask pred_valid, gt_valid;
    const ml::DepthMap pred = ml::read_depth(pred_path, &pred_valid);
    const ml::DepthMap gt = ml::read_depth(gt_path, &gt_valid);
    ml::require_same_shape(pred, gt, "eval: depth files");
    ml::PixelMask valid = pred_valid && gt_valid;
    if (!mask_path.empty()) valid = valid && (ml::read_labels(mask_path) > 0);
    const auto r = ml::depth_metrics(pred, gt, valid, no_scaling ? ml::Scaling::kNone : ml::Scaling::kMedian);
    std::ostringstream os;
    os << "pixels,scale,abs_rel,sq_rel,rmse,rmse_log,a1,a2,a3\n"
       << r.pixels << ',' << fmt(r.scale) << ',' << fmt(r.abs_rel) << ',' << fmt(r.sq_rel) << ',' << fmt(r.rmse) << ','
       << fmt(r.rmse_log) << ',' << fmt(r.a1) << ',' << fmt(r.a2) << ',' << fmt(r.a3) << '\n';
    std::cout << os.str();
    if (!c.out.empty()) ml::write_text(std::filesystem::path(c.out) / "eval.csv", os.str());
    return 0;
}

int cmd_gradcheck(const Common &c, int samples, const std::string &depth_path) {
    const ml::RunConfig cfg = resolve(c);
    const ml::Triplet tri = ml::render_triplet(ml::run_scenes(cfg).front());
    const ml::LossConfig loss = ml::loss_config(cfg.loss, cfg.weights);
    const ml::DepthMap &gt = tri.depth[ml::kCurrentFrame];
    const ml::DepthMap depth = depth_path.empty() ? ml::perturbed_depth(gt, cfg.seed) : ml::read_depth(depth_path);
    ml::Supervision sup;
    if (loss.distillation) {
        sup.teacher = ml::DepthMap(gt * 0.95);
        sup.uncertain = ml::moving_object_mask(tri);
    }
    const ml::LossModel model(tri, loss, sup);
    const auto check = ml::gradient_check(model, depth, {0.5, 0.5}, cfg.pipeline.student.fd_step, samples, cfg.seed);
    std::ostringstream os;
    os << "v,u,analytic,numeric,agrees\n";
    for (const auto &s : check.samples)
        os << s.pixel.v << ',' << s.pixel.u << ',' << fmt(s.analytic) << ',' << fmt(s.numeric) << ',' << s.agrees
           << '\n';
    if (!c.out.empty()) ml::write_text(cfg.output / "gradcheck.csv", os.str());
    std::printf("samples %zu rejected %d agreement %.4f\n", check.samples.size(), check.rejected, check.agreement());
    return check.agreement() >= 0.95 ? 0 : 1;
}

int cmd_ablate(const Common &c) {
    const ml::RunConfig cfg = resolve(c);
    std::cout << ml::run_ablation(cfg);
    ml::write_text(cfg.output / "run.yaml", ml::run_config_yaml(cfg));
    return 0;
}

} // namespace

int main(int argc, char **argv) {
    ml::tune_allocator();
    CLI::App app{"Motion-aware loss engine on synthetic scenes"};
    app.require_subcommand(1);

    Common common;
    std::string family, depth_path, teacher_path, pred_path, gt_path, mask_path;
    bool no_scaling = false;
    int samples = 200;

    auto *simulate = app.add_subcommand("simulate", "Render scene triplets with ground truth");
    add_common(simulate, common, false);
    simulate->add_option("--family", family, "static | dynamic")->check(CLI::IsMember({"static", "dynamic"}));

    auto *loss = app.add_subcommand("loss", "Evaluate every loss term on one scene");
    add_common(loss, common, true);
    loss->add_option("--depth", depth_path, "Depth PGM to evaluate (default: ground truth)");
    loss->add_option("--teacher", teacher_path, "Teacher depth PGM (default: optimized)");

    auto *optimize = app.add_subcommand("optimize", "Run the depth optimization pipeline");
    add_common(optimize, common, true);

    auto *eval = app.add_subcommand("eval", "Depth metrics from depth files");
    add_common(eval, common, false);
    eval->add_option("--pred", pred_path, "Predicted depth PGM");
    eval->add_option("--gt", gt_path, "Ground-truth depth PGM");
    eval->add_option("--mask", mask_path, "Label PGM restricting evaluation to non-zero pixels");
    eval->add_flag("--no-scaling", no_scaling, "Skip median scaling");

    auto *gradcheck = app.add_subcommand("gradcheck", "Analytic vs finite-difference gradient");
    add_common(gradcheck, common, true);
    gradcheck->add_option("--samples", samples, "Smooth-point pixels to check")->check(CLI::PositiveNumber);
    gradcheck->add_option("--depth", depth_path, "Depth PGM to linearize at (default: ground truth x U[1.05, 1.15] per pixel)");

    auto *ablate = app.add_subcommand("ablate", "Six-variant ablation matrix");
    add_common(ablate, common, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        if (*simulate) return cmd_simulate(common, family);
        if (*loss) return cmd_loss(common, depth_path, teacher_path);
        if (*optimize) return cmd_optimize(common);
        if (*eval) return cmd_eval(common, pred_path, gt_path, mask_path, no_scaling);
        if (*gradcheck) return cmd_gradcheck(common, samples, depth_path);
        if (*ablate) return cmd_ablate(common);
    } catch (const ml::ConfigError &e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const ml::ContractViolation &e) {
        std::cerr << "contract violation: " << e.what() << '\n';
        return kExitContract;
    } catch (const ml::DomainError &e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitContract;
    } catch (const ml::LookupError &e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitContract;
    }
    return 0;
}
