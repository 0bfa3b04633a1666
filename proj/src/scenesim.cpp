// Copyright Contributors to the motionloss project
// SPDX-License-Identifier: Apache-2.0

#include "motionloss/scenesim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

namespace motionloss {

void SceneConfig::validate() const {
    intrinsics.validate();
    if (!(frame_interval > 0)) throw ContractViolation("scene: frame_interval must be positive");
    if (!(background.depth > 0)) throw ContractViolation("scene: background depth must be positive");
    if (background.kind == BackgroundKind::kPlane && background.slope != 0)
        throw ContractViolation("scene: a plane background has no slope");
    for (const auto &obj : objects) {
        if (!(obj.width > 0 && obj.height > 0)) throw ContractViolation("scene: billboard extent must be positive");
        for (int k = -1; k <= 1; ++k) {
            const Eigen::Vector3d c = obj.center_at(k, frame_interval);
            if (!(c.z() > 0)) throw ContractViolation("scene: billboard depth must be positive");
            if (!(c.z() < background.depth_at(c.y())))
                throw ContractViolation("scene: billboard must lie in front of the background");
        }
    }
}

ProceduralTexture ProceduralTexture::generate(std::uint64_t seed, double meters_per_pixel) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    ProceduralTexture tex;
    for (int c = 0; c < 3; ++c) tex.base_[c] = 0.35 + 0.3 * unit(rng);

    const auto add_waves = [&](int count, double min_px, double max_px, double amplitude) {
        for (int i = 0; i < count; ++i) {
            const double wavelength_px = min_px + (max_px - min_px) * unit(rng);
            const double angle = std::numbers::pi * unit(rng);
            const double omega = 2.0 * std::numbers::pi / (wavelength_px * meters_per_pixel);
            Wave w;
            w.frequency = omega * Eigen::Vector2d(std::cos(angle), std::sin(angle));
            w.phase = 2.0 * std::numbers::pi * unit(rng);
            for (int c = 0; c < 3; ++c) w.amplitude[c] = amplitude * (0.5 + 0.5 * unit(rng));
            tex.waves_.push_back(w);
        }
    };
    add_waves(4, 10.0, 24.0, 0.07);
    add_waves(3, 6.0, 10.0, 0.025);
    return tex;
}

Rgb<double> ProceduralTexture::operator()(double x, double y) const {
    Eigen::Vector3d value = base_;
    for (const auto &w : waves_) value += w.amplitude * std::sin(w.frequency.x() * x + w.frequency.y() * y + w.phase);
    return value.cwiseMax(0.0).cwiseMin(1.0);
}

namespace {

constexpr std::uint64_t kBackgroundSalt = 0x9e3779b97f4a7c15ULL;
constexpr std::uint64_t kObjectSalt = 0xbf58476d1ce4e5b9ULL;

struct FrameRender {
    Image image;
    DepthMap depth;
    Field<int> label;  // 0 background, i+1 for object i
};

FrameRender render_frame(const SceneConfig &cfg, const Pose<double> &camera, int frame_offset,
                         const ProceduralTexture &background_tex, const std::vector<ProceduralTexture> &object_tex) {
    const auto &k = cfg.intrinsics;
    FrameRender out{Image(k.height, k.width), DepthMap(k.height, k.width), Field<int>::Zero(k.height, k.width)};
    const Eigen::Vector3d origin = camera.translation();
    const Eigen::Vector3d normal(0.0, -(cfg.background.kind == BackgroundKind::kPlane ? 0.0 : cfg.background.slope), 1.0);

    std::vector<Eigen::Vector3d> centers;
    for (const auto &obj : cfg.objects) centers.push_back(obj.center_at(frame_offset, cfg.frame_interval));

    for (int y = 0; y < k.height; ++y) {
        for (int x = 0; x < k.width; ++x) {
            // Camera-frame ray with unit z; the ray parameter is the camera depth.
            const Eigen::Vector3d dir = camera.rotation() * k.ray(x, y);
            const double denom = normal.dot(dir);
            const double bg_lambda = denom != 0 ? (cfg.background.depth - normal.dot(origin)) / denom : -1.0;
            if (!(bg_lambda > 0)) throw ContractViolation("scene: background not visible at every pixel");

            double best = bg_lambda;
            int label = 0;
            Rgb<double> color;
            {
                const Eigen::Vector3d p = origin + bg_lambda * dir;
                color = background_tex(p.x(), p.y());
            }
            for (std::size_t i = 0; i < cfg.objects.size(); ++i) {
                const auto &obj = cfg.objects[i];
                if (dir.z() == 0) continue;
                const double lambda = (centers[i].z() - origin.z()) / dir.z();
                if (!(lambda > 0)) continue;
                const Eigen::Vector3d p = origin + lambda * dir;
                const double lx = p.x() - centers[i].x();
                const double ly = p.y() - centers[i].y();
                if (std::abs(lx) > 0.5 * obj.width || std::abs(ly) > 0.5 * obj.height) continue;
                if (label != 0 && std::abs(lambda - best) < 1e-9)
                    throw ContractViolation("scene: overlapping objects at identical depth");
                if (lambda < best) {
                    best = lambda;
                    label = int(i) + 1;
                    color = object_tex[i](lx, ly);
                }
            }
            out.image.set_pixel(y, x, color);
            out.depth(y, x) = best;
            out.label(y, x) = label;
        }
    }
    return out;
}

InstanceSet instances_from_labels(const Field<int> &label, const std::vector<Billboard> &objects) {
    InstanceSet set;
    for (std::size_t i = 0; i < objects.size(); ++i) {
        PixelMask mask = label == int(i) + 1;
        if (!mask.any()) continue;
        set.push_back(Instance::from_mask(int(i) + 1, objects[i].class_id, std::move(mask)));
    }
    return set;
}

bool has_instance(const InstanceSet &set, int id) {
    return std::any_of(set.begin(), set.end(), [id](const Instance &inst) { return inst.id == id; });
}

} // namespace

Triplet render_triplet(const SceneConfig &cfg) {
    cfg.validate();
    const auto &k = cfg.intrinsics;

    const double bg_mpp = cfg.background.depth / k.fx;
    const auto background_tex =
        ProceduralTexture::generate(cfg.seed ^ (kBackgroundSalt * std::uint64_t(cfg.background.texture + 1)), bg_mpp);
    std::vector<ProceduralTexture> object_tex;
    for (const auto &obj : cfg.objects) {
        object_tex.push_back(ProceduralTexture::generate(
            cfg.seed ^ (kObjectSalt * std::uint64_t(obj.texture + 1)), obj.center.z() / k.fx));
    }

    const Pose<double> cam_next = cfg.ego_motion;
    const Pose<double> cam_prev = cfg.ego_motion.inverse();

    Triplet tri;
    tri.intrinsics = k;
    tri.objects = cfg.objects;
    tri.frame_interval = cfg.frame_interval;
    tri.to_prev = cam_prev.inverse();
    tri.to_next = cam_next.inverse();

    const std::array<Pose<double>, 3> cameras = {cam_prev, Pose<double>::identity(), cam_next};
    for (int f = 0; f < 3; ++f) {
        auto r = render_frame(cfg, cameras[f], f - 1, background_tex, object_tex);
        tri.frames[f] = std::move(r.image);
        tri.depth[f] = std::move(r.depth);
        tri.instances[f] = instances_from_labels(r.label, cfg.objects);
    }

    for (std::size_t i = 0; i < cfg.objects.size(); ++i) {
        const int id = int(i) + 1;
        if (!has_instance(tri.instances[kPrevFrame], id) || !has_instance(tri.instances[kNextFrame], id)) continue;
        const Eigen::Vector3d a = cfg.objects[i].center_at(-1, cfg.frame_interval);
        const Eigen::Vector3d b = cfg.objects[i].center_at(1, cfg.frame_interval);
        const Eigen::Vector3d pa = k.matrix() * (a / a.z());
        const Eigen::Vector3d pb = k.matrix() * (b / b.z());
        tri.displacement[id] = {pb.x() - pa.x(), pb.y() - pa.y()};
    }
    return tri;
}

Displacement gt_displacement(const Triplet &tri, int object_id) {
    const auto it = tri.displacement.find(object_id);
    if (it == tri.displacement.end())
        throw LookupError("gt_displacement: object " + std::to_string(object_id) + " not visible in both t-1 and t+1");
    return it->second;
}

PixelMask moving_object_mask(const Triplet &tri) {
    const auto &k = tri.intrinsics;
    PixelMask mask = PixelMask::Constant(k.height, k.width, false);
    for (const auto &inst : tri.instances[kCurrentFrame]) {
        if (inst.id >= 1 && std::size_t(inst.id) <= tri.objects.size() && tri.objects[inst.id - 1].is_moving())
            mask = mask || inst.mask;
    }
    return mask;
}

PixelMask visible_in(const Triplet &tri, int frame) {
    require(frame == kPrevFrame || frame == kNextFrame, "visible_in: frame must be t-1 or t+1");
    const auto &k = tri.intrinsics;
    const Pose<double> &t = frame == kPrevFrame ? tri.to_prev : tri.to_next;
    const DepthMap &src_depth = tri.depth[frame];
    const DepthMap &depth = tri.depth[kCurrentFrame];
    PixelMask visible = PixelMask::Constant(k.height, k.width, false);
    for (int y = 0; y < k.height; ++y) {
        for (int x = 0; x < k.width; ++x) {
            const auto r = reproject<double>({double(x), double(y), true}, depth(y, x), k, t);
            if (!r.pixel.valid) continue;
            const auto s = detail::stencil(r.pixel.u, r.pixel.v, k.height, k.width);
            bool ok = true;
            for (const auto yy : {s.y0, s.y1})
                for (const auto xx : {s.x0, s.x1})
                    ok = ok && std::abs(src_depth(yy, xx) - r.depth) <= 1e-2 * r.depth;
            visible(y, x) = ok;
        }
    }
    return visible;
}

PixelMask interior_mask(const DepthMap &depth, int radius) {
    const Eigen::Index rows = depth.rows(), cols = depth.cols();
    PixelMask edge = PixelMask::Constant(rows, cols, false);
    for (Eigen::Index y = 0; y < rows; ++y) {
        for (Eigen::Index x = 0; x < cols; ++x) {
            if (x + 1 < cols && std::abs(depth(y, x + 1) - depth(y, x)) > 0.01 * std::min(depth(y, x + 1), depth(y, x)))
                edge(y, x) = edge(y, x + 1) = true;
            if (y + 1 < rows && std::abs(depth(y + 1, x) - depth(y, x)) > 0.01 * std::min(depth(y + 1, x), depth(y, x)))
                edge(y, x) = edge(y + 1, x) = true;
        }
    }
    PixelMask out = PixelMask::Constant(rows, cols, false);
    for (Eigen::Index y = radius; y < rows - radius; ++y) {
        for (Eigen::Index x = radius; x < cols - radius; ++x) {
            out(y, x) = !edge.block(y - radius, x - radius, 2 * radius + 1, 2 * radius + 1).any();
        }
    }
    return out;
}

} // namespace motionloss
