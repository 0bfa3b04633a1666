// Copyright Contributors to the motionloss project
// SPDX-License-Identifier: Apache-2.0

#include "motionloss/temporal.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "motionloss/scenesim.hpp"

namespace motionloss {

Instance Instance::from_mask(int id, int class_id, PixelMask mask) {
    Instance inst;
    inst.id = id;
    inst.class_id = class_id;
    const Eigen::Index rows = mask.rows(), cols = mask.cols();
    int left = int(cols), right = -1, top = int(rows), bottom = -1;
    for (Eigen::Index y = 0; y < rows; ++y) {
        for (Eigen::Index x = 0; x < cols; ++x) {
            if (!mask(y, x)) continue;
            left = std::min(left, int(x));
            right = std::max(right, int(x));
            top = std::min(top, int(y));
            bottom = std::max(bottom, int(y));
        }
    }
    if (right < 0) throw ContractViolation("instance: empty mask");
    inst.box = {left, right, top, bottom};
    inst.truncated_left = left == 0;
    inst.truncated_right = right == int(cols) - 1;
    inst.truncated_top = top == 0;
    inst.truncated_bottom = bottom == int(rows) - 1;
    inst.mask = std::move(mask);
    return inst;
}

double mask_iou(const PixelMask &a, const PixelMask &b) {
    require_same_shape(a, b, "mask_iou");
    const long uni = (a || b).count();
    if (uni == 0) return 0.0;
    return double((a && b).count()) / double(uni);
}

std::vector<int> solve_assignment(const Eigen::MatrixXd &cost) {
    const int n = int(cost.rows()), m = int(cost.cols());
    require(n <= m, "solve_assignment: more rows than columns");
    if (n == 0) return {};
    constexpr double kInf = std::numeric_limits<double>::infinity();
    // 1-based potentials formulation; column 0 is a virtual start.
    std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0), minv(m + 1);
    std::vector<int> p(m + 1, 0), way(m + 1, 0);
    std::vector<char> used(m + 1);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::fill(minv.begin(), minv.end(), kInf);
        std::fill(used.begin(), used.end(), 0);
        do {
            used[j0] = 1;
            const int i0 = p[j0];
            double delta = kInf;
            int j1 = 0;
            for (int j = 1; j <= m; ++j) {
                if (used[j]) continue;
                const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= m; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<int> assignment(n, -1);
    for (int j = 1; j <= m; ++j)
        if (p[j] != 0) assignment[p[j] - 1] = j - 1;
    return assignment;
}

std::vector<Correspondence> match_instances(const InstanceSet &a, const InstanceSet &b) {
    const Eigen::Index n = std::max(a.size(), b.size());
    if (a.empty() || b.empty()) return {};
    Eigen::MatrixXd cost = Eigen::MatrixXd::Constant(n, n, kNoMatchCost);
    Eigen::MatrixXd iou = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t i = 0; i < a.size(); ++i) {
        for (std::size_t j = 0; j < b.size(); ++j) {
            if (a[i].class_id != b[j].class_id) continue;
            iou(i, j) = mask_iou(a[i].mask, b[j].mask);
            if (iou(i, j) > 0) cost(i, j) = 1.0 - iou(i, j);
        }
    }
    const std::vector<int> assignment = solve_assignment(cost);
    std::vector<Correspondence> out;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const int j = assignment[i];
        if (j < 0 || std::size_t(j) >= b.size()) continue;
        if (a[i].class_id != b[j].class_id || !(iou(i, j) > 0)) continue;
        out.push_back({int(i), j, cost(i, j)});
    }
    return out;
}

namespace {

double axis_displacement(char axis, int lo_prev, int hi_prev, bool lo_cut_prev, bool hi_cut_prev, int lo_next,
                         int hi_next, bool lo_cut_next, bool hi_cut_next) {
    std::optional<double> best;
    if (!lo_cut_prev && !lo_cut_next) best = double(lo_next - lo_prev);
    if (!hi_cut_prev && !hi_cut_next) {
        const double d = double(hi_next - hi_prev);
        if (!best || std::abs(d) > std::abs(*best)) best = d;
    }
    if (!best) throw DisplacementUnavailable(axis);
    return *best;
}

} // namespace

Displacement boundary_displacement(const Instance &prev, const Instance &next) {
    if (prev.class_id != next.class_id) throw ContractViolation("boundary_displacement: class mismatch");
    Displacement d;
    d.dh = axis_displacement('h', prev.box.left, prev.box.right, prev.truncated_left, prev.truncated_right,
                             next.box.left, next.box.right, next.truncated_left, next.truncated_right);
    d.dv = axis_displacement('v', prev.box.top, prev.box.bottom, prev.truncated_top, prev.truncated_bottom,
                             next.box.top, next.box.bottom, next.truncated_top, next.truncated_bottom);
    return d;
}

InstanceSet warp_instances(const InstanceSet &set, const SampleGrid &grid) {
    InstanceSet out;
    for (const auto &inst : set) {
        PixelMask sample_valid;
        const Field<double> warped = resample(inst.mask.cast<double>(), grid, sample_valid);
        PixelMask mask = sample_valid && (warped >= 0.5);
        if (!mask.any()) continue;
        out.push_back(Instance::from_mask(inst.id, inst.class_id, std::move(mask)));
    }
    return out;
}

Rectified rectify_warped(const Image &img, std::span<const Instance> warped_instances,
                         std::span<const Displacement> displacement, WarpSource direction, const Image &donor) {
    require_same_shape(img, donor, "rectify_warped donor");
    require(warped_instances.size() == displacement.size(), "rectify_warped: one displacement per instance");
    const Eigen::Index rows = img.rows(), cols = img.cols();
    Rectified out;
    out.image = img;
    out.plan.kind = Field<std::int8_t>::Constant(rows, cols, RectifyPlan::kKeep);
    out.plan.src_u = Field<double>::Zero(rows, cols);
    out.plan.src_v = Field<double>::Zero(rows, cols);

    const double sign = direction == WarpSource::kFromNext ? -0.5 : 0.5;
    PixelMask vacated = PixelMask::Constant(rows, cols, false);
    PixelMask covered = PixelMask::Constant(rows, cols, false);

    for (std::size_t i = 0; i < warped_instances.size(); ++i) {
        const Instance &inst = warped_instances[i];
        require_same_shape(img, inst.mask, "rectify_warped mask");
        const double su = sign * displacement[i].dh;
        const double sv = sign * displacement[i].dv;
        if (su == 0 && sv == 0) {
            out.moved.push_back(inst);
            continue;
        }
        vacated = vacated || inst.mask;
        const Field<double> mask_field = inst.mask.cast<double>();
        PixelMask moved = PixelMask::Constant(rows, cols, false);
        for (Eigen::Index y = 0; y < rows; ++y) {
            for (Eigen::Index x = 0; x < cols; ++x) {
                const double u = snap_to_integer(double(x) - su);
                const double v = snap_to_integer(double(y) - sv);
                const auto s = detail::stencil(u, v, rows, cols);
                if (!s.inside) continue;
                const double m = (1 - s.fx) * (1 - s.fy) * mask_field(s.y0, s.x0) +
                                 s.fx * (1 - s.fy) * mask_field(s.y0, s.x1) +
                                 (1 - s.fx) * s.fy * mask_field(s.y1, s.x0) + s.fx * s.fy * mask_field(s.y1, s.x1);
                if (m < 0.5) continue;
                moved(y, x) = true;
                const auto sample = bilinear_sample<double>(img, {u, v, true});
                if (!sample.valid) continue;
                out.image.set_pixel(y, x, sample.value);
                out.image.valid(y, x) = true;
                out.plan.kind(y, x) = RectifyPlan::kShifted;
                out.plan.src_u(y, x) = u;
                out.plan.src_v(y, x) = v;
                covered(y, x) = true;
            }
        }
        if (moved.any()) out.moved.push_back(Instance::from_mask(inst.id, inst.class_id, std::move(moved)));
    }

    for (Eigen::Index y = 0; y < rows; ++y) {
        for (Eigen::Index x = 0; x < cols; ++x) {
            if (!vacated(y, x) || covered(y, x)) continue;
            if (donor.valid(y, x)) {
                out.image.set_pixel(y, x, donor.pixel(y, x));
                out.image.valid(y, x) = true;
                out.plan.kind(y, x) = RectifyPlan::kDonor;
            } else {
                out.image.valid(y, x) = false;
                out.plan.kind(y, x) = RectifyPlan::kInvalid;
            }
        }
    }
    return out;
}

Selection temporal_reconstruct(const Image &warped_prev, const Image &warped_next, const Image &rectified_prev,
                               const Image &rectified_next, const Image &target) {
    const std::array<const Image *, 4> images = {&warped_prev, &warped_next, &rectified_prev, &rectified_next};
    std::array<ErrorMap, 4> errors;
    std::array<Candidate, 4> candidates;
    for (int i = 0; i < 4; ++i) {
        require_same_shape(*images[i], target, "temporal_reconstruct");
        errors[i] = photometric_error(*images[i], target);
        candidates[i] = {images[i], &errors[i]};
    }
    return select_pixels(candidates);
}

ReprojectionInputs ReprojectionInputs::from_triplet(const Triplet &tri) {
    ReprojectionInputs in;
    in.prev = &tri.prev();
    in.current = &tri.current();
    in.next = &tri.next();
    in.intrinsics = tri.intrinsics;
    in.to_prev = tri.to_prev;
    in.to_next = tri.to_next;
    in.instances_prev = &tri.instances[kPrevFrame];
    in.instances_next = &tri.instances[kNextFrame];
    return in;
}

const Image &Reconstruction::candidate(int i) const {
    switch (i) {
    case 0:
        return warp_prev.image;
    case 1:
        return warp_next.image;
    case 2:
        return hints.value().rectified_prev.image;
    case 3:
        return hints.value().rectified_next.image;
    default:
        throw LookupError("reconstruction: no candidate " + std::to_string(i));
    }
}

Reconstruction reconstruct(const ReprojectionInputs &in, const DepthMap &depth, ReconstructionMode mode) {
    require(in.prev && in.current && in.next, "reconstruct: missing frame");
    require_same_shape(*in.current, depth, "reconstruct depth");
    Reconstruction rec;
    rec.grid_prev = sample_grid(depth, in.intrinsics, in.to_prev);
    rec.grid_next = sample_grid(depth, in.intrinsics, in.to_next);
    rec.warp_prev = warp_image_with_jacobian(*in.prev, rec.grid_prev);
    rec.warp_next = warp_image_with_jacobian(*in.next, rec.grid_next);

    if (mode == ReconstructionMode::kTemporal) {
        require(in.instances_prev && in.instances_next, "reconstruct: temporal hints need instances");
        TemporalHints h;
        h.warped_prev = warp_instances(*in.instances_prev, rec.grid_prev);
        h.warped_next = warp_instances(*in.instances_next, rec.grid_next);
        h.matches = match_instances(h.warped_prev, h.warped_next);
        std::vector<Instance> prev_objs, next_objs;
        for (std::size_t m = 0; m < h.matches.size(); ++m) {
            const Instance &a = h.warped_prev[h.matches[m].prev];
            const Instance &b = h.warped_next[h.matches[m].next];
            try {
                h.displacement.push_back(boundary_displacement(a, b));
            } catch (const DisplacementUnavailable &) {
                continue;
            }
            h.used.push_back(int(m));
            prev_objs.push_back(a);
            next_objs.push_back(b);
        }
        h.rectified_prev =
            rectify_warped(rec.warp_prev.image, prev_objs, h.displacement, WarpSource::kFromPrev, rec.warp_next.image);
        h.rectified_next =
            rectify_warped(rec.warp_next.image, next_objs, h.displacement, WarpSource::kFromNext, rec.warp_prev.image);
        rec.hints = std::move(h);
    }

    const int count = mode == ReconstructionMode::kTemporal ? 4 : 2;
    rec.errors.reserve(count);
    for (int i = 0; i < count; ++i) rec.errors.push_back(photometric_error(rec.candidate(i), *in.current));
    std::vector<Candidate> candidates;
    for (int i = 0; i < count; ++i) candidates.push_back({&rec.candidate(i), &rec.errors[i]});
    rec.selection = select_pixels(candidates);
    return rec;
}

std::string correspondence_csv(const TemporalHints &hints) {
    std::ostringstream os;
    os << "prev_id,next_id,class_id,cost,dh,dv\n";
    os.precision(9);
    for (std::size_t k = 0; k < hints.used.size(); ++k) {
        const auto &m = hints.matches[hints.used[k]];
        const auto &a = hints.warped_prev[m.prev];
        const auto &b = hints.warped_next[m.next];
        os << a.id << ',' << b.id << ',' << a.class_id << ',' << m.cost << ',' << hints.displacement[k].dh << ','
           << hints.displacement[k].dv << '\n';
    }
    return os.str();
}

} // namespace motionloss
