// Copyright Contributors to the motionloss project
// SPDX-License-Identifier: Apache-2.0

#include "motionloss/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "motionloss/photometric.hpp"

namespace motionloss {

void OptimConfig::validate() const {
    if (!(step_size > 0)) throw ContractViolation("optimizer: step size must be positive");
    if (max_iterations < 0) throw ContractViolation("optimizer: iteration cap must be non-negative");
    if (!(d_min > 0 && d_min < d_max)) throw ContractViolation("optimizer: need 0 < d_min < d_max");
    if (gradient == GradientMode::kFiniteDifference && !(fd_step > 0))
        throw ContractViolation("optimizer: finite-difference step must be positive");
    if (!(adam_epsilon > 0)) throw ContractViolation("optimizer: Adam epsilon must be positive");
    if (mlra_window < 1) throw ContractViolation("optimizer: MLRA window must be positive");
    if (!(teacher_init_depth >= d_min && teacher_init_depth <= d_max))
        throw ContractViolation("optimizer: teacher init depth outside bounds");
}

namespace {

inline std::int8_t sign8(double x) { return std::int8_t((x > 0) - (x < 0)); }

Field<std::int8_t> sign_field(const Field<double> &f) { return f.unaryExpr([](double x) { return sign8(x); }); }

} // namespace

bool LossStructure::operator==(const LossStructure &o) const {
    const auto eq = [](const auto &a, const auto &b) {
        return a.rows() == b.rows() && a.cols() == b.cols() && (a == b).all();
    };
    const auto eq_vec = [&](const auto &a, const auto &b) {
        if (a.size() != b.size()) return false;
        for (std::size_t i = 0; i < a.size(); ++i)
            if (!eq(a[i], b[i])) return false;
        return true;
    };
    if (!eq(selection, o.selection) || !eq_vec(candidate_valid, o.candidate_valid) || !eq_vec(l1_sign, o.l1_sign) ||
        !eq_vec(plan_kind, o.plan_kind))
        return false;
    if (displacement.size() != o.displacement.size()) return false;
    for (std::size_t i = 0; i < displacement.size(); ++i)
        if (displacement[i].dh != o.displacement[i].dh || displacement[i].dv != o.displacement[i].dv) return false;
    for (int i = 0; i < 4; ++i)
        if (!eq(cells[i], o.cells[i])) return false;
    return eq(fused_from_student, o.fused_from_student) && eq(teacher_sign, o.teacher_sign) &&
           eq(target_sign, o.target_sign) && eq(smooth_sign_x, o.smooth_sign_x) && eq(smooth_sign_y, o.smooth_sign_y);
}

LossModel::LossModel(ReprojectionInputs inputs, LossConfig cfg, Supervision supervision)
    : in_(inputs), cfg_(cfg), sup_(std::move(supervision)) {
    require(in_.current != nullptr, "loss model: missing target frame");
    const Eigen::Index rows = in_.current->rows(), cols = in_.current->cols();
    uncertain_ = sup_.uncertain.size() == 0 ? PixelMask::Constant(rows, cols, false) : sup_.uncertain;
    require_same_shape(*in_.current, uncertain_, "loss model uncertainty mask");
    if (uncertain_.any() && !sup_.teacher) throw ContractViolation("loss model: consistency needs a teacher depth");
    if (cfg_.distillation) {
        if (!sup_.teacher) throw ContractViolation("loss model: distillation needs a teacher depth");
        teacher_error_ = reconstruct(in_, *sup_.teacher, cfg_.reconstruction).selection.error;
    }
    if (sup_.teacher) require_same_shape(*in_.current, *sup_.teacher, "loss model teacher");
}

LossModel::LossModel(const Triplet &tri, LossConfig cfg, Supervision supervision)
    : LossModel(ReprojectionInputs::from_triplet(tri), cfg, std::move(supervision)) {}

std::array<double, 2> LossModel::effective_weights(const std::array<double, 2> &weights) const {
    if (!cfg_.distillation) return {1.0, 0.0};
    return weights;
}

LossModel::Evaluation LossModel::evaluate(const DepthMap &depth, const std::array<double, 2> &weights) const {
    Evaluation ev;
    ev.reconstruction = reconstruct(in_, depth, cfg_.reconstruction);
    const ErrorMap &error = ev.reconstruction.selection.error;
    const DepthMap &teacher = sup_.teacher ? *sup_.teacher : depth;
    ev.terms = original_loss(error, depth, teacher, uncertain_, *in_.current, cfg_.lambda_s);
    ev.terms.weights = effective_weights(weights);
    if (cfg_.distillation) {
        ev.target = fuse_by_error(*sup_.teacher, depth, *teacher_error_, error);
        ev.terms.distil = distillation_loss(depth, ev.target->depth, uncertain_);
    }
    ev.terms.total = total_loss(ev.terms.ori, ev.terms.distil, ev.terms.weights);
    return ev;
}

namespace {

void scatter_rectified(const RectifyPlan &plan, const std::array<Field<double>, 3> &adj,
                       std::array<Field<double>, 3> &source_adj, std::array<Field<double>, 3> &donor_adj) {
    const Eigen::Index rows = plan.kind.rows(), cols = plan.kind.cols();
    for (Eigen::Index y = 0; y < rows; ++y) {
        for (Eigen::Index x = 0; x < cols; ++x) {
            switch (plan.kind(y, x)) {
            case RectifyPlan::kKeep:
                for (int c = 0; c < 3; ++c) source_adj[c](y, x) += adj[c](y, x);
                break;
            case RectifyPlan::kDonor:
                for (int c = 0; c < 3; ++c) donor_adj[c](y, x) += adj[c](y, x);
                break;
            case RectifyPlan::kShifted: {
                const auto s = detail::stencil(plan.src_u(y, x), plan.src_v(y, x), rows, cols);
                const double w[4] = {(1 - s.fx) * (1 - s.fy), s.fx * (1 - s.fy), (1 - s.fx) * s.fy, s.fx * s.fy};
                const Eigen::Index xs[4] = {s.x0, s.x1, s.x0, s.x1};
                const Eigen::Index ys[4] = {s.y0, s.y0, s.y1, s.y1};
                for (int i = 0; i < 4; ++i) {
                    if (w[i] == 0) continue;
                    for (int c = 0; c < 3; ++c) source_adj[c](ys[i], xs[i]) += w[i] * adj[c](y, x);
                }
                break;
            }
            default:
                break;
            }
        }
    }
}

} // namespace

Field<double> LossModel::gradient(const DepthMap &depth, const Evaluation &ev) const {
    const Eigen::Index rows = depth.rows(), cols = depth.cols();
    const auto &rec = ev.reconstruction;
    const auto w = ev.terms.weights;
    Field<double> grad = Field<double>::Zero(rows, cols);

    // Reprojection term: mean of the selected error over the reliable, valid pixels.
    const PixelMask use = (!uncertain_) && rec.selection.error.valid;
    const long n_use = use.count();
    std::array<Field<double>, 3> adj_prev, adj_next;
    for (int c = 0; c < 3; ++c) {
        adj_prev[c] = Field<double>::Zero(rows, cols);
        adj_next[c] = Field<double>::Zero(rows, cols);
    }
    if (n_use > 0 && w[0] != 0) {
        const double per_pixel = w[0] / double(n_use);
        for (int k = 0; k < int(rec.errors.size()); ++k) {
            const Field<double> adj = (use && (rec.selection.index == k)).cast<double>() * per_pixel;
            if (!(adj != 0).any()) continue;
            const auto g = photometric_error_vjp(rec.candidate(k), *in_.current, adj);
            switch (k) {
            case 0:
                for (int c = 0; c < 3; ++c) adj_prev[c] += g[c];
                break;
            case 1:
                for (int c = 0; c < 3; ++c) adj_next[c] += g[c];
                break;
            case 2:
                scatter_rectified(rec.hints->rectified_prev.plan, g, adj_prev, adj_next);
                break;
            case 3:
                scatter_rectified(rec.hints->rectified_next.plan, g, adj_next, adj_prev);
                break;
            }
        }
        for (int c = 0; c < 3; ++c) {
            grad += adj_prev[c] * rec.warp_prev.dcolor_ddepth[c];
            grad += adj_next[c] * rec.warp_next.dcolor_ddepth[c];
        }
    }

    const long n_uncertain = uncertain_.count();
    if (n_uncertain > 0 && w[0] != 0) {
        const Field<double> s = sign_field(depth - *sup_.teacher).cast<double>();
        grad += uncertain_.select(s, 0.0) * (w[0] / double(n_uncertain));
    }
    if (w[0] != 0 && cfg_.lambda_s != 0) grad += w[0] * cfg_.lambda_s * smoothness_loss_gradient(depth, *in_.current);

    if (cfg_.distillation && w[1] != 0) {
        const long n_reliable = (!uncertain_).count();
        if (n_reliable > 0) {
            const Field<double> s = sign_field(depth - ev.target->depth).cast<double>();
            grad += (!uncertain_).select(s, 0.0) * (w[1] / double(n_reliable));
        }
    }
    return grad;
}

LossStructure LossModel::structure(const DepthMap &depth, const Evaluation &ev) const {
    const auto &rec = ev.reconstruction;
    LossStructure s;
    s.selection = rec.selection.index;
    for (int k = 0; k < int(rec.errors.size()); ++k) {
        s.candidate_valid.push_back(rec.errors[k].valid);
        for (int c = 0; c < 3; ++c) s.l1_sign.push_back(sign_field(rec.candidate(k).channel[c] - in_.current->channel[c]));
    }
    if (rec.hints) {
        s.plan_kind = {rec.hints->rectified_prev.plan.kind, rec.hints->rectified_next.plan.kind};
        s.displacement = rec.hints->displacement;
    }
    const auto floor_field = [](const Field<double> &f) {
        return f.unaryExpr([](double x) { return int(std::floor(x)); }).eval();
    };
    s.cells = {floor_field(rec.grid_prev.u), floor_field(rec.grid_prev.v), floor_field(rec.grid_next.u),
               floor_field(rec.grid_next.v)};
    if (ev.target) {
        s.fused_from_student = ev.target->from_student;
        s.target_sign = sign_field(depth - ev.target->depth);
    }
    if (sup_.teacher) s.teacher_sign = sign_field(depth - *sup_.teacher);
    const Field<double> inv = depth.inverse();
    const Eigen::Index rows = depth.rows(), cols = depth.cols();
    if (cols > 1) s.smooth_sign_x = sign_field(inv.rightCols(cols - 1) - inv.leftCols(cols - 1));
    if (rows > 1) s.smooth_sign_y = sign_field(inv.bottomRows(rows - 1) - inv.topRows(rows - 1));
    return s;
}

namespace {

void project_feasible(Field<double> &grad, const DepthMap &depth, double d_min, double d_max) {
    grad = ((depth <= d_min) && (grad > 0)).select(0.0, grad);
    grad = ((depth >= d_max) && (grad < 0)).select(0.0, grad);
}

} // namespace

Field<double> loss_gradient(const LossModel &model, const DepthMap &depth, const std::array<double, 2> &weights,
                            const OptimConfig &cfg, std::span<const PixelIndex> pixels) {
    cfg.validate();
    if (((depth < cfg.d_min) || (depth > cfg.d_max)).any())
        throw ContractViolation("loss_gradient: depth outside bounds");
    Field<double> grad;
    if (cfg.gradient == GradientMode::kAnalytic) {
        grad = model.gradient(depth, model.evaluate(depth, weights));
    } else {
        grad = Field<double>::Zero(depth.rows(), depth.cols());
        std::vector<PixelIndex> all;
        if (pixels.empty()) {
            for (Eigen::Index v = 0; v < depth.rows(); ++v)
                for (Eigen::Index u = 0; u < depth.cols(); ++u) all.push_back({v, u});
            pixels = all;
        }
        DepthMap probe = depth;
        for (const auto &p : pixels) {
            const double d = depth(p.v, p.u);
            probe(p.v, p.u) = d + cfg.fd_step;
            const double up = model.evaluate(probe, weights).terms.total;
            probe(p.v, p.u) = d - cfg.fd_step;
            const double down = model.evaluate(probe, weights).terms.total;
            probe(p.v, p.u) = d;
            grad(p.v, p.u) = (up - down) / (2 * cfg.fd_step);
        }
    }
    project_feasible(grad, depth, cfg.d_min, cfg.d_max);
    return grad;
}

double GradientCheck::agreement() const {
    if (samples.empty()) return 0.0;
    long ok = 0;
    for (const auto &s : samples) ok += s.agrees;
    return double(ok) / double(samples.size());
}

GradientCheck gradient_check(const LossModel &model, const DepthMap &depth, const std::array<double, 2> &weights,
                             double fd_step, int count, std::uint64_t seed, double tol) {
    if (!(fd_step > 0)) throw ContractViolation("gradient_check: step must be positive");
    const auto base = model.evaluate(depth, weights);
    const Field<double> analytic = model.gradient(depth, base);
    const LossStructure structure = model.structure(depth, base);

    std::vector<PixelIndex> pool;
    const PixelMask &valid = base.reconstruction.selection.error.valid;
    for (Eigen::Index v = 0; v < depth.rows(); ++v)
        for (Eigen::Index u = 0; u < depth.cols(); ++u)
            if (valid(v, u)) pool.push_back({v, u});
    std::mt19937_64 rng(seed);
    std::shuffle(pool.begin(), pool.end(), rng);

    GradientCheck out;
    DepthMap probe = depth;
    for (const PixelIndex &p : pool) {
        if (int(out.samples.size()) >= count) break;
        const double d = depth(p.v, p.u);
        probe(p.v, p.u) = d + fd_step;
        const auto up = model.evaluate(probe, weights);
        const bool smooth_up = model.structure(probe, up) == structure;
        probe(p.v, p.u) = d - fd_step;
        const auto down = smooth_up ? model.evaluate(probe, weights) : up;
        const bool smooth = smooth_up && model.structure(probe, down) == structure;
        probe(p.v, p.u) = d;
        if (!smooth) {
            ++out.rejected;
            continue;
        }
        GradientSample s;
        s.pixel = p;
        s.analytic = analytic(p.v, p.u);
        s.numeric = (up.terms.total - down.terms.total) / (2 * fd_step);
        s.agrees = std::abs(s.analytic - s.numeric) <=
                   tol * std::max({std::abs(s.analytic), std::abs(s.numeric), 1e-10});
        out.samples.push_back(s);
    }
    return out;
}

namespace {

double abs_rel(const DepthMap &pred, const DepthMap &gt) { return ((pred - gt).abs() / gt).mean(); }

} // namespace

OptimResult optimize_depth(const DepthMap &init, const Triplet &tri, const OptimConfig &cfg, WeightState weights,
                           const Supervision &supervision) {
    cfg.validate();
    require_same_shape(init, tri.current(), "optimize_depth init");
    validate_depth(init, "optimize_depth");
    if (((init < cfg.d_min) || (init > cfg.d_max)).any())
        throw ContractViolation("optimize_depth: init outside depth bounds");

    const LossModel model(tri, cfg.loss, supervision);
    const bool mlra = cfg.loss.distillation && cfg.loss.weights == WeightMode::kMlra;
    weights.window = cfg.mlra_window;
    if (cfg.loss.distillation && cfg.loss.weights == WeightMode::kSumUp) weights.weights = {0.5, 0.5};

    OptimResult out;
    out.depth = init;
    const double n = double(init.size());
    Field<double> m1 = Field<double>::Zero(init.rows(), init.cols());
    Field<double> m2 = m1;
    constexpr double kBeta1 = 0.9, kBeta2 = 0.999;

    double last_total = std::numeric_limits<double>::infinity();
    int rising = 0;
    double lambda = mlra ? lambda_at(0, std::max(cfg.max_iterations, 1)) : 0.0;
    for (int it = 0; it < cfg.max_iterations; ++it) {
        const auto ev = model.evaluate(out.depth, weights.weights);
        out.trace.rows.push_back({it, ev.terms, lambda, abs_rel(out.depth, tri.depth[kCurrentFrame])});

        rising = ev.terms.total > last_total ? rising + 1 : 0;
        last_total = ev.terms.total;
        if (rising >= cfg.divergence_patience) {
            out.trace.diverged = true;
            std::ostringstream os;
            os << "loss increased " << rising << " consecutive steps at iteration " << it << " (L=" << ev.terms.total
               << ")";
            out.trace.diagnostic = os.str();
            break;
        }

        Field<double> grad = cfg.gradient == GradientMode::kAnalytic
                                 ? model.gradient(out.depth, ev)
                                 : loss_gradient(model, out.depth, weights.weights, cfg);
        project_feasible(grad, out.depth, cfg.d_min, cfg.d_max);
        grad *= n;

        if (cfg.method == StepMethod::kAdam) {
            m1 = kBeta1 * m1 + (1 - kBeta1) * grad;
            m2 = kBeta2 * m2 + (1 - kBeta2) * grad.square();
            const double c1 = 1 - std::pow(kBeta1, it + 1);
            const double c2 = 1 - std::pow(kBeta2, it + 1);
            out.depth -= cfg.step_size * (m1 / c1) / ((m2 / c2).sqrt() + cfg.adam_epsilon);
        } else {
            out.depth -= cfg.step_size * grad;
        }
        out.depth = out.depth.max(cfg.d_min).min(cfg.d_max);

        if (mlra && weights.record(ev.terms.ori, ev.terms.distil)) {
            lambda = lambda_at(it + 1, cfg.max_iterations);
            weights = update_weights(weights, lambda);
        }
    }
    out.weights = weights;
    return out;
}

DepthMap teacher_depth(const Triplet &tri, const OptimConfig &cfg) {
    OptimConfig teacher_cfg = cfg;
    teacher_cfg.loss.distillation = false;
    const DepthMap init = DepthMap::Constant(tri.intrinsics.height, tri.intrinsics.width, cfg.teacher_init_depth);
    return optimize_depth(init, tri, teacher_cfg, WeightState{}).depth;
}

} // namespace motionloss
