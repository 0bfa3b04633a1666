// Copyright Contributors to the motionloss project
// SPDX-License-Identifier: Apache-2.0

#include "motionloss/photometric.hpp"

#include <cmath>
#include <limits>

#include "motionloss/geometry.hpp"

namespace motionloss {

namespace {

inline Eigen::Index reflect(Eigen::Index i, Eigen::Index n) {
    if (n == 1) return 0;
    if (i < 0) return -i;
    if (i >= n) return 2 * (n - 1) - i;
    return i;
}

/// Copy of `f` with a one-pixel reflected border.
Field<double> pad_reflect(const Field<double> &f) {
    const Eigen::Index rows = f.rows(), cols = f.cols();
    Field<double> p(rows + 2, cols + 2);
    for (Eigen::Index y = -1; y <= rows; ++y) {
        const Eigen::Index yy = reflect(y, rows);
        for (Eigen::Index x = -1; x <= cols; ++x) p(y + 1, x + 1) = f(yy, reflect(x, cols));
    }
    return p;
}

/// 3x3 window mean with reflection padding.
Field<double> box_mean(const Field<double> &f) {
    const Eigen::Index rows = f.rows(), cols = f.cols();
    const Field<double> p = pad_reflect(f);
    const Field<double> h = p.middleCols(0, cols) + p.middleCols(1, cols) + p.middleCols(2, cols);
    return (h.middleRows(0, rows) + h.middleRows(1, rows) + h.middleRows(2, rows)) / 9.0;
}

/// Adjoint of box_mean: spreads each value over its window and folds the padded border back.
Field<double> box_mean_adjoint(const Field<double> &f) {
    const Eigen::Index rows = f.rows(), cols = f.cols();
    Field<double> h = Field<double>::Zero(rows + 2, cols);
    for (int d = 0; d < 3; ++d) h.middleRows(d, rows) += f;
    Field<double> p = Field<double>::Zero(rows + 2, cols + 2);
    for (int d = 0; d < 3; ++d) p.middleCols(d, cols) += h;
    Field<double> out = p.block(1, 1, rows, cols) / 9.0;
    for (Eigen::Index x = -1; x <= cols; ++x) {
        const Eigen::Index xx = reflect(x, cols);
        out(reflect(-1, rows), xx) += p(0, x + 1) / 9.0;
        out(reflect(rows, rows), xx) += p(rows + 1, x + 1) / 9.0;
    }
    for (Eigen::Index y = 0; y < rows; ++y) {
        out(y, reflect(-1, cols)) += p(y + 1, 0) / 9.0;
        out(y, reflect(cols, cols)) += p(y + 1, cols + 1) / 9.0;
    }
    return out;
}

/// Windowed first and second moments of one channel pair.
struct Moments {
    Field<double> mu_a, mu_b, e_aa, e_bb, e_ab;
};

Moments window_moments(const Field<double> &a, const Field<double> &b) {
    return {box_mean(a), box_mean(b), box_mean(a.square()), box_mean(b.square()), box_mean(a * b)};
}

PixelMask window_validity(const PixelMask &valid) {
    return box_mean(valid.cast<double>()) == 1.0;
}

inline double sign(double x) { return (x > 0) - (x < 0); }

} // namespace

ErrorMap photometric_error(const Image &a, const Image &b) {
    require_same_shape(a, b, "photometric_error");
    require(!a.empty(), "photometric_error: empty image");
    ErrorMap out(a.rows(), a.cols());
    out.valid = window_validity(a.valid && b.valid);
    for (int c = 0; c < 3; ++c) {
        const Field<double> &ca = a.channel[c];
        const Field<double> &cb = b.channel[c];
        const Moments m = window_moments(ca, cb);
        const Field<double> var_a = m.e_aa - m.mu_a.square();
        const Field<double> var_b = m.e_bb - m.mu_b.square();
        const Field<double> cov = m.e_ab - m.mu_a * m.mu_b;
        const Field<double> ssim = ((2 * m.mu_a * m.mu_b + kSsimC1) * (2 * cov + kSsimC2)) /
                                   ((m.mu_a.square() + m.mu_b.square() + kSsimC1) * (var_a + var_b + kSsimC2));
        out.value += (kSsimWeight * 0.5 * (1.0 - ssim) + (1.0 - kSsimWeight) * (ca - cb).abs()) / 3.0;
    }
    out.value = out.valid.select(out.value, 0.0);
    return out;
}

std::array<Field<double>, 3> photometric_error_vjp(const Image &a, const Image &b, const Field<double> &adjoint) {
    require_same_shape(a, b, "photometric_error_vjp");
    require_same_shape(a, adjoint, "photometric_error_vjp adjoint");
    std::array<Field<double>, 3> grad;
    for (int c = 0; c < 3; ++c) {
        const Field<double> &ca = a.channel[c];
        const Field<double> &cb = b.channel[c];
        const Moments m = window_moments(ca, cb);
        const Field<double> n1 = 2 * m.mu_a * m.mu_b + kSsimC1;
        const Field<double> n2 = 2 * (m.e_ab - m.mu_a * m.mu_b) + kSsimC2;
        const Field<double> d1 = m.mu_a.square() + m.mu_b.square() + kSsimC1;
        const Field<double> d2 = (m.e_aa - m.mu_a.square()) + (m.e_bb - m.mu_b.square()) + kSsimC2;
        const Field<double> s = (n1 * n2) / (d1 * d2);
        // Partials of SSIM w.r.t. the window statistics mu_a, E[a^2], E[ab], scaled by the adjoint.
        const Field<double> k = adjoint * (-kSsimWeight * 0.5 / 3.0);
        const Field<double> ds_dmu = k * s * (2 * m.mu_b / n1 - 2 * m.mu_a / d1 - 2 * m.mu_b / n2 + 2 * m.mu_a / d2);
        const Field<double> ds_daa = k * (-s / d2);
        const Field<double> ds_dab = k * (2 * s / n2);
        const Field<double> sgn = (ca - cb).sign();
        grad[c] = box_mean_adjoint(ds_dmu) + 2 * ca * box_mean_adjoint(ds_daa) + cb * box_mean_adjoint(ds_dab) +
                  adjoint * ((1.0 - kSsimWeight) / 3.0) * sgn;
    }
    return grad;
}

Selection select_pixels(std::span<const Candidate> candidates) {
    require(!candidates.empty(), "select_pixels: empty candidate list");
    const Image &first = *candidates.front().image;
    for (const auto &c : candidates) {
        require(c.image != nullptr && c.error != nullptr, "select_pixels: null candidate");
        require_same_shape(first, *c.image, "select_pixels image");
        require_same_shape(first, *c.error, "select_pixels error");
    }
    const Eigen::Index rows = first.rows(), cols = first.cols();
    Selection sel{Image(rows, cols), ErrorMap(rows, cols), Field<int>::Constant(rows, cols, -1)};
    for (Eigen::Index y = 0; y < rows; ++y) {
        for (Eigen::Index x = 0; x < cols; ++x) {
            int best = -1;
            double best_err = std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < candidates.size(); ++i) {
                const ErrorMap &e = *candidates[i].error;
                if (e.valid(y, x) && e.value(y, x) < best_err) {
                    best_err = e.value(y, x);
                    best = int(i);
                }
            }
            sel.index(y, x) = best;
            if (best < 0) {
                sel.error.valid(y, x) = false;
                sel.error.value(y, x) = 0;
                sel.image.valid(y, x) = false;
                continue;
            }
            sel.error.value(y, x) = best_err;
            sel.image.set_pixel(y, x, candidates[best].image->pixel(y, x));
            sel.image.valid(y, x) = candidates[best].image->valid(y, x);
        }
    }
    return sel;
}

namespace {

struct SmoothnessTerms {
    Field<double> edge_x, edge_y;  // exp(-|dI|)
    Field<double> inv;             // inverse depth
    double mean_inv = 0;
};

SmoothnessTerms smoothness_terms(const DepthMap &depth, const Image &img) {
    require_same_shape(depth, img, "smoothness_loss");
    validate_depth(depth, "smoothness_loss");
    const Eigen::Index rows = depth.rows(), cols = depth.cols();
    SmoothnessTerms t;
    t.inv = depth.inverse();
    t.mean_inv = t.inv.mean();
    t.edge_x = Field<double>::Zero(rows, std::max<Eigen::Index>(cols - 1, 0));
    t.edge_y = Field<double>::Zero(std::max<Eigen::Index>(rows - 1, 0), cols);
    for (int c = 0; c < 3; ++c) {
        const Field<double> &ch = img.channel[c];
        if (cols > 1) t.edge_x += (ch.rightCols(cols - 1) - ch.leftCols(cols - 1)).abs() / 3.0;
        if (rows > 1) t.edge_y += (ch.bottomRows(rows - 1) - ch.topRows(rows - 1)).abs() / 3.0;
    }
    t.edge_x = (-t.edge_x).exp();
    t.edge_y = (-t.edge_y).exp();
    return t;
}

} // namespace

double smoothness_loss(const DepthMap &depth, const Image &img) {
    const SmoothnessTerms t = smoothness_terms(depth, img);
    const Eigen::Index rows = depth.rows(), cols = depth.cols();
    double loss = 0;
    if (cols > 1) {
        const Field<double> gx = (t.inv.rightCols(cols - 1) - t.inv.leftCols(cols - 1)) / t.mean_inv;
        loss += (gx.abs() * t.edge_x).mean();
    }
    if (rows > 1) {
        const Field<double> gy = (t.inv.bottomRows(rows - 1) - t.inv.topRows(rows - 1)) / t.mean_inv;
        loss += (gy.abs() * t.edge_y).mean();
    }
    return loss;
}

Field<double> smoothness_loss_gradient(const DepthMap &depth, const Image &img) {
    const SmoothnessTerms t = smoothness_terms(depth, img);
    const Eigen::Index rows = depth.rows(), cols = depth.cols();
    const double n = double(depth.size());
    // Gradient w.r.t. inverse depth z. Each term is |dz| e / (m N_axis) with m = mean(z).
    Field<double> dz = Field<double>::Zero(rows, cols);
    double scaled_loss = 0;  // sum over axes of mean(|dz| e) / m
    if (cols > 1) {
        const double count = double(rows * (cols - 1));
        for (Eigen::Index y = 0; y < rows; ++y) {
            for (Eigen::Index x = 0; x + 1 < cols; ++x) {
                const double diff = t.inv(y, x + 1) - t.inv(y, x);
                const double w = t.edge_x(y, x) / (t.mean_inv * count);
                dz(y, x + 1) += w * sign(diff);
                dz(y, x) -= w * sign(diff);
                scaled_loss += std::abs(diff) * w;
            }
        }
    }
    if (rows > 1) {
        const double count = double((rows - 1) * cols);
        for (Eigen::Index y = 0; y + 1 < rows; ++y) {
            for (Eigen::Index x = 0; x < cols; ++x) {
                const double diff = t.inv(y + 1, x) - t.inv(y, x);
                const double w = t.edge_y(y, x) / (t.mean_inv * count);
                dz(y + 1, x) += w * sign(diff);
                dz(y, x) -= w * sign(diff);
                scaled_loss += std::abs(diff) * w;
            }
        }
    }
    // d(1/m)/dz_i = -1 / (m^2 N).
    dz -= scaled_loss / (t.mean_inv * n);
    return dz * (-t.inv.square());
}

double reprojection_loss(const ErrorMap &error, const PixelMask &mask) {
    require_same_shape(error, mask, "reprojection_loss");
    const PixelMask use = mask && error.valid;
    const long count = use.count();
    if (count == 0) return 0.0;
    return use.select(error.value, 0.0).sum() / double(count);
}

} // namespace motionloss
