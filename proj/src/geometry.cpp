// Copyright Contributors to the motionloss project
// SPDX-License-Identifier: Apache-2.0

#include "motionloss/geometry.hpp"

namespace motionloss {

void validate_depth(const DepthMap &depth, const char *what) {
    if (!(depth > 0.0).all() || !depth.allFinite())
        throw DomainError(std::string(what) + ": depth must be positive and finite");
}

namespace {

template <typename DepthAt>
SampleGrid make_grid(Eigen::Index rows, Eigen::Index cols, const Intrinsics<double> &k, const Pose<double> &t,
                     DepthAt depth_at) {
    SampleGrid g;
    g.u.resize(rows, cols);
    g.v.resize(rows, cols);
    g.du_ddepth.resize(rows, cols);
    g.dv_ddepth.resize(rows, cols);
    g.valid.resize(rows, cols);
    for (Eigen::Index y = 0; y < rows; ++y) {
        for (Eigen::Index x = 0; x < cols; ++x) {
            const auto r = reproject<double>({double(x), double(y), true}, depth_at(y, x), k, t);
            g.u(y, x) = r.pixel.u;
            g.v(y, x) = r.pixel.v;
            g.du_ddepth(y, x) = r.du_ddepth;
            g.dv_ddepth(y, x) = r.dv_ddepth;
            g.valid(y, x) = r.pixel.valid;
        }
    }
    return g;
}

} // namespace

SampleGrid sample_grid(const DepthMap &depth, const Intrinsics<double> &k, const Pose<double> &t) {
    validate_depth(depth, "sample_grid");
    return make_grid(depth.rows(), depth.cols(), k, t, [&](Eigen::Index y, Eigen::Index x) { return depth(y, x); });
}

SampleGrid sample_grid(double depth, const Intrinsics<double> &k, const Pose<double> &t) {
    if (!(depth > 0)) throw DomainError("sample_grid: depth must be positive");
    return make_grid(k.height, k.width, k, t, [depth](Eigen::Index, Eigen::Index) { return depth; });
}

Image resample(const Image &src, const SampleGrid &grid) {
    Image out(grid.rows(), grid.cols());
    for (Eigen::Index y = 0; y < grid.rows(); ++y) {
        for (Eigen::Index x = 0; x < grid.cols(); ++x) {
            const auto s = bilinear_sample<double>(src, {grid.u(y, x), grid.v(y, x), grid.valid(y, x)});
            out.valid(y, x) = s.valid;
            out.set_pixel(y, x, s.value);
        }
    }
    return out;
}

Field<double> resample(const Field<double> &src, const SampleGrid &grid, PixelMask &valid) {
    Field<double> out = Field<double>::Zero(grid.rows(), grid.cols());
    valid = PixelMask::Constant(grid.rows(), grid.cols(), false);
    for (Eigen::Index y = 0; y < grid.rows(); ++y) {
        for (Eigen::Index x = 0; x < grid.cols(); ++x) {
            if (!grid.valid(y, x)) continue;
            const auto s = detail::stencil(grid.u(y, x), grid.v(y, x), src.rows(), src.cols());
            if (!s.inside) continue;
            out(y, x) = (1 - s.fx) * (1 - s.fy) * src(s.y0, s.x0) + s.fx * (1 - s.fy) * src(s.y0, s.x1) +
                        (1 - s.fx) * s.fy * src(s.y1, s.x0) + s.fx * s.fy * src(s.y1, s.x1);
            valid(y, x) = true;
        }
    }
    return out;
}

Image warp_image(const Image &src, const DepthMap &depth, const Intrinsics<double> &k, const Pose<double> &t) {
    require_same_shape(src, depth, "warp_image source vs depth");
    return resample(src, sample_grid(depth, k, t));
}

WarpWithJacobian warp_image_with_jacobian(const Image &src, const SampleGrid &grid) {
    WarpWithJacobian out;
    out.image = Image(grid.rows(), grid.cols());
    for (auto &j : out.dcolor_ddepth) j = Field<double>::Zero(grid.rows(), grid.cols());
    for (Eigen::Index y = 0; y < grid.rows(); ++y) {
        for (Eigen::Index x = 0; x < grid.cols(); ++x) {
            const auto s = bilinear_sample_with_gradient<double>(src, {grid.u(y, x), grid.v(y, x), grid.valid(y, x)});
            out.image.valid(y, x) = s.valid;
            out.image.set_pixel(y, x, s.value);
            if (!s.valid) continue;
            for (int c = 0; c < 3; ++c)
                out.dcolor_ddepth[c](y, x) = s.d_du[c] * grid.du_ddepth(y, x) + s.d_dv[c] * grid.dv_ddepth(y, x);
        }
    }
    return out;
}

} // namespace motionloss
