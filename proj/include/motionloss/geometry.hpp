// Copyright Contributors to the motionloss project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "motionloss/errors.hpp"
#include "motionloss/image.hpp"

namespace motionloss {

/// Pinhole intrinsics. Pixel centers sit on integer coordinates.
template <typename Scalar>
struct Intrinsics {
    Scalar fx = 1;
    Scalar fy = 1;
    Scalar cx = 0;
    Scalar cy = 0;
    int width = 1;
    int height = 1;

    void validate() const {
        if (!(fx > 0 && fy > 0)) throw ContractViolation("intrinsics: focal lengths must be positive");
        if (width <= 0 || height <= 0) throw ContractViolation("intrinsics: image size must be positive");
        if (!(cx >= 0 && cx < width && cy >= 0 && cy < height))
            throw ContractViolation("intrinsics: principal point outside the image");
    }

    Eigen::Matrix<Scalar, 3, 3> matrix() const {
        Eigen::Matrix<Scalar, 3, 3> k;
        k << fx, 0, cx, 0, fy, cy, 0, 0, 1;
        return k;
    }

    /// Unit-depth ray through pixel (u, v).
    Eigen::Matrix<Scalar, 3, 1> ray(Scalar u, Scalar v) const { return {(u - cx) / fx, (v - cy) / fy, Scalar(1)}; }

    bool contains(Scalar u, Scalar v) const {
        return u >= 0 && v >= 0 && u <= Scalar(width - 1) && v <= Scalar(height - 1);
    }

    template <typename Other>
    Intrinsics<Other> cast() const {
        return {Other(fx), Other(fy), Other(cx), Other(cy), width, height};
    }
};

/// Rigid transform x -> R x + t. The rotation is parameterized by intrinsic XYZ Euler angles,
/// R = Rx(a) Ry(b) Rz(c).
template <typename Scalar>
class Pose {
  public:
    using Vector3 = Eigen::Matrix<Scalar, 3, 1>;
    using Matrix3 = Eigen::Matrix<Scalar, 3, 3>;

    Pose() : rotation_(Matrix3::Identity()), translation_(Vector3::Zero()) {}
    Pose(const Matrix3 &rotation, const Vector3 &translation) : rotation_(rotation), translation_(translation) {}

    static Pose identity() { return Pose(); }

    static Pose from_euler(const Vector3 &angles, const Vector3 &translation) {
        using Eigen::AngleAxis;
        const Matrix3 r = (AngleAxis<Scalar>(angles.x(), Vector3::UnitX()) *
                           AngleAxis<Scalar>(angles.y(), Vector3::UnitY()) *
                           AngleAxis<Scalar>(angles.z(), Vector3::UnitZ()))
                              .toRotationMatrix();
        return Pose(r, translation);
    }

    static Pose translation_only(const Vector3 &translation) { return Pose(Matrix3::Identity(), translation); }

    /// Euler angles (a, b, c) with R = Rx(a) Ry(b) Rz(c); b is kept in [-pi/2, pi/2].
    Vector3 euler() const {
        using std::asin;
        using std::atan2;
        const Matrix3 &r = rotation_;
        const Scalar s = std::clamp(r(0, 2), Scalar(-1), Scalar(1));
        return {atan2(-r(1, 2), r(2, 2)), asin(s), atan2(-r(0, 1), r(0, 0))};
    }

    const Matrix3 &rotation() const { return rotation_; }
    const Vector3 &translation() const { return translation_; }

    Vector3 operator*(const Vector3 &point) const { return rotation_ * point + translation_; }

    /// Composition: (a * b)(x) = a(b(x)).
    Pose operator*(const Pose &other) const {
        return Pose(rotation_ * other.rotation_, rotation_ * other.translation_ + translation_);
    }

    Pose inverse() const {
        const Matrix3 rt = rotation_.transpose();
        return Pose(rt, -(rt * translation_));
    }

    bool is_approx(const Pose &other, Scalar tol) const {
        return (rotation_ - other.rotation_).cwiseAbs().maxCoeff() <= tol &&
               (translation_ - other.translation_).cwiseAbs().maxCoeff() <= tol;
    }

    Eigen::Matrix<Scalar, 4, 4> matrix() const {
        Eigen::Matrix<Scalar, 4, 4> m = Eigen::Matrix<Scalar, 4, 4>::Identity();
        m.template topLeftCorner<3, 3>() = rotation_;
        m.template topRightCorner<3, 1>() = translation_;
        return m;
    }

  private:
    Matrix3 rotation_;
    Vector3 translation_;
};

template <typename Scalar>
Pose<Scalar> compose(const Pose<Scalar> &a, const Pose<Scalar> &b) {
    return a * b;
}

template <typename Scalar>
struct PixelCoord {
    Scalar u = 0;
    Scalar v = 0;
    bool valid = true;
};

/// Projected coordinates closer than this to an integer are snapped onto it, so that
/// degenerate warps (identity pose) reproduce pixels exactly.
inline constexpr double kIntegerSnap = 1e-9;

template <typename Scalar>
Scalar snap_to_integer(Scalar x) {
    using std::abs;
    using std::round;
    const Scalar r = round(x);
    return abs(x - r) < Scalar(kIntegerSnap) ? r : x;
}

/// Result of moving a pixel with known depth into another camera.
template <typename Scalar>
struct Reprojection {
    PixelCoord<Scalar> pixel;
    Scalar depth = 0;      // z of the transformed point
    Scalar du_ddepth = 0;  // derivative of the projected coordinates w.r.t. the source depth
    Scalar dv_ddepth = 0;
};

/// Maps pixel p with depth `depth` through K T D K^-1 p and normalizes by the depth component.
/// The validity flag is cleared when the transformed point is behind the camera or the projection
/// leaves [0, W-1] x [0, H-1].
template <typename Scalar>
Reprojection<Scalar> reproject(const PixelCoord<Scalar> &p, Scalar depth, const Intrinsics<Scalar> &k,
                               const Pose<Scalar> &t) {
    if (!(depth > 0)) throw DomainError("reproject: depth must be positive");
    const Eigen::Matrix<Scalar, 3, 1> ray = k.ray(p.u, p.v);
    const Eigen::Matrix<Scalar, 3, 1> a = t.rotation() * ray;
    const Eigen::Matrix<Scalar, 3, 1> y = depth * a + t.translation();

    Reprojection<Scalar> out;
    out.depth = y.z();
    if (!(y.z() > 0)) {
        out.pixel = {Scalar(0), Scalar(0), false};
        return out;
    }
    const Scalar inv_z = Scalar(1) / y.z();
    out.pixel.u = snap_to_integer(k.fx * y.x() * inv_z + k.cx);
    out.pixel.v = snap_to_integer(k.fy * y.y() * inv_z + k.cy);
    out.pixel.valid = k.contains(out.pixel.u, out.pixel.v);
    out.du_ddepth = k.fx * (a.x() * y.z() - y.x() * a.z()) * inv_z * inv_z;
    out.dv_ddepth = k.fy * (a.y() * y.z() - y.y() * a.z()) * inv_z * inv_z;
    return out;
}

template <typename Scalar>
PixelCoord<Scalar> project_pixel(const PixelCoord<Scalar> &p, Scalar depth, const Intrinsics<Scalar> &k,
                                 const Pose<Scalar> &t) {
    if (!k.contains(p.u, p.v)) throw ContractViolation("project_pixel: source pixel outside the image");
    return reproject(p, depth, k, t).pixel;
}

template <typename Scalar>
struct Sample {
    Rgb<Scalar> value = Rgb<Scalar>::Zero();
    bool valid = false;
};

template <typename Scalar>
struct SampleWithGradient {
    Rgb<Scalar> value = Rgb<Scalar>::Zero();
    Rgb<Scalar> d_du = Rgb<Scalar>::Zero();
    Rgb<Scalar> d_dv = Rgb<Scalar>::Zero();
    bool valid = false;
};

namespace detail {

/// Bilinear stencil: the (up to) four neighbors with their weights. Neighbors with zero weight
/// are excluded so that sampling exactly on the last row/column stays in bounds.
struct Stencil {
    Eigen::Index x0 = 0, y0 = 0, x1 = 0, y1 = 0;
    double fx = 0, fy = 0;
    bool inside = false;
};

inline Stencil stencil(double u, double v, Eigen::Index rows, Eigen::Index cols) {
    Stencil s;
    if (!(u >= 0 && v >= 0 && u <= double(cols - 1) && v <= double(rows - 1))) return s;
    s.inside = true;
    s.x0 = static_cast<Eigen::Index>(std::floor(u));
    s.y0 = static_cast<Eigen::Index>(std::floor(v));
    s.fx = u - double(s.x0);
    s.fy = v - double(s.y0);
    s.x1 = s.fx > 0 ? s.x0 + 1 : s.x0;
    s.y1 = s.fy > 0 ? s.y0 + 1 : s.y0;
    return s;
}

} // namespace detail

/// Weighted average of the four neighbors of p. Invalid when p is outside the image or any
/// neighbor with non-zero weight is invalid.
template <typename Scalar>
Sample<Scalar> bilinear_sample(const BasicImage<Scalar> &img, const PixelCoord<Scalar> &p) {
    require(!img.empty(), "bilinear_sample: empty image");
    Sample<Scalar> out;
    const auto s = detail::stencil(double(p.u), double(p.v), img.rows(), img.cols());
    if (!p.valid || !s.inside) return out;
    const Scalar fx = Scalar(s.fx), fy = Scalar(s.fy);
    const Scalar w[4] = {(1 - fx) * (1 - fy), fx * (1 - fy), (1 - fx) * fy, fx * fy};
    const Eigen::Index xs[4] = {s.x0, s.x1, s.x0, s.x1};
    const Eigen::Index ys[4] = {s.y0, s.y0, s.y1, s.y1};
    out.valid = true;
    for (int i = 0; i < 4; ++i) {
        if (w[i] == Scalar(0)) continue;
        if (!img.valid(ys[i], xs[i])) {
            out.valid = false;
            return out;
        }
        for (int c = 0; c < 3; ++c) out.value[c] += w[i] * img.channel[c](ys[i], xs[i]);
    }
    return out;
}

/// Bilinear sample together with its partial derivatives along u and v. On the last column/row
/// the derivative uses the backward difference.
template <typename Scalar>
SampleWithGradient<Scalar> bilinear_sample_with_gradient(const BasicImage<Scalar> &img, const PixelCoord<Scalar> &p) {
    SampleWithGradient<Scalar> out;
    const Sample<Scalar> base = bilinear_sample(img, p);
    if (!base.valid) return out;
    out.value = base.value;
    out.valid = true;
    const auto s = detail::stencil(double(p.u), double(p.v), img.rows(), img.cols());
    const Scalar fx = Scalar(s.fx), fy = Scalar(s.fy);
    const Eigen::Index xa = s.x0 + 1 < img.cols() ? s.x0 : s.x0 - 1;
    const Eigen::Index ya = s.y0 + 1 < img.rows() ? s.y0 : s.y0 - 1;
    const Eigen::Index yb = std::min<Eigen::Index>(s.y0 + 1, img.rows() - 1);
    const Eigen::Index xb = std::min<Eigen::Index>(s.x0 + 1, img.cols() - 1);
    for (int c = 0; c < 3; ++c) {
        const auto &ch = img.channel[c];
        if (img.cols() > 1) {
            out.d_du[c] = (1 - fy) * (ch(s.y0, xa + 1) - ch(s.y0, xa)) + fy * (ch(yb, xa + 1) - ch(yb, xa));
        }
        if (img.rows() > 1) {
            out.d_dv[c] = (1 - fx) * (ch(ya + 1, s.x0) - ch(ya, s.x0)) + fx * (ch(ya + 1, xb) - ch(ya, xb));
        }
    }
    return out;
}

/// Per-pixel sampling positions produced by warping every pixel of a depth map into another
/// camera, with the derivative of the positions w.r.t. that pixel's depth.
struct SampleGrid {
    Field<double> u, v;
    Field<double> du_ddepth, dv_ddepth;
    PixelMask valid;

    Eigen::Index rows() const { return u.rows(); }
    Eigen::Index cols() const { return u.cols(); }
};

SampleGrid sample_grid(const DepthMap &depth, const Intrinsics<double> &k, const Pose<double> &t);

/// Uniform-depth grid, used by plane sweeps.
SampleGrid sample_grid(double depth, const Intrinsics<double> &k, const Pose<double> &t);

Image resample(const Image &src, const SampleGrid &grid);

/// Bilinear resampling of a scalar field. Samples with an invalid contributing neighbor or
/// outside the image are reported through `valid`.
Field<double> resample(const Field<double> &src, const SampleGrid &grid, PixelMask &valid);

/// I_{s->t}[p] = I_s<K T D(p) K^-1 p>.
Image warp_image(const Image &src, const DepthMap &depth, const Intrinsics<double> &k, const Pose<double> &t);

/// Warped image plus d(warped color)/d(depth) at every pixel.
struct WarpWithJacobian {
    Image image;
    std::array<Field<double>, 3> dcolor_ddepth;
};

WarpWithJacobian warp_image_with_jacobian(const Image &src, const SampleGrid &grid);

void validate_depth(const DepthMap &depth, const char *what);

} // namespace motionloss
