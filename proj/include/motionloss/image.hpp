// Copyright Contributors to the motionloss project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>

#include <array>

#include "motionloss/errors.hpp"

namespace motionloss {

/// Row-major H×W scalar grid; row index is v (image y), column index is u (image x).
template <typename Scalar>
using Field = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using PixelMask = Field<bool>;

/// Metric depth in meters, one value per pixel.
using DepthMap = Field<double>;

template <typename Scalar>
using Rgb = Eigen::Matrix<Scalar, 3, 1>;

/// Three-channel image with intensities in [0, 1] and a per-pixel validity flag.
template <typename Scalar>
struct BasicImage {
    std::array<Field<Scalar>, 3> channel;
    PixelMask valid;

    BasicImage() = default;
    BasicImage(Eigen::Index rows, Eigen::Index cols) {
        for (auto &c : channel) c = Field<Scalar>::Zero(rows, cols);
        valid = PixelMask::Constant(rows, cols, true);
    }

    static BasicImage constant(Eigen::Index rows, Eigen::Index cols, const Rgb<Scalar> &value) {
        BasicImage img(rows, cols);
        for (int c = 0; c < 3; ++c) img.channel[c].setConstant(value[c]);
        return img;
    }

    Eigen::Index rows() const { return valid.rows(); }
    Eigen::Index cols() const { return valid.cols(); }
    bool empty() const { return valid.size() == 0; }

    Rgb<Scalar> pixel(Eigen::Index v, Eigen::Index u) const {
        return {channel[0](v, u), channel[1](v, u), channel[2](v, u)};
    }
    void set_pixel(Eigen::Index v, Eigen::Index u, const Rgb<Scalar> &value) {
        for (int c = 0; c < 3; ++c) channel[c](v, u) = value[c];
    }

    bool operator==(const BasicImage &other) const {
        if (rows() != other.rows() || cols() != other.cols()) return false;
        for (int c = 0; c < 3; ++c)
            if ((channel[c] != other.channel[c]).any()) return false;
        return (valid == other.valid).all();
    }
};

using Image = BasicImage<double>;

/// Per-pixel non-negative error with validity.
struct ErrorMap {
    Field<double> value;
    PixelMask valid;

    ErrorMap() = default;
    ErrorMap(Eigen::Index rows, Eigen::Index cols)
        : value(Field<double>::Zero(rows, cols)), valid(PixelMask::Constant(rows, cols, true)) {}

    Eigen::Index rows() const { return value.rows(); }
    Eigen::Index cols() const { return value.cols(); }
};

template <typename A, typename B>
bool same_shape(const A &a, const B &b) {
    return a.rows() == b.rows() && a.cols() == b.cols();
}

template <typename A, typename B>
void require_same_shape(const A &a, const B &b, const char *what) {
    if (!same_shape(a, b)) throw ContractViolation(std::string("dimension mismatch: ") + what);
}

} // namespace motionloss
