// Copyright Contributors to the motionloss project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>

#include "motionloss/image.hpp"
#include "motionloss/instances.hpp"

namespace motionloss {

/// Default depth quantization: 2 mm per unit, 131 m full scale.
inline constexpr double kMetersPerUnit = 0.002;

/// RGB as binary 16-bit PPM (maxval 65535). Intensities are rounded to the nearest level.
void write_ppm(const std::filesystem::path &path, const Image &img);
Image read_ppm(const std::filesystem::path &path);

/// Depth as binary 16-bit PGM plus a sidecar `<path>.txt` holding `meters_per_unit: <value>`.
/// Unit 0 marks an invalid pixel.
void write_depth(const std::filesystem::path &path, const DepthMap &depth, double meters_per_unit = kMetersPerUnit);
DepthMap read_depth(const std::filesystem::path &path, PixelMask *valid = nullptr);

/// 8-bit label PGM (0 = background).
void write_labels(const std::filesystem::path &path, const Field<int> &labels);
Field<int> read_labels(const std::filesystem::path &path);

/// Label image of an instance set: pixel value = instance id.
/// 16-bit PGM: 0 marks invalid pixels, otherwise 1 + round(65534 * min(error, 1)).
void write_error_map(const std::filesystem::path &path, const Field<double> &error, const PixelMask &valid);
Field<double> read_error_map(const std::filesystem::path &path, PixelMask *valid = nullptr);

Field<int> label_image(const InstanceSet &set, Eigen::Index rows, Eigen::Index cols);

void write_text(const std::filesystem::path &path, const std::string &text);

} // namespace motionloss
