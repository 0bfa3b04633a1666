// Copyright Contributors to the motionloss project
// SPDX-License-Identifier: Apache-2.0

#include "motionloss/io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <vector>

#include "motionloss/errors.hpp"

namespace motionloss {

namespace {

struct Netpbm {
    std::string magic;
    Eigen::Index width = 0, height = 0;
    int maxval = 0;
    std::vector<std::uint8_t> data;
};

std::string next_token(std::istream &in) {
    std::string token;
    while (in) {
        const int c = in.peek();
        if (c == '#') {
            std::string comment;
            std::getline(in, comment);
        } else if (std::isspace(c)) {
            in.get();
        } else {
            break;
        }
    }
    in >> token;
    return token;
}

Netpbm read_netpbm(const std::filesystem::path &path, const std::string &magic, int channels) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DomainError("cannot open " + path.string());
    Netpbm img;
    img.magic = next_token(in);
    if (img.magic != magic) throw DomainError(path.string() + ": expected " + magic + " header");
    try {
        img.width = std::stol(next_token(in));
        img.height = std::stol(next_token(in));
        img.maxval = std::stoi(next_token(in));
    } catch (const std::exception &) {
        throw DomainError(path.string() + ": malformed header");
    }
    if (img.width <= 0 || img.height <= 0 || img.maxval <= 0 || img.maxval > 65535)
        throw DomainError(path.string() + ": bad header values");
    in.get();
    const std::size_t bytes = std::size_t(img.width * img.height * channels) * (img.maxval > 255 ? 2 : 1);
    img.data.resize(bytes);
    in.read(reinterpret_cast<char *>(img.data.data()), std::streamsize(bytes));
    if (std::size_t(in.gcount()) != bytes) throw DomainError(path.string() + ": truncated pixel data");
    return img;
}

void write_netpbm(const std::filesystem::path &path, const std::string &magic, Eigen::Index width,
                  Eigen::Index height, int maxval, const std::vector<std::uint8_t> &data) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DomainError("cannot write " + path.string());
    out << magic << "\n" << width << " " << height << "\n" << maxval << "\n";
    out.write(reinterpret_cast<const char *>(data.data()), std::streamsize(data.size()));
}

void push16(std::vector<std::uint8_t> &data, std::uint16_t v) {
    data.push_back(std::uint8_t(v >> 8));
    data.push_back(std::uint8_t(v & 0xff));
}

std::uint16_t get16(const std::vector<std::uint8_t> &data, std::size_t i) {
    return std::uint16_t((data[2 * i] << 8) | data[2 * i + 1]);
}

std::filesystem::path sidecar(const std::filesystem::path &path) { return path.string() + ".txt"; }

} // namespace

void write_ppm(const std::filesystem::path &path, const Image &img) {
    std::vector<std::uint8_t> data;
    data.reserve(std::size_t(img.rows() * img.cols() * 6));
    for (Eigen::Index y = 0; y < img.rows(); ++y)
        for (Eigen::Index x = 0; x < img.cols(); ++x)
            for (int c = 0; c < 3; ++c) {
                const double v = std::clamp(img.channel[c](y, x), 0.0, 1.0);
                push16(data, std::uint16_t(std::lround(v * 65535.0)));
            }
    write_netpbm(path, "P6", img.cols(), img.rows(), 65535, data);
}

Image read_ppm(const std::filesystem::path &path) {
    const Netpbm p = read_netpbm(path, "P6", 3);
    Image img(p.height, p.width);
    std::size_t i = 0;
    for (Eigen::Index y = 0; y < p.height; ++y)
        for (Eigen::Index x = 0; x < p.width; ++x)
            for (int c = 0; c < 3; ++c, ++i)
                img.channel[c](y, x) = p.maxval > 255 ? get16(p.data, i) / double(p.maxval)
                                                      : p.data[i] / double(p.maxval);
    return img;
}

void write_depth(const std::filesystem::path &path, const DepthMap &depth, double meters_per_unit) {
    if (!(meters_per_unit > 0)) throw ContractViolation("write_depth: meters_per_unit must be positive");
    std::vector<std::uint8_t> data;
    data.reserve(std::size_t(depth.size() * 2));
    for (Eigen::Index y = 0; y < depth.rows(); ++y)
        for (Eigen::Index x = 0; x < depth.cols(); ++x) {
            const double d = depth(y, x);
            const long units = std::isfinite(d) && d > 0 ? std::lround(d / meters_per_unit) : 0;
            if (units > 65535) throw DomainError("write_depth: depth exceeds 16-bit range at this scale");
            push16(data, std::uint16_t(units));
        }
    write_netpbm(path, "P5", depth.cols(), depth.rows(), 65535, data);
    std::ostringstream meta;
    meta.precision(17);
    meta << "meters_per_unit: " << meters_per_unit << "\n";
    write_text(sidecar(path), meta.str());
}

DepthMap read_depth(const std::filesystem::path &path, PixelMask *valid) {
    std::ifstream meta(sidecar(path));
    if (!meta) throw DomainError("missing depth sidecar " + sidecar(path).string());
    std::string key;
    double scale = 0;
    meta >> key >> scale;
    if (key != "meters_per_unit:" || !(scale > 0)) throw DomainError("malformed depth sidecar " + sidecar(path).string());
    const Netpbm p = read_netpbm(path, "P5", 1);
    if (p.maxval <= 255) throw DomainError(path.string() + ": depth must be 16-bit");
    DepthMap depth(p.height, p.width);
    PixelMask ok(p.height, p.width);
    for (Eigen::Index i = 0; i < depth.size(); ++i) {
        const std::uint16_t u = get16(p.data, std::size_t(i));
        depth(i) = u * scale;
        ok(i) = u > 0;
    }
    if (valid) *valid = ok;
    return depth;
}

void write_labels(const std::filesystem::path &path, const Field<int> &labels) {
    std::vector<std::uint8_t> data;
    data.reserve(std::size_t(labels.size()));
    for (Eigen::Index y = 0; y < labels.rows(); ++y)
        for (Eigen::Index x = 0; x < labels.cols(); ++x) {
            const int l = labels(y, x);
            if (l < 0 || l > 255) throw DomainError("write_labels: label outside 0..255");
            data.push_back(std::uint8_t(l));
        }
    write_netpbm(path, "P5", labels.cols(), labels.rows(), 255, data);
}

Field<int> read_labels(const std::filesystem::path &path) {
    const Netpbm p = read_netpbm(path, "P5", 1);
    if (p.maxval > 255) throw DomainError(path.string() + ": labels must be 8-bit");
    Field<int> labels(p.height, p.width);
    for (Eigen::Index i = 0; i < labels.size(); ++i) labels(i) = p.data[std::size_t(i)];
    return labels;
}

void write_error_map(const std::filesystem::path &path, const Field<double> &error, const PixelMask &valid) {
    require_same_shape(error, valid, "write_error_map");
    std::vector<std::uint8_t> data;
    data.reserve(std::size_t(error.size() * 2));
    for (Eigen::Index y = 0; y < error.rows(); ++y)
        for (Eigen::Index x = 0; x < error.cols(); ++x) {
            const double e = error(y, x);
            if (valid(y, x) && !(e >= 0)) throw DomainError("write_error_map: negative or NaN error on a valid pixel");
            push16(data, valid(y, x) ? std::uint16_t(1 + std::lround(std::min(e, 1.0) * 65534.0)) : 0);
        }
    write_netpbm(path, "P5", error.cols(), error.rows(), 65535, data);
}

Field<double> read_error_map(const std::filesystem::path &path, PixelMask *valid) {
    const Netpbm p = read_netpbm(path, "P5", 1);
    if (p.maxval != 65535) throw DomainError(path.string() + ": error map must be 16-bit");
    Field<double> error = Field<double>::Zero(p.height, p.width);
    PixelMask ok(p.height, p.width);
    for (Eigen::Index i = 0; i < error.size(); ++i) {
        const std::uint16_t u = get16(p.data, std::size_t(i));
        ok(i) = u > 0;
        if (u > 0) error(i) = (u - 1) / 65534.0;
    }
    if (valid) *valid = ok;
    return error;
}

Field<int> label_image(const InstanceSet &set, Eigen::Index rows, Eigen::Index cols) {
    Field<int> labels = Field<int>::Zero(rows, cols);
    for (const auto &inst : set) {
        require_same_shape(labels, inst.mask, "label_image");
        labels = inst.mask.select(inst.id, labels);
    }
    return labels;
}

void write_text(const std::filesystem::path &path, const std::string &text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DomainError("cannot write " + path.string());
    out << text;
}

} // namespace motionloss
