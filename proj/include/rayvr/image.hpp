#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "rayvr/camera.hpp"
#include "rayvr/math.hpp"

namespace rayvr {

template <typename T>
struct Image {
    int width = 0;
    int height = 0;
    std::vector<T> pixels;

    Image() = default;
    Image(int w, int h, T fill = T{}) : width(w), height(h), pixels(static_cast<std::size_t>(w) * h, fill) {}
    explicit Image(ImageSize s, T fill = T{}) : Image(s.width, s.height, fill) {}

    ImageSize size() const { return {width, height}; }
    T& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
    const T& at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }

    friend bool operator==(const Image&, const Image&) = default;
};

using Rgb8 = std::array<std::uint8_t, 3>;
using HdrImage = Image<Rgb>;
using LdrImage = Image<Rgb8>;

class ImageIoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Concatenates two equally sized images horizontally (left | right).
template <typename T>
Image<T> side_by_side(const Image<T>& left, const Image<T>& right) {
    if (left.height != right.height) throw std::invalid_argument("side_by_side: height mismatch");
    Image<T> out(left.width + right.width, left.height);
    for (int y = 0; y < left.height; ++y) {
        for (int x = 0; x < left.width; ++x) out.at(x, y) = left.at(x, y);
        for (int x = 0; x < right.width; ++x) out.at(left.width + x, y) = right.at(x, y);
    }
    return out;
}

void write_png(const std::filesystem::path& path, const LdrImage& image);
/// Encodes to an in-memory PNG stream.
std::string encode_png(const LdrImage& image);
LdrImage read_png(const std::filesystem::path& path);

/// Portable float map (little-endian, bottom-to-top rows as the format requires).
void write_pfm(const std::filesystem::path& path, const HdrImage& image);
HdrImage read_pfm(const std::filesystem::path& path);

/// sRGB transfer function (IEC 61966-2-1) and its inverse on [0, 1].
double srgb_encode(double linear);
double srgb_decode(double encoded);

}  // namespace rayvr
