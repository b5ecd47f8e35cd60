#include "rayvr/image.hpp"

#include <png.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <csetjmp>
#include <fstream>
#include <memory>
#include <sstream>

namespace rayvr {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

// libpng reports errors by longjmp; the handler records the message first.
struct PngErrorState {
    std::string message = "png: unknown error";
};

void png_error_handler(png_structp png, png_const_charp message) {
    if (auto* state = static_cast<PngErrorState*>(png_get_error_ptr(png))) state->message = message;
    png_longjmp(png, 1);
}
void png_warning_handler(png_structp, png_const_charp) {}

void png_append(png_structp png, png_bytep data, png_size_t length) {
    auto* out = static_cast<std::string*>(png_get_io_ptr(png));
    out->append(reinterpret_cast<const char*>(data), length);
}
void png_flush_noop(png_structp) {}

}  // namespace

static_assert(sizeof(Rgb8) == 3, "Rgb8 rows are handed to libpng directly");

void write_png(const std::filesystem::path& path, const LdrImage& image) {
    const std::string bytes = encode_png(image);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ImageIoError("cannot open '" + path.string() + "' for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw ImageIoError("failed writing '" + path.string() + "'");
}

std::string encode_png(const LdrImage& image) {
    if (image.width <= 0 || image.height <= 0) throw ImageIoError("png: empty image");
    std::string out;
    PngErrorState error;
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &error, png_error_handler, png_warning_handler);
    if (!png) throw ImageIoError("png: cannot allocate writer");
    png_infop info = png_create_info_struct(png);
    if (!info || setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw ImageIoError(error.message);
    }
    png_set_write_fn(png, &out, png_append, png_flush_noop);
    png_set_IHDR(png, info, static_cast<png_uint_32>(image.width), static_cast<png_uint_32>(image.height), 8,
                 PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_set_compression_level(png, 3);
    png_write_info(png, info);
    for (int y = 0; y < image.height; ++y) {
        png_write_row(png, reinterpret_cast<png_const_bytep>(&image.at(0, y)));
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    return out;
}

LdrImage read_png(const std::filesystem::path& path) {
    FilePtr file(std::fopen(path.string().c_str(), "rb"));
    if (!file) throw ImageIoError("cannot open '" + path.string() + "'");
    LdrImage image;
    PngErrorState error;
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &error, png_error_handler, png_warning_handler);
    if (!png) throw ImageIoError("png: cannot allocate reader");
    png_infop info = png_create_info_struct(png);
    if (!info || setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw ImageIoError(error.message + " in '" + path.string() + "'");
    }
    png_init_io(png, file.get());
    png_read_info(png, info);
    png_set_strip_16(png);
    png_set_strip_alpha(png);
    png_set_palette_to_rgb(png);
    png_set_expand_gray_1_2_4_to_8(png);
    png_set_gray_to_rgb(png);
    png_read_update_info(png, info);
    if (png_get_rowbytes(png, info) != static_cast<png_size_t>(png_get_image_width(png, info)) * 3) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw ImageIoError("png: unsupported pixel layout in '" + path.string() + "'");
    }
    image = LdrImage(static_cast<int>(png_get_image_width(png, info)), static_cast<int>(png_get_image_height(png, info)));
    for (int y = 0; y < image.height; ++y) png_read_row(png, reinterpret_cast<png_bytep>(&image.at(0, y)), nullptr);
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return image;
}

void write_pfm(const std::filesystem::path& path, const HdrImage& image) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ImageIoError("cannot open '" + path.string() + "' for writing");
    out << "PF\n" << image.width << " " << image.height << "\n-1.0\n";
    std::vector<float> row(static_cast<std::size_t>(image.width) * 3);
    for (int y = image.height - 1; y >= 0; --y) {
        for (int x = 0; x < image.width; ++x) {
            const Rgb& c = image.at(x, y);
            row[3 * x + 0] = static_cast<float>(c.r);
            row[3 * x + 1] = static_cast<float>(c.g);
            row[3 * x + 2] = static_cast<float>(c.b);
        }
        out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size() * sizeof(float)));
    }
}

HdrImage read_pfm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ImageIoError("cannot open '" + path.string() + "'");
    std::string magic;
    int width = 0, height = 0;
    double scale = 0.0;
    in >> magic >> width >> height >> scale;
    in.get();
    if (!in || (magic != "PF" && magic != "Pf") || width <= 0 || height <= 0 || scale == 0.0) {
        throw ImageIoError("malformed PFM header in '" + path.string() + "'");
    }
    const int channels = magic == "PF" ? 3 : 1;
    const bool little = scale < 0.0;
    const bool swap = little != (std::endian::native == std::endian::little);
    HdrImage image(width, height);
    std::vector<float> row(static_cast<std::size_t>(width) * channels);
    for (int y = height - 1; y >= 0; --y) {
        in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(row.size() * sizeof(float)));
        if (!in) throw ImageIoError("truncated PFM data in '" + path.string() + "'");
        if (swap) {
            for (float& f : row) {
                auto bits = std::bit_cast<std::uint32_t>(f);
                bits = ((bits & 0xffu) << 24) | ((bits & 0xff00u) << 8) | ((bits >> 8) & 0xff00u) | (bits >> 24);
                f = std::bit_cast<float>(bits);
            }
        }
        for (int x = 0; x < width; ++x) {
            if (channels == 3) {
                image.at(x, y) = {row[3 * x], row[3 * x + 1], row[3 * x + 2]};
            } else {
                image.at(x, y) = Rgb(row[x]);
            }
        }
    }
    return image;
}

double srgb_encode(double linear) {
    if (linear <= 0.0031308) return 12.92 * linear;
    return 1.055 * std::pow(linear, 1.0 / 2.4) - 0.055;
}

double srgb_decode(double encoded) {
    if (encoded <= 0.04045) return encoded / 12.92;
    return std::pow((encoded + 0.055) / 1.055, 2.4);
}

}  // namespace rayvr
