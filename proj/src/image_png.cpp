#include "cpn/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <stdexcept>

namespace cpn {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

}  // namespace

ImageU8 read_png(const std::string& path) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) throw std::runtime_error("read_png: cannot open " + path);

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw std::runtime_error("read_png: out of memory");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw std::runtime_error("read_png: out of memory");
    }
    std::vector<png_bytep> rows;
    ImageU8 img;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw std::runtime_error("read_png: failed to decode " + path);
    }
    png_init_io(png, fp.get());
    png_read_info(png, info);

    png_set_strip_16(png);
    png_set_packing(png);
    png_set_expand(png);
    png_set_strip_alpha(png);
    if (png_get_color_type(png, info) == PNG_COLOR_TYPE_GRAY ||
        png_get_color_type(png, info) == PNG_COLOR_TYPE_GRAY_ALPHA) {
        png_set_gray_to_rgb(png);
    }
    png_read_update_info(png, info);

    img.width = static_cast<int>(png_get_image_width(png, info));
    img.height = static_cast<int>(png_get_image_height(png, info));
    img.data.assign(static_cast<std::size_t>(img.width) * img.height * 3, 0);
    rows.resize(img.height);
    for (int y = 0; y < img.height; ++y) {
        rows[y] = img.data.data() + static_cast<std::size_t>(y) * img.width * 3;
    }
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return img;
}

void write_png(const std::string& path, const ImageU8& img) {
    if (img.width < 1 || img.height < 1) {
        throw std::invalid_argument("write_png: empty image");
    }
    FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) throw std::runtime_error("write_png: cannot open " + path + " for writing");

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw std::runtime_error("write_png: out of memory");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw std::runtime_error("write_png: out of memory");
    }
    std::vector<png_bytep> rows(img.height);
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw std::runtime_error("write_png: failed to encode " + path);
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, img.width, img.height, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int y = 0; y < img.height; ++y) {
        rows[y] = const_cast<png_bytep>(img.data.data() +
                                        static_cast<std::size_t>(y) * img.width * 3);
    }
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

namespace {

inline const std::uint8_t* clamped_pixel(const ImageU8& img, int x, int y) {
    x = std::clamp(x, 0, img.width - 1);
    y = std::clamp(y, 0, img.height - 1);
    return img.pixel(x, y);
}

/// Bilinear read at continuous source coordinates with edge clamping.
inline void sample_bilinear(const ImageU8& img, float sx, float sy, std::uint8_t* out) {
    int x0 = static_cast<int>(std::floor(sx));
    int y0 = static_cast<int>(std::floor(sy));
    float fx = sx - x0;
    float fy = sy - y0;
    const std::uint8_t* p00 = clamped_pixel(img, x0, y0);
    const std::uint8_t* p10 = clamped_pixel(img, x0 + 1, y0);
    const std::uint8_t* p01 = clamped_pixel(img, x0, y0 + 1);
    const std::uint8_t* p11 = clamped_pixel(img, x0 + 1, y0 + 1);
    for (int c = 0; c < 3; ++c) {
        float top = p00[c] + fx * (p10[c] - p00[c]);
        float bot = p01[c] + fx * (p11[c] - p01[c]);
        float v = top + fy * (bot - top);
        out[c] = static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.f, 255.f)));
    }
}

}  // namespace

ImageU8 resize_bilinear(const ImageU8& img, int new_w, int new_h) {
    if (new_w < 1 || new_h < 1) throw std::invalid_argument("resize_bilinear: empty target");
    ImageU8 out(new_w, new_h);
    const float sx = static_cast<float>(img.width) / new_w;
    const float sy = static_cast<float>(img.height) / new_h;
    for (int y = 0; y < new_h; ++y) {
        for (int x = 0; x < new_w; ++x) {
            sample_bilinear(img, (x + 0.5f) * sx - 0.5f, (y + 0.5f) * sy - 0.5f,
                            out.pixel(x, y));
        }
    }
    return out;
}

ImageU8 crop_resize(const ImageU8& img, const BBox& crop, int out_w, int out_h) {
    if (crop.w <= 0.f || crop.h <= 0.f) {
        throw std::invalid_argument("crop_resize: degenerate crop box");
    }
    ImageU8 out(out_w, out_h);
    const float sx = crop.w / out_w;
    const float sy = crop.h / out_h;
    for (int y = 0; y < out_h; ++y) {
        for (int x = 0; x < out_w; ++x) {
            sample_bilinear(img, crop.x + (x + 0.5f) * sx - 0.5f, crop.y + (y + 0.5f) * sy - 0.5f,
                            out.pixel(x, y));
        }
    }
    return out;
}

}  // namespace cpn
