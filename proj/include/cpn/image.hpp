#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cpn/geometry.hpp"
#include "cpn/tensor.hpp"

namespace cpn {

/// 8-bit RGB image, interleaved rows.
struct ImageU8 {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> data;  // height * width * 3

    ImageU8() = default;
    ImageU8(int w, int h) : width(w), height(h), data(static_cast<std::size_t>(w) * h * 3, 0) {}

    std::uint8_t* pixel(int x, int y) {
        return data.data() + (static_cast<std::size_t>(y) * width + x) * 3;
    }
    const std::uint8_t* pixel(int x, int y) const {
        return data.data() + (static_cast<std::size_t>(y) * width + x) * 3;
    }
};

ImageU8 read_png(const std::string& path);
void write_png(const std::string& path, const ImageU8& img);

/// Network input normalization: value / 255 - 0.5 per channel.
template <typename S>
Tensor<S> image_to_tensor(const ImageU8& img) {
    Tensor<S> t(1, 3, img.height, img.width);
    for (int c = 0; c < 3; ++c) {
        S* dst = t.data.data() + t.offset(0, c, 0, 0);
        const std::uint8_t* src = img.data.data() + c;
        const std::size_t n = static_cast<std::size_t>(img.width) * img.height;
        for (std::size_t i = 0; i < n; ++i) dst[i] = S(src[i * 3]) / S(255) - S(0.5);
    }
    return t;
}

/// Bilinear resample with half-pixel centers.
ImageU8 resize_bilinear(const ImageU8& img, int new_w, int new_h);

/// Bilinear sample of an arbitrary (possibly fractional, possibly
/// out-of-bounds) crop window onto an out_w x out_h patch; source reads
/// are edge-clamped.
ImageU8 crop_resize(const ImageU8& img, const BBox& crop, int out_w, int out_h);

}  // namespace cpn
