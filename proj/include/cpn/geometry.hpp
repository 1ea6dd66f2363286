#pragma once

#include <algorithm>
#include <stdexcept>

namespace cpn {

/// Axis-aligned rectangle, top-left corner plus size, in pixel units.
struct BBox {
    float x = 0.f;
    float y = 0.f;
    float w = 0.f;
    float h = 0.f;

    float area() const { return w * h; }
    float cx() const { return x + 0.5f * w; }
    float cy() const { return y + 0.5f * h; }
    float aspect() const { return w / h; }  // width / height

    static BBox from_center(float cx, float cy, float w, float h) {
        return {cx - 0.5f * w, cy - 0.5f * h, w, h};
    }
};

inline float intersection_area(const BBox& a, const BBox& b) {
    float iw = std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x);
    float ih = std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y);
    if (iw <= 0.f || ih <= 0.f) return 0.f;
    return iw * ih;
}

/// Intersection over union; 0 for disjoint boxes. Degenerate boxes are
/// rejected so silent zero-area unions cannot slip through.
inline float iou(const BBox& a, const BBox& b) {
    if (a.w <= 0.f || a.h <= 0.f || b.w <= 0.f || b.h <= 0.f) {
        throw std::invalid_argument("iou: degenerate box (nonpositive width or height)");
    }
    float inter = intersection_area(a, b);
    float uni = a.area() + b.area() - inter;
    return inter / uni;
}

}  // namespace cpn
