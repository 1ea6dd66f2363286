#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "cpn/geometry.hpp"

namespace cpn {

/// How the per-template patch size is derived from an aspect ratio.
/// `aspect` keeps the receptive field's longer side and shrinks the
/// other to match the ratio; `eq3_literal` evaluates the published
/// formula verbatim.
enum class TemplateSizeMode { aspect, eq3_literal };

/// K-1 aspect-ratio templates plus a background class. Class ids are
/// 1-based: template k has ratio aspect_ratios[k-1] and patch size
/// sizes[k-1]; background is class K.
struct TemplateSet {
    std::vector<float> aspect_ratios;               // ascending, width/height
    std::vector<std::pair<float, float>> sizes;     // m_k as (w, h) pixels
    int num_classes = 0;                            // K including background

    int background_class() const { return num_classes; }
    int template_count() const { return num_classes - 1; }
};

/// Patch size m_k for one aspect ratio at receptive field (R_w, R_h).
std::pair<float, float> template_size(float ratio, int r_w, int r_h,
                                      TemplateSizeMode mode = TemplateSizeMode::aspect);

/// One-dimensional k-means on log aspect ratio over the truth boxes,
/// K-1 clusters. Deterministic: centers start at quantiles of the
/// sorted ratios and Lloyd iterations run to a fixed point.
TemplateSet cluster_templates(const std::vector<BBox>& truth_boxes, int K, int r_w, int r_h,
                              TemplateSizeMode mode = TemplateSizeMode::aspect);

/// Builds a template set from explicit ratio centers.
TemplateSet make_template_set(std::vector<float> ratios, int K, int r_w, int r_h,
                              TemplateSizeMode mode = TemplateSizeMode::aspect);

/// Nearest template (1-based class id) by log-ratio distance; scale
/// invariant by construction.
int assign_template(const TemplateSet& templates, float aspect_ratio);

}  // namespace cpn
