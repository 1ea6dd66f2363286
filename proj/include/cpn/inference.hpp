#pragma once

#include <array>
#include <iosfwd>
#include <vector>

#include "cpn/geometry.hpp"
#include "cpn/image.hpp"
#include "cpn/network.hpp"
#include "cpn/templates.hpp"

namespace cpn {

/// A candidate character box in original-image pixels.
struct Proposal {
    BBox box;
    float score = 0.f;     // softmax characterness, in [0, 1]
    int template_id = 0;   // 1..K-1
    float scale = 1.f;     // pyramid scale that produced it
};

struct PyramidConfig {
    float ratio = 0.8408964f;  // per-step scale factor, 2^(-1/4)
    float max_scale = 1.0f;
    float min_scale = 0.0f;        // 0: limited only by the receptive field
    float score_threshold = 0.5f;  // softmax probability floor
    float nms_iou = 0.5f;
    int max_proposals = 1000;
};

struct PyramidLevel {
    ImageU8 image;
    float scale = 1.f;
};

/// Geometric image pyramid; levels whose rescaled image no longer fits
/// the receptive field are dropped. Errors out when no scale fits.
std::vector<PyramidLevel> build_pyramid(const ImageU8& image, int r_w, int r_h,
                                        const PyramidConfig& config);

/// A coarse proposal still tied to the response-map unit it came from.
struct CoarseProposal {
    Proposal proposal;               // box in the scaled image's frame
    std::array<float, 4> regression; // the unit's 4 values for this template
};

/// Linear response-map decoding: unit p of template k becomes a box of
/// size m_k centered at stride * p + (R - 1) / 2, kept when its softmax
/// probability reaches the threshold.
std::vector<CoarseProposal> decode_responses(const HeadOutput<float>& head, int stride, int r_w,
                                             int r_h, const TemplateSet& templates,
                                             float threshold);

/// Inverse of encode_regression: applies (t_x, t_y, t_w, t_h) to P.
BBox decode_regression(const std::array<float, 4>& t, const BBox& p);

/// Greedy descending-score suppression; ties broken by earlier input
/// index. Output is sorted by score descending.
std::vector<Proposal> nms(const std::vector<Proposal>& proposals, float iou_threshold);

/// Full pipeline: pyramid, dense forward per level, decoding,
/// regression refinement, mapping back to original-image coordinates,
/// pooled NMS, truncation to max_proposals.
std::vector<Proposal> generate_proposals(const Model<float>& model, const ImageU8& image,
                                         const PyramidConfig& config,
                                         std::ostream* warnings = nullptr);

}  // namespace cpn
