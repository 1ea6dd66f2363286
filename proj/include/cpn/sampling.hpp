#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "cpn/geometry.hpp"
#include "cpn/image.hpp"
#include "cpn/templates.hpp"

namespace cpn {

/// One labeled patch. class_id is 1-based; the background class K
/// carries no regression target.
struct TrainingSample {
    ImageU8 patch;                  // resized to the receptive field
    int class_id = 0;               // 1..K
    std::array<float, 4> target{};  // (t_x, t_y, t_w, t_h), valid iff positive
    BBox source_box;                // P, the box the target is encoded against
    BBox truth_box;                 // G (positives only)
    bool positive = false;

    bool has_target() const { return positive; }
};

struct SamplerConfig {
    int shift_count = 4;        // jittered copies per truth box
    float max_offset = 0.1f;    // uniform shift bound, fraction of box size
    float min_iou = 0.85f;      // positive retention threshold against truth
    float neg_max_iou = 0.1f;   // negative ceiling against expanded positives
    float neg_min_size = 0.8f;  // crop side range, fraction of receptive field
    float neg_max_size = 2.5f;
    int neg_retry_factor = 50;  // attempts per requested negative
};

/// (G_x-P_x)/P_w, (G_y-P_y)/P_h, log(G_w/P_w), log(G_h/P_h).
std::array<float, 4> encode_regression(const BBox& p, const BBox& g);

/// Grows the shorter side symmetrically until the box aspect matches
/// target_aspect (w/h); already-matching boxes pass through.
BBox expand_to_aspect(const BBox& box, float target_aspect);

/// Positive samples for one image: per truth box, the expanded crop
/// plus shift_count jittered copies. Each retained sample is assigned
/// the truth's nearest aspect template, keeps IoU > min_iou between
/// its template-shaped source box and the truth, and carries the
/// regression target that maps the source box onto the truth.
std::vector<TrainingSample> sample_positives(const ImageU8& image,
                                             const std::vector<BBox>& truths,
                                             const TemplateSet& templates, int r_w, int r_h,
                                             const SamplerConfig& config, std::uint64_t seed,
                                             std::ostream* warnings = nullptr);

/// Background crops with IoU below neg_max_iou against every expanded
/// truth box. May return fewer than count after bounded retries.
std::vector<TrainingSample> sample_negatives(const ImageU8& image,
                                             const std::vector<BBox>& truths,
                                             const TemplateSet& templates, int r_w, int r_h,
                                             int count, const SamplerConfig& config,
                                             std::uint64_t seed,
                                             std::ostream* warnings = nullptr);

}  // namespace cpn
