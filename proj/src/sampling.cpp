#include "cpn/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>
#include <stdexcept>

namespace cpn {

std::array<float, 4> encode_regression(const BBox& p, const BBox& g) {
    if (p.w <= 0.f || p.h <= 0.f || g.w <= 0.f || g.h <= 0.f) {
        throw std::invalid_argument("encode_regression: nonpositive box size");
    }
    return {(g.x - p.x) / p.w, (g.y - p.y) / p.h, std::log(g.w / p.w), std::log(g.h / p.h)};
}

BBox expand_to_aspect(const BBox& box, float target_aspect) {
    BBox e = box;
    if (box.w / box.h < target_aspect) {
        float w = box.h * target_aspect;
        e.x -= 0.5f * (w - box.w);
        e.w = w;
    } else {
        float h = box.w / target_aspect;
        e.y -= 0.5f * (h - box.h);
        e.h = h;
    }
    return e;
}

namespace {

/// Template-shaped box equivalent to crop: m_k scaled into the crop's
/// frame, sharing the crop center. This is the box the response-map
/// decoder will produce at test time, so targets are encoded against it.
BBox template_box_for_crop(const BBox& crop, const TemplateSet& templates, int class_id, int r_w,
                           int r_h) {
    const auto& m = templates.sizes[class_id - 1];
    float w = m.first * crop.w / static_cast<float>(r_w);
    float h = m.second * crop.h / static_cast<float>(r_h);
    return BBox::from_center(crop.cx(), crop.cy(), w, h);
}

/// Shifts the crop back inside the image when it pokes out; returns
/// false when the image is too small to hold it at all.
bool clamp_inside(BBox& crop, int img_w, int img_h) {
    if (crop.w > static_cast<float>(img_w) || crop.h > static_cast<float>(img_h)) return false;
    crop.x = std::clamp(crop.x, 0.f, img_w - crop.w);
    crop.y = std::clamp(crop.y, 0.f, img_h - crop.h);
    return true;
}

}  // namespace

std::vector<TrainingSample> sample_positives(const ImageU8& image, const std::vector<BBox>& truths,
                                             const TemplateSet& templates, int r_w, int r_h,
                                             const SamplerConfig& config, std::uint64_t seed,
                                             std::ostream* warnings) {
    std::vector<TrainingSample> out;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<float> jitter(-config.max_offset, config.max_offset);
    const float field_aspect = static_cast<float>(r_w) / static_cast<float>(r_h);

    for (std::size_t ti = 0; ti < truths.size(); ++ti) {
        const BBox& truth = truths[ti];
        if (truth.w <= 0.f || truth.h <= 0.f) {
            if (warnings) {
                *warnings << "sample_positives: skipping degenerate truth box " << ti << "\n";
            }
            continue;
        }
        const int class_id = assign_template(templates, truth.aspect());
        const BBox expanded = expand_to_aspect(truth, field_aspect);

        for (int s = 0; s <= config.shift_count; ++s) {
            BBox crop = expanded;
            if (s > 0) {
                crop.x += jitter(rng) * expanded.w;
                crop.y += jitter(rng) * expanded.h;
            }
            if (!clamp_inside(crop, image.width, image.height)) {
                if (warnings && s == 0) {
                    *warnings << "sample_positives: image too small for truth box " << ti << "\n";
                }
                continue;
            }
            BBox source = template_box_for_crop(crop, templates, class_id, r_w, r_h);
            if (iou(source, truth) <= config.min_iou) continue;

            TrainingSample sample;
            sample.patch = crop_resize(image, crop, r_w, r_h);
            sample.class_id = class_id;
            sample.positive = true;
            sample.source_box = source;
            sample.truth_box = truth;
            sample.target = encode_regression(source, truth);
            out.push_back(std::move(sample));
        }
    }
    return out;
}

std::vector<TrainingSample> sample_negatives(const ImageU8& image, const std::vector<BBox>& truths,
                                             const TemplateSet& templates, int r_w, int r_h,
                                             int count, const SamplerConfig& config,
                                             std::uint64_t seed, std::ostream* warnings) {
    std::vector<TrainingSample> out;
    if (count <= 0) return out;
    std::mt19937_64 rng(seed);

    const float field_aspect = static_cast<float>(r_w) / static_cast<float>(r_h);
    std::vector<BBox> expanded;
    expanded.reserve(truths.size());
    for (const auto& t : truths) {
        if (t.w > 0.f && t.h > 0.f) expanded.push_back(expand_to_aspect(t, field_aspect));
    }

    const float base = static_cast<float>(std::max(r_w, r_h));
    float min_side = config.neg_min_size * base;
    float max_side = std::min(config.neg_max_size * base,
                              static_cast<float>(std::min(image.width, image.height)));
    if (max_side < min_side) min_side = max_side;
    if (max_side < 2.f) {
        if (warnings) *warnings << "sample_negatives: image too small for any crop\n";
        return out;
    }
    std::uniform_real_distribution<float> side_dist(min_side, max_side);

    long attempts = static_cast<long>(config.neg_retry_factor) * count;
    while (static_cast<int>(out.size()) < count && attempts-- > 0) {
        float side = side_dist(rng);
        float w = side * std::min(1.f, field_aspect);
        float h = side * std::min(1.f, 1.f / field_aspect);
        std::uniform_real_distribution<float> xd(0.f, image.width - w);
        std::uniform_real_distribution<float> yd(0.f, image.height - h);
        BBox crop{xd(rng), yd(rng), w, h};

        bool clear = true;
        for (const auto& e : expanded) {
            if (iou(crop, e) >= config.neg_max_iou) {
                clear = false;
                break;
            }
        }
        if (!clear) continue;

        TrainingSample sample;
        sample.patch = crop_resize(image, crop, r_w, r_h);
        sample.class_id = templates.background_class();
        sample.positive = false;
        sample.source_box = crop;
        out.push_back(std::move(sample));
    }
    if (static_cast<int>(out.size()) < count && warnings) {
        *warnings << "sample_negatives: placed " << out.size() << " of " << count
                  << " requested negatives\n";
    }
    return out;
}

}  // namespace cpn
