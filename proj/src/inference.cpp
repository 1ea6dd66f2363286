#include "cpn/inference.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "cpn/parallel.hpp"

namespace cpn {

std::vector<PyramidLevel> build_pyramid(const ImageU8& image, int r_w, int r_h,
                                        const PyramidConfig& config) {
    if (config.ratio <= 0.f || config.ratio >= 1.f) {
        throw std::invalid_argument("build_pyramid: ratio must lie in (0, 1)");
    }
    std::vector<PyramidLevel> levels;
    float scale = config.max_scale;
    while (scale >= config.min_scale && scale > 0.f) {
        int w = static_cast<int>(std::floor(image.width * scale + 1e-6f));
        int h = static_cast<int>(std::floor(image.height * scale + 1e-6f));
        if (w < r_w || h < r_h) break;
        PyramidLevel level;
        level.scale = scale;
        level.image = (w == image.width && h == image.height) ? image
                                                              : resize_bilinear(image, w, h);
        levels.push_back(std::move(level));
        scale *= config.ratio;
    }
    if (levels.empty()) {
        throw std::invalid_argument("build_pyramid: image " + std::to_string(image.width) + "x" +
                                    std::to_string(image.height) +
                                    " smaller than receptive field at every scale");
    }
    return levels;
}

std::vector<CoarseProposal> decode_responses(const HeadOutput<float>& head, int stride, int r_w,
                                             int r_h, const TemplateSet& templates,
                                             float threshold) {
    const int K = head.scores.channels();
    const int h = head.scores.height(), w = head.scores.width();
    std::vector<CoarseProposal> out;
    std::vector<float> probs(K);
    for (int n = 0; n < head.scores.batch(); ++n) {
        for (int row = 0; row < h; ++row) {
            for (int col = 0; col < w; ++col) {
                float m = head.scores.at(n, 0, row, col);
                for (int k = 1; k < K; ++k) m = std::max(m, head.scores.at(n, k, row, col));
                float sum = 0.f;
                for (int k = 0; k < K; ++k) {
                    probs[k] = std::exp(head.scores.at(n, k, row, col) - m);
                    sum += probs[k];
                }
                for (int k = 1; k < K; ++k) {  // class ids; K itself is background
                    float p = probs[k - 1] / sum;
                    if (p < threshold) continue;
                    float cx = stride * static_cast<float>(col) + (r_w - 1) * 0.5f;
                    float cy = stride * static_cast<float>(row) + (r_h - 1) * 0.5f;
                    const auto& m_k = templates.sizes[k - 1];
                    CoarseProposal cp;
                    cp.proposal.box = {cx - (m_k.first - 1.f) * 0.5f,
                                       cy - (m_k.second - 1.f) * 0.5f, m_k.first, m_k.second};
                    cp.proposal.score = p;
                    cp.proposal.template_id = k;
                    cp.proposal.scale = 1.f;
                    const int block = K + 4 * (k - 1);
                    for (int d = 0; d < 4; ++d) {
                        cp.regression[d] = head.regress.at(n, block - K + d, row, col);
                    }
                    out.push_back(cp);
                }
            }
        }
    }
    return out;
}

BBox decode_regression(const std::array<float, 4>& t, const BBox& p) {
    if (p.w <= 0.f || p.h <= 0.f) {
        throw std::invalid_argument("decode_regression: nonpositive source box size");
    }
    BBox g;
    g.x = p.x + t[0] * p.w;
    g.y = p.y + t[1] * p.h;
    g.w = p.w * std::exp(t[2]);
    g.h = p.h * std::exp(t[3]);
    return g;
}

std::vector<Proposal> nms(const std::vector<Proposal>& proposals, float iou_threshold) {
    std::vector<int> order(proposals.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        if (proposals[a].score != proposals[b].score) {
            return proposals[a].score > proposals[b].score;
        }
        return a < b;
    });
    std::vector<Proposal> kept;
    for (int idx : order) {
        bool suppressed = false;
        for (const auto& k : kept) {
            if (iou(proposals[idx].box, k.box) > iou_threshold) {
                suppressed = true;
                break;
            }
        }
        if (!suppressed) kept.push_back(proposals[idx]);
    }
    return kept;
}

std::vector<Proposal> generate_proposals(const Model<float>& model, const ImageU8& image,
                                         const PyramidConfig& config, std::ostream* warnings) {
    auto levels = build_pyramid(image, model.spec.input_w, model.spec.input_h, config);

    std::vector<std::vector<Proposal>> per_level(levels.size());
    std::vector<int> dropped(levels.size(), 0);
    parallel_for(static_cast<int>(levels.size()), [&](int li) {
        const auto& level = levels[li];
        HeadOutput<float> head = forward_full(model, image_to_tensor<float>(level.image));
        auto coarse = decode_responses(head, model.stride, model.spec.input_w,
                                       model.spec.input_h, model.templates,
                                       config.score_threshold);
        auto& out = per_level[li];
        out.reserve(coarse.size());
        for (const auto& cp : coarse) {
            bool finite = true;
            for (float v : cp.regression) finite = finite && std::isfinite(v);
            if (!finite) {
                ++dropped[li];
                continue;
            }
            Proposal p = cp.proposal;
            p.box = decode_regression(cp.regression, p.box);
            p.scale = level.scale;
            // back to original-image pixels
            p.box.x /= level.scale;
            p.box.y /= level.scale;
            p.box.w /= level.scale;
            p.box.h /= level.scale;
            out.push_back(p);
        }
    });

    std::vector<Proposal> pooled;
    for (auto& lv : per_level) pooled.insert(pooled.end(), lv.begin(), lv.end());
    int total_dropped = std::accumulate(dropped.begin(), dropped.end(), 0);
    if (total_dropped > 0 && warnings) {
        *warnings << "generate_proposals: dropped " << total_dropped
                  << " proposals with non-finite regression\n";
    }

    std::vector<Proposal> kept = nms(pooled, config.nms_iou);
    if (static_cast<int>(kept.size()) > config.max_proposals) {
        kept.resize(config.max_proposals);
    }
    return kept;
}

}  // namespace cpn
