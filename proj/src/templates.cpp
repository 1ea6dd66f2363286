#include "cpn/templates.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace cpn {

std::pair<float, float> template_size(float ratio, int r_w, int r_h, TemplateSizeMode mode) {
    if (ratio <= 0.f) {
        throw std::invalid_argument("template_size: nonpositive aspect ratio " +
                                    std::to_string(ratio));
    }
    if (mode == TemplateSizeMode::eq3_literal) {
        if (ratio < 1.f) return {r_w * (1.f - ratio) / 2.f, static_cast<float>(r_h)};
        return {static_cast<float>(r_w), r_h * (1.f - 1.f / ratio) / 2.f};
    }
    if (ratio < 1.f) return {r_w * ratio, static_cast<float>(r_h)};
    return {static_cast<float>(r_w), r_h / ratio};
}

TemplateSet make_template_set(std::vector<float> ratios, int K, int r_w, int r_h,
                              TemplateSizeMode mode) {
    if (static_cast<int>(ratios.size()) != K - 1) {
        throw std::invalid_argument("make_template_set: expected K-1 ratios");
    }
    std::sort(ratios.begin(), ratios.end());
    TemplateSet t;
    t.num_classes = K;
    t.aspect_ratios = std::move(ratios);
    for (float a : t.aspect_ratios) t.sizes.push_back(template_size(a, r_w, r_h, mode));
    return t;
}

TemplateSet cluster_templates(const std::vector<BBox>& truth_boxes, int K, int r_w, int r_h,
                              TemplateSizeMode mode) {
    const int k = K - 1;
    if (k < 1) throw std::invalid_argument("cluster_templates: K must be >= 2");
    if (static_cast<int>(truth_boxes.size()) < k) {
        throw std::invalid_argument("cluster_templates: need at least " + std::to_string(k) +
                                    " boxes, got " + std::to_string(truth_boxes.size()));
    }
    std::vector<double> logs;
    logs.reserve(truth_boxes.size());
    for (const auto& b : truth_boxes) {
        if (b.w <= 0.f || b.h <= 0.f) continue;
        logs.push_back(std::log(static_cast<double>(b.w) / b.h));
    }
    if (static_cast<int>(logs.size()) < k) {
        throw std::invalid_argument("cluster_templates: fewer than K-1 non-degenerate boxes");
    }
    std::sort(logs.begin(), logs.end());

    // Quantile initialization, then Lloyd iterations to a fixed point.
    std::vector<double> centers(k);
    const std::size_t n = logs.size();
    for (int i = 0; i < k; ++i) {
        std::size_t idx = static_cast<std::size_t>((i + 0.5) * n / k);
        centers[i] = logs[std::min(idx, n - 1)];
    }
    std::vector<int> assign(n, -1);
    for (int iter = 0; iter < 1000; ++iter) {
        bool changed = false;
        std::vector<double> sum(k, 0.0);
        std::vector<int> cnt(k, 0);
        for (std::size_t i = 0; i < n; ++i) {
            int best = 0;
            double bd = std::abs(logs[i] - centers[0]);
            for (int c = 1; c < k; ++c) {
                double d = std::abs(logs[i] - centers[c]);
                if (d < bd) {
                    bd = d;
                    best = c;
                }
            }
            if (assign[i] != best) {
                assign[i] = best;
                changed = true;
            }
            sum[best] += logs[i];
            ++cnt[best];
        }
        for (int c = 0; c < k; ++c) {
            if (cnt[c] > 0) centers[c] = sum[c] / cnt[c];
        }
        if (!changed) break;
    }
    std::sort(centers.begin(), centers.end());

    std::vector<float> ratios;
    ratios.reserve(k);
    for (double c : centers) ratios.push_back(static_cast<float>(std::exp(c)));
    return make_template_set(std::move(ratios), K, r_w, r_h, mode);
}

int assign_template(const TemplateSet& templates, float aspect_ratio) {
    if (aspect_ratio <= 0.f) {
        throw std::invalid_argument("assign_template: nonpositive aspect ratio");
    }
    double la = std::log(static_cast<double>(aspect_ratio));
    int best = 1;
    double bd = std::abs(la - std::log(static_cast<double>(templates.aspect_ratios[0])));
    for (int k = 2; k <= templates.template_count(); ++k) {
        double d = std::abs(la - std::log(static_cast<double>(templates.aspect_ratios[k - 1])));
        if (d < bd) {
            bd = d;
            best = k;
        }
    }
    return best;
}

}  // namespace cpn
