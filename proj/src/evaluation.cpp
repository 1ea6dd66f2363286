#include "cpn/evaluation.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <stdexcept>

namespace cpn {

namespace {

/// Per-image proposal order: score descending, stable in input order.
std::vector<int> ranked_order(const std::vector<Proposal>& props) {
    std::vector<int> order(props.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return props[a].score > props[b].score; });
    return order;
}

}  // namespace

EvalResult recall(const ProposalSet& proposals, const GroundTruth& truths, double iou_threshold,
                  long top_n) {
    for (const auto& [id, _] : proposals) {
        if (!truths.count(id)) {
            throw std::invalid_argument("recall: proposal image id '" + id +
                                        "' not present in ground truth");
        }
    }
    EvalResult result;
    for (const auto& [id, boxes] : truths) {
        result.total += static_cast<long>(boxes.size());
        auto it = proposals.find(id);
        if (it == proposals.end()) continue;
        const auto& props = it->second;
        auto order = ranked_order(props);
        long n = std::min<long>(top_n, static_cast<long>(order.size()));
        for (const auto& truth : boxes) {
            for (long i = 0; i < n; ++i) {
                if (iou(props[order[i]].box, truth) > iou_threshold) {
                    ++result.matched;
                    break;
                }
            }
        }
    }
    if (result.total == 0) throw std::invalid_argument("recall: ground truth has no boxes");
    result.recall = static_cast<double>(result.matched) / static_cast<double>(result.total);
    return result;
}

std::vector<CurvePoint> recall_curves(const ProposalSet& proposals, const GroundTruth& truths,
                                      const CurveConfig& config) {
    std::vector<CurvePoint> points;
    for (long n : config.proposal_grid) {
        EvalResult r = recall(proposals, truths, config.fixed_iou, n);
        points.push_back({"proposals", static_cast<double>(n), r.recall});
    }
    for (double t : config.iou_grid) {
        EvalResult r = recall(proposals, truths, t, config.fixed_top_n);
        points.push_back({"iou", t, r.recall});
    }
    return points;
}

void write_curves_csv(const std::string& path, const std::vector<CurvePoint>& points) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw std::runtime_error("write_curves_csv: cannot open " + path);
    std::fprintf(f, "axis,value,recall\n");
    for (const auto& p : points) {
        std::fprintf(f, "%s,%g,%.6f\n", p.axis.c_str(), p.value, p.recall);
    }
    std::fclose(f);
}

}  // namespace cpn
