#pragma once

#include <map>
#include <string>
#include <vector>

#include "cpn/geometry.hpp"
#include "cpn/inference.hpp"

namespace cpn {

/// Truth boxes keyed by image id; the ordered map keeps every sweep
/// deterministic.
using GroundTruth = std::map<std::string, std::vector<BBox>>;
using ProposalSet = std::map<std::string, std::vector<Proposal>>;

struct EvalResult {
    double recall = 0.0;
    long matched = 0;
    long total = 0;
};

/// Fraction of truth boxes matched by at least one of each image's
/// top_n highest-scored proposals at IoU strictly above the threshold.
/// Proposals are ranked per image. Every proposal's image id must
/// exist in the ground truth.
EvalResult recall(const ProposalSet& proposals, const GroundTruth& truths, double iou_threshold,
                  long top_n);

struct CurvePoint {
    std::string axis;  // "proposals" or "iou"
    double value = 0.0;
    double recall = 0.0;
};

struct CurveConfig {
    std::vector<long> proposal_grid{1, 2, 5, 10, 20, 50, 100, 200, 500, 1000};
    double fixed_iou = 0.5;
    std::vector<double> iou_grid{0.5, 0.55, 0.6, 0.65, 0.7, 0.75, 0.8, 0.85, 0.9};
    long fixed_top_n = 500;
};

/// Recall vs proposal count at fixed IoU, and recall vs IoU at fixed
/// proposal count.
std::vector<CurvePoint> recall_curves(const ProposalSet& proposals, const GroundTruth& truths,
                                      const CurveConfig& config = {});

/// Curve rows as CSV: axis,value,recall
void write_curves_csv(const std::string& path, const std::vector<CurvePoint>& points);

}  // namespace cpn
