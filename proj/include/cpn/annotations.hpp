#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "cpn/evaluation.hpp"
#include "cpn/geometry.hpp"
#include "cpn/image.hpp"
#include "cpn/inference.hpp"

namespace cpn {

struct BoxAnnotation {
    BBox box;
    std::string label;  // optional character label
};

/// All annotated boxes of one image file.
struct ImageAnnotations {
    std::string image_file;
    std::vector<BoxAnnotation> boxes;
};

/// Parses one record per line: `image_file x y w h label` (label
/// optional), UTF-8, '#' comment lines and blank lines skipped.
/// Malformed lines raise an error naming the line number. Records are
/// grouped by image file in first-seen order.
std::vector<ImageAnnotations> load_annotations(const std::string& path);

void save_annotations(const std::string& path, const std::vector<ImageAnnotations>& records);

/// Annotation boxes as evaluation ground truth.
GroundTruth annotations_to_ground_truth(const std::vector<ImageAnnotations>& records);

struct AnnotatedImage {
    std::string id;
    ImageU8 image;
    std::vector<BoxAnnotation> boxes;
};

/// Loads the pixels behind one annotation record and clamps its boxes
/// to the image bounds; any clamping is reported on `warnings`.
AnnotatedImage load_annotated_image(const std::string& dir, const ImageAnnotations& record,
                                    std::ostream* warnings = nullptr);

/// Proposal CSV: header then one row per proposal,
/// `image_id,x,y,w,h,score,template,scale`, score with 6 decimals.
void save_proposals_csv(const std::string& path, const ProposalSet& proposals);
ProposalSet load_proposals_csv(const std::string& path);

}  // namespace cpn
