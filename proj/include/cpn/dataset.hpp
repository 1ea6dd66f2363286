#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "cpn/annotations.hpp"
#include "cpn/sampling.hpp"
#include "cpn/templates.hpp"

namespace cpn {

struct DatasetConfig {
    SamplerConfig sampler;
    float neg_per_positive = 1.0f;  // negatives requested per kept positive
    std::uint64_t seed = 0;
};

/// Positive and negative samples over a set of annotated images.
/// Images are processed independently with per-image derived seeds, so
/// the result is deterministic regardless of worker count.
std::vector<TrainingSample> build_dataset(const std::vector<AnnotatedImage>& images,
                                          const TemplateSet& templates, int r_w, int r_h,
                                          const DatasetConfig& config,
                                          std::ostream* warnings = nullptr);

/// Derived per-stream seed (splitmix-style), shared by everything that
/// fans one master seed out to independent substreams.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace cpn
