#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cpn/annotations.hpp"

namespace cpn {

/// Procedural glyph-scene generator. Glyphs are simple strokes (bars,
/// boxes, L/T/H/+ shapes) at mixed aspect ratios on textured,
/// optionally gradient-lit backgrounds; the hard cases are toggled by
/// touching_pair_prob (connected glyph pairs) and broken_glyph_prob
/// (one glyph split into separated parts, still one annotation box).
struct SynthConfig {
    std::uint64_t seed = 7;
    int min_image = 160;
    int max_image = 224;
    int min_glyphs = 2;
    int max_glyphs = 5;
    float min_glyph = 32.f;  // longer-side range, pixels
    float max_glyph = 64.f;
    std::vector<float> aspect_ratios{0.5f, 1.f, 2.f};
    std::vector<float> aspect_weights{1.f, 1.f, 1.f};
    float aspect_jitter = 0.06f;  // log-uniform ratio jitter
    bool textured_background = true;
    bool illumination_gradient = true;
    float touching_pair_prob = 0.2f;
    float broken_glyph_prob = 0.2f;
};

/// Scene `index` of the stream defined by config.seed; the same
/// (config, index) pair always renders identical pixels and boxes.
AnnotatedImage synth_scene(const SynthConfig& config, int index);

/// Renders `count` scenes into out_dir as scene_NNNNN.png plus an
/// annotations.txt, and returns the annotation records.
std::vector<ImageAnnotations> synth_generate(const SynthConfig& config, int count,
                                             const std::string& out_dir);

}  // namespace cpn
