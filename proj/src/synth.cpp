#include "cpn/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>
#include <stdexcept>

#include "cpn/geometry.hpp"
#include "cpn/sampling.hpp"

namespace cpn {

namespace {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

struct Rgb {
    std::uint8_t r, g, b;
};

void fill_rect(ImageU8& img, int x0, int y0, int w, int h, Rgb c) {
    int x1 = std::min(img.width, x0 + w);
    int y1 = std::min(img.height, y0 + h);
    x0 = std::max(0, x0);
    y0 = std::max(0, y0);
    for (int y = y0; y < y1; ++y) {
        std::uint8_t* p = img.pixel(x0, y);
        for (int x = x0; x < x1; ++x, p += 3) {
            p[0] = c.r;
            p[1] = c.g;
            p[2] = c.b;
        }
    }
}

enum class Shape { bar, box, ell, tee, aitch, cross };

const char* shape_name(Shape s) {
    switch (s) {
        case Shape::bar: return "bar";
        case Shape::box: return "box";
        case Shape::ell: return "L";
        case Shape::tee: return "T";
        case Shape::aitch: return "H";
        case Shape::cross: return "X";
    }
    return "?";
}

void draw_glyph(ImageU8& img, Shape shape, int x, int y, int w, int h, int t, Rgb c) {
    switch (shape) {
        case Shape::bar:
            fill_rect(img, x, y, w, h, c);
            break;
        case Shape::box:
            fill_rect(img, x, y, w, t, c);
            fill_rect(img, x, y + h - t, w, t, c);
            fill_rect(img, x, y, t, h, c);
            fill_rect(img, x + w - t, y, t, h, c);
            break;
        case Shape::ell:
            fill_rect(img, x, y, t, h, c);
            fill_rect(img, x, y + h - t, w, t, c);
            break;
        case Shape::tee:
            fill_rect(img, x, y, w, t, c);
            fill_rect(img, x + (w - t) / 2, y, t, h, c);
            break;
        case Shape::aitch:
            fill_rect(img, x, y, t, h, c);
            fill_rect(img, x + w - t, y, t, h, c);
            fill_rect(img, x, y + (h - t) / 2, w, t, c);
            break;
        case Shape::cross:
            fill_rect(img, x + (w - t) / 2, y, t, h, c);
            fill_rect(img, x, y + (h - t) / 2, w, t, c);
            break;
    }
}

/// Coarse value-noise mottling: a random low-resolution grid sampled
/// bilinearly across the image.
void add_mottling(ImageU8& img, std::mt19937_64& rng, float amplitude) {
    const int cell = 24;
    int gw = img.width / cell + 2, gh = img.height / cell + 2;
    std::vector<float> grid(static_cast<std::size_t>(gw) * gh);
    std::uniform_real_distribution<float> d(-amplitude, amplitude);
    for (auto& v : grid) v = d(rng);
    for (int y = 0; y < img.height; ++y) {
        float fy = static_cast<float>(y) / cell;
        int y0 = static_cast<int>(fy);
        float wy = fy - y0;
        for (int x = 0; x < img.width; ++x) {
            float fx = static_cast<float>(x) / cell;
            int x0 = static_cast<int>(fx);
            float wx = fx - x0;
            float v00 = grid[y0 * gw + x0], v10 = grid[y0 * gw + x0 + 1];
            float v01 = grid[(y0 + 1) * gw + x0], v11 = grid[(y0 + 1) * gw + x0 + 1];
            float v = (1 - wy) * ((1 - wx) * v00 + wx * v10) + wy * ((1 - wx) * v01 + wx * v11);
            std::uint8_t* p = img.pixel(x, y);
            for (int ch = 0; ch < 3; ++ch) {
                p[ch] = static_cast<std::uint8_t>(std::clamp(p[ch] + v, 0.f, 255.f));
            }
        }
    }
}

struct PlacedGlyph {
    BBox box;        // tight glyph box
    BBox expanded;   // square footprint used for spacing
    Shape shape;
};

}  // namespace

AnnotatedImage synth_scene(const SynthConfig& config, int index) {
    if (config.aspect_ratios.empty() || config.aspect_ratios.size() != config.aspect_weights.size()) {
        throw std::invalid_argument("synth_scene: aspect mixture misconfigured");
    }
    std::mt19937_64 rng(mix_seed(config.seed, static_cast<std::uint64_t>(index)));
    std::uniform_int_distribution<int> size_dist(config.min_image, config.max_image);
    const int W = size_dist(rng), H = size_dist(rng);

    AnnotatedImage scene;
    char name[32];
    std::snprintf(name, sizeof(name), "scene_%05d.png", index);
    scene.id = name;
    scene.image = ImageU8(W, H);

    std::uniform_int_distribution<int> base_dist(150, 225);
    Rgb base{static_cast<std::uint8_t>(base_dist(rng)), static_cast<std::uint8_t>(base_dist(rng)),
             static_cast<std::uint8_t>(base_dist(rng))};
    fill_rect(scene.image, 0, 0, W, H, base);
    if (config.textured_background) add_mottling(scene.image, rng, 14.f);

    std::uniform_int_distribution<int> glyph_count(config.min_glyphs, config.max_glyphs);
    std::discrete_distribution<int> aspect_pick(config.aspect_weights.begin(),
                                                config.aspect_weights.end());
    std::uniform_real_distribution<float> jitter(-config.aspect_jitter, config.aspect_jitter);
    std::uniform_real_distribution<float> side_dist(config.min_glyph, config.max_glyph);
    std::uniform_int_distribution<int> shape_dist(0, 5);
    std::uniform_int_distribution<int> ink_dist(10, 95);
    std::uniform_real_distribution<float> unit(0.f, 1.f);

    const int margin = 4;
    std::vector<PlacedGlyph> placed;

    auto make_dims = [&](float& w, float& h) {
        float a = config.aspect_ratios[aspect_pick(rng)] * std::exp(jitter(rng));
        float side = side_dist(rng);
        if (a < 1.f) {
            h = side;
            w = side * a;
        } else {
            w = side;
            h = side / a;
        }
    };

    auto try_place = [&](float w, float h, const PlacedGlyph* partner) -> bool {
        float e = std::max(w, h);
        if (e + 2 * margin > std::min(W, H)) return false;
        for (int attempt = 0; attempt < 40; ++attempt) {
            float x, y;
            if (partner) {
                // directly to the right of the partner, touching it
                x = partner->box.x + partner->box.w + unit(rng) * 2.f;
                y = partner->box.y + (partner->box.h - h) * unit(rng);
            } else {
                x = margin + unit(rng) * (W - 2 * margin - w);
                y = margin + unit(rng) * (H - 2 * margin - h);
            }
            BBox box{std::floor(x), std::floor(y), std::floor(w), std::floor(h)};
            if (box.w < 4 || box.h < 4) return false;
            BBox exp = expand_to_aspect(box, 1.f);
            if (exp.x < 1 || exp.y < 1 || exp.x + exp.w > W - 1 || exp.y + exp.h > H - 1) {
                if (partner) return false;
                continue;
            }
            bool clear = true;
            for (const auto& g : placed) {
                if (partner && &g == partner) continue;
                if (iou(exp, g.expanded) > 0.05f) {
                    clear = false;
                    break;
                }
            }
            if (!clear) {
                if (partner) return false;
                continue;
            }
            placed.push_back({box, exp, static_cast<Shape>(shape_dist(rng))});
            return true;
        }
        return false;
    };

    int want = glyph_count(rng);
    for (int gi = 0; gi < want; ++gi) {
        float w, h;
        make_dims(w, h);
        if (!try_place(w, h, nullptr)) continue;
        if (unit(rng) < config.touching_pair_prob) {
            float w2, h2;
            make_dims(w2, h2);
            try_place(w2, h2, &placed.back());
        }
    }

    for (const auto& g : placed) {
        Rgb ink{static_cast<std::uint8_t>(ink_dist(rng)), static_cast<std::uint8_t>(ink_dist(rng)),
                static_cast<std::uint8_t>(ink_dist(rng))};
        int x = static_cast<int>(g.box.x), y = static_cast<int>(g.box.y);
        int w = static_cast<int>(g.box.w), h = static_cast<int>(g.box.h);
        int t = std::max(2, static_cast<int>(std::lround(std::max(w, h) * 0.18)));
        t = std::min({t, w, h});
        draw_glyph(scene.image, g.shape, x, y, w, h, t, ink);
        if (unit(rng) < config.broken_glyph_prob && std::min(w, h) >= 12) {
            // split the glyph with a background-colored band; the
            // annotation still covers the whole glyph
            int gap = std::max(2, std::min(w, h) / 8);
            if (w >= h) {
                int gx = x + w / 2 - gap / 2;
                fill_rect(scene.image, gx, y, gap, h, base);
            } else {
                int gy = y + h / 2 - gap / 2;
                fill_rect(scene.image, x, gy, w, gap, base);
            }
        }
        scene.boxes.push_back({g.box, shape_name(g.shape)});
    }

    if (config.illumination_gradient) {
        std::uniform_real_distribution<float> gain(0.55f, 1.05f);
        float g0 = gain(rng), g1 = gain(rng);
        float ang = unit(rng) * 6.2831853f;
        float dx = std::cos(ang), dy = std::sin(ang);
        float lo = std::min({0.f, dx * W, dy * H, dx * W + dy * H});
        float hi = std::max({0.f, dx * W, dy * H, dx * W + dy * H});
        for (int y = 0; y < H; ++y) {
            for (int x = 0; x < W; ++x) {
                float u = (dx * x + dy * y - lo) / (hi - lo);
                float g = g0 + (g1 - g0) * u;
                std::uint8_t* p = scene.image.pixel(x, y);
                for (int c = 0; c < 3; ++c) {
                    p[c] = static_cast<std::uint8_t>(std::clamp(p[c] * g, 0.f, 255.f));
                }
            }
        }
    }

    if (config.textured_background) {
        std::uniform_int_distribution<int> noise(-6, 6);
        for (auto& v : scene.image.data) {
            v = static_cast<std::uint8_t>(std::clamp(v + noise(rng), 0, 255));
        }
    }
    return scene;
}

std::vector<ImageAnnotations> synth_generate(const SynthConfig& config, int count,
                                             const std::string& out_dir) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw std::runtime_error("synth_generate: cannot create " + out_dir);

    std::vector<ImageAnnotations> records;
    records.reserve(count);
    for (int i = 0; i < count; ++i) {
        AnnotatedImage scene = synth_scene(config, i);
        write_png(out_dir + "/" + scene.id, scene.image);
        ImageAnnotations rec;
        rec.image_file = scene.id;
        rec.boxes = scene.boxes;
        records.push_back(std::move(rec));
    }
    save_annotations(out_dir + "/annotations.txt", records);
    return records;
}

}  // namespace cpn
