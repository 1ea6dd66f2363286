#include <doctest.h>

#include <random>
#include <sstream>

#include "cpn/inference.hpp"
#include "cpn/sampling.hpp"

using cpn::BBox;

namespace {

cpn::ImageU8 gray_image(int w, int h, std::uint8_t v = 128) {
    cpn::ImageU8 img(w, h);
    std::fill(img.data.begin(), img.data.end(), v);
    return img;
}

cpn::TemplateSet three_templates() { return cpn::make_template_set({0.5f, 1.f, 2.f}, 4, 29, 29); }

}  // namespace

TEST_CASE("encode_regression identity and direct evaluations") {
    BBox p{0, 0, 10, 10};
    auto zero = cpn::encode_regression(p, p);
    for (float v : zero) CHECK(v == 0.f);

    auto shift = cpn::encode_regression(p, BBox{1, 2, 10, 10});
    CHECK(shift[0] == doctest::Approx(0.1f));
    CHECK(shift[1] == doctest::Approx(0.2f));
    CHECK(shift[2] == doctest::Approx(0.f));
    CHECK(shift[3] == doctest::Approx(0.f));

    auto grow = cpn::encode_regression(p, BBox{0, 0, 20, 10});
    CHECK(grow[2] == doctest::Approx(std::log(2.f)));
    CHECK(grow[3] == doctest::Approx(0.f));

    CHECK_THROWS_AS(cpn::encode_regression(BBox{0, 0, 0, 10}, p), std::invalid_argument);
}

TEST_CASE("encode/decode round trip over random box pairs") {
    std::mt19937 rng(5);
    std::uniform_real_distribution<float> pos(-50.f, 50.f), size(0.5f, 60.f);
    for (int i = 0; i < 2000; ++i) {
        BBox p{pos(rng), pos(rng), size(rng), size(rng)};
        BBox g{pos(rng), pos(rng), size(rng), size(rng)};
        BBox back = cpn::decode_regression(cpn::encode_regression(p, g), p);
        CHECK(std::abs(back.x - g.x) < 1e-4f);
        CHECK(std::abs(back.y - g.y) < 1e-4f);
        CHECK(std::abs(back.w - g.w) < 1e-4f * std::max(1.f, g.w));
        CHECK(std::abs(back.h - g.h) < 1e-4f * std::max(1.f, g.h));
    }
}

TEST_CASE("expand_to_aspect grows the shorter side symmetrically") {
    BBox thin{10, 10, 20, 40};
    BBox e = cpn::expand_to_aspect(thin, 1.f);
    CHECK(e.w == doctest::Approx(40.f));
    CHECK(e.h == doctest::Approx(40.f));
    CHECK(e.cx() == doctest::Approx(thin.cx()));
    CHECK(e.cy() == doctest::Approx(thin.cy()));

    BBox square{0, 0, 10, 10};
    BBox same = cpn::expand_to_aspect(square, 1.f);
    CHECK(same.w == 10.f);
    CHECK(same.h == 10.f);
}

TEST_CASE("unshifted sample of a square truth is the expanded truth with zero target") {
    auto img = gray_image(120, 120);
    std::vector<BBox> truths{{40, 40, 36, 36}};
    cpn::SamplerConfig cfg;
    cfg.shift_count = 0;
    auto samples = cpn::sample_positives(img, truths, three_templates(), 29, 29, cfg, 1);
    REQUIRE(samples.size() == 1);
    const auto& s = samples[0];
    CHECK(s.class_id == 2);  // the a=1 template
    CHECK(s.source_box.x == doctest::Approx(40.f));
    CHECK(s.source_box.y == doctest::Approx(40.f));
    CHECK(s.source_box.w == doctest::Approx(36.f));
    CHECK(s.source_box.h == doctest::Approx(36.f));
    for (float v : s.target) CHECK(v == doctest::Approx(0.f).epsilon(1e-6));
    CHECK(s.patch.width == 29);
    CHECK(s.patch.height == 29);
}

TEST_CASE("a 20x40 truth is assigned the thin (0.5) template") {
    auto img = gray_image(120, 120);
    std::vector<BBox> truths{{50, 30, 20, 40}};
    cpn::SamplerConfig cfg;
    cfg.shift_count = 0;
    auto samples = cpn::sample_positives(img, truths, three_templates(), 29, 29, cfg, 1);
    REQUIRE(samples.size() == 1);
    CHECK(samples[0].class_id == 1);
    // the thin template box scaled to the crop is exactly the truth
    CHECK(samples[0].source_box.w == doctest::Approx(20.f).epsilon(1e-4));
    CHECK(samples[0].source_box.h == doctest::Approx(40.f).epsilon(1e-4));
}

TEST_CASE("every retained positive keeps IoU > 0.85 with its truth; wide jitter is rejected") {
    auto img = gray_image(200, 200);
    std::vector<BBox> truths{{30, 30, 30, 30}, {100, 60, 20, 40}, {60, 130, 48, 24}};
    cpn::SamplerConfig cfg;
    cfg.shift_count = 12;
    cfg.max_offset = 0.4f;  // most jitters should fail the IoU gate
    auto samples = cpn::sample_positives(img, truths, three_templates(), 29, 29, cfg, 9);
    CHECK(!samples.empty());
    CHECK(samples.size() <
          truths.size() * static_cast<std::size_t>(cfg.shift_count + 1));  // rejections happened
    for (const auto& s : samples) {
        REQUIRE(s.positive);
        CHECK(cpn::iou(s.source_box, s.truth_box) > 0.85f);
        BBox back = cpn::decode_regression(s.target, s.source_box);
        CHECK(std::abs(back.x - s.truth_box.x) < 1e-3f);
        CHECK(std::abs(back.w - s.truth_box.w) < 1e-3f);
    }
}

TEST_CASE("degenerate truth boxes are skipped with a warning") {
    auto img = gray_image(100, 100);
    std::vector<BBox> truths{{10, 10, 0, 20}, {40, 40, 30, 30}};
    cpn::SamplerConfig cfg;
    cfg.shift_count = 0;
    std::ostringstream warn;
    auto samples = cpn::sample_positives(img, truths, three_templates(), 29, 29, cfg, 3, &warn);
    CHECK(samples.size() == 1);
    CHECK(warn.str().find("degenerate") != std::string::npos);
}

TEST_CASE("negatives stay below 0.1 IoU against every expanded positive") {
    auto img = gray_image(220, 220);
    std::vector<BBox> truths{{30, 30, 30, 30}, {120, 120, 20, 40}};
    cpn::SamplerConfig cfg;
    auto negs = cpn::sample_negatives(img, truths, three_templates(), 29, 29, 40, cfg, 17);
    CHECK(negs.size() == 40);
    for (const auto& n : negs) {
        CHECK(n.class_id == 4);
        CHECK_FALSE(n.positive);
        for (const auto& t : truths) {
            BBox e = cpn::expand_to_aspect(t, 1.f);
            CHECK(cpn::iou(n.source_box, e) < 0.1f);
        }
    }
}

TEST_CASE("an image fully covered by one truth yields zero negatives and a warning") {
    auto img = gray_image(40, 40);
    std::vector<BBox> truths{{0, 0, 40, 40}};
    cpn::SamplerConfig cfg;
    cfg.neg_retry_factor = 5;
    std::ostringstream warn;
    auto negs = cpn::sample_negatives(img, truths, three_templates(), 29, 29, 10, cfg, 3, &warn);
    CHECK(negs.empty());
    CHECK(warn.str().find("placed 0 of 10") != std::string::npos);
}
