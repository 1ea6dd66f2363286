#include <doctest.h>

#include <random>

#include "cpn/templates.hpp"

using cpn::BBox;

namespace {

std::vector<BBox> boxes_with_ratios(const std::vector<float>& ratios, float h = 20.f) {
    std::vector<BBox> out;
    for (float a : ratios) out.push_back({0.f, 0.f, a * h, h});
    return out;
}

}  // namespace

TEST_CASE("clustering separated ratio groups lands exactly on them") {
    auto boxes = boxes_with_ratios({0.5f, 0.5f, 1.0f, 1.0f, 2.0f, 2.0f});
    auto t = cpn::cluster_templates(boxes, 4, 29, 29);
    REQUIRE(t.aspect_ratios.size() == 3);
    CHECK(t.aspect_ratios[0] == doctest::Approx(0.5).epsilon(1e-5));
    CHECK(t.aspect_ratios[1] == doctest::Approx(1.0).epsilon(1e-5));
    CHECK(t.aspect_ratios[2] == doctest::Approx(2.0).epsilon(1e-5));
    CHECK(t.num_classes == 4);
    CHECK(t.background_class() == 4);
}

TEST_CASE("all-equal ratios with K=2 give a single center at that ratio") {
    auto boxes = boxes_with_ratios({1.5f, 1.5f, 1.5f});
    auto t = cpn::cluster_templates(boxes, 2, 29, 29);
    REQUIRE(t.aspect_ratios.size() == 1);
    CHECK(t.aspect_ratios[0] == doctest::Approx(1.5).epsilon(1e-5));
}

TEST_CASE("thin/square/flat mixture clusters in order") {
    std::mt19937 rng(3);
    std::uniform_real_distribution<float> jitter(0.93f, 1.07f);
    std::vector<BBox> boxes;
    for (int i = 0; i < 60; ++i) {
        float base = (i % 3 == 0) ? 0.5f : (i % 3 == 1) ? 1.0f : 2.0f;
        boxes.push_back({0.f, 0.f, base * jitter(rng) * 20.f, 20.f});
    }
    auto t = cpn::cluster_templates(boxes, 4, 29, 29);
    REQUIRE(t.aspect_ratios.size() == 3);
    CHECK(t.aspect_ratios[0] < 0.7f);
    CHECK(t.aspect_ratios[1] > 0.8f);
    CHECK(t.aspect_ratios[1] < 1.25f);
    CHECK(t.aspect_ratios[2] > 1.5f);
}

TEST_CASE("clustering wants at least K-1 boxes") {
    auto boxes = boxes_with_ratios({1.0f, 2.0f});
    CHECK_THROWS_AS(cpn::cluster_templates(boxes, 4, 29, 29), std::invalid_argument);
}

TEST_CASE("template_size, aspect-preserving default") {
    auto square = cpn::template_size(1.f, 29, 29);
    CHECK(square.first == doctest::Approx(29.f));
    CHECK(square.second == doctest::Approx(29.f));

    auto thin = cpn::template_size(0.5f, 29, 29);
    CHECK(thin.first == doctest::Approx(14.5f));
    CHECK(thin.second == doctest::Approx(29.f));

    auto flat = cpn::template_size(2.f, 29, 29);
    CHECK(flat.first == doctest::Approx(29.f));
    CHECK(flat.second == doctest::Approx(14.5f));
}

TEST_CASE("template_size, literal published formula") {
    auto thin = cpn::template_size(0.5f, 29, 29, cpn::TemplateSizeMode::eq3_literal);
    CHECK(thin.first == doctest::Approx(7.25f));
    CHECK(thin.second == doctest::Approx(29.f));

    auto flat = cpn::template_size(2.f, 29, 29, cpn::TemplateSizeMode::eq3_literal);
    CHECK(flat.first == doctest::Approx(29.f));
    CHECK(flat.second == doctest::Approx(7.25f));
}

TEST_CASE("template_size rejects nonpositive ratios") {
    CHECK_THROWS_AS(cpn::template_size(0.f, 29, 29), std::invalid_argument);
    CHECK_THROWS_AS(cpn::template_size(-1.f, 29, 29), std::invalid_argument);
}

TEST_CASE("template assignment picks the nearest log ratio and is scale invariant") {
    auto t = cpn::make_template_set({0.5f, 1.f, 2.f}, 4, 29, 29);
    CHECK(cpn::assign_template(t, 0.5f) == 1);
    CHECK(cpn::assign_template(t, 1.f) == 2);
    CHECK(cpn::assign_template(t, 2.f) == 3);
    CHECK(cpn::assign_template(t, 0.55f) == 1);
    CHECK(cpn::assign_template(t, 1.9f) == 3);

    std::mt19937 rng(7);
    std::uniform_real_distribution<float> ratio(0.3f, 3.f), scale(0.01f, 100.f);
    for (int i = 0; i < 200; ++i) {
        float a = ratio(rng);
        BBox box{0.f, 0.f, a * 10.f, 10.f};
        float s = scale(rng);
        BBox scaled{0.f, 0.f, box.w * s, box.h * s};
        CHECK(cpn::assign_template(t, box.aspect()) ==
              cpn::assign_template(t, scaled.aspect()));
    }
}
