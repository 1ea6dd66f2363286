#include <doctest.h>

#include <random>

#include "cpn/evaluation.hpp"
#include "oracles.hpp"

using cpn::BBox;
using cpn::Proposal;

namespace {

Proposal prop(float x, float y, float w, float h, float score) {
    return Proposal{{x, y, w, h}, score, 1, 1.f};
}

/// Plain per-truth scan straight off the recall definition.
double recall_reference(const cpn::ProposalSet& props, const cpn::GroundTruth& truths,
                        double thr, long top_n) {
    long matched = 0, total = 0;
    for (const auto& [id, boxes] : truths) {
        total += static_cast<long>(boxes.size());
        std::vector<Proposal> ranked;
        if (auto it = props.find(id); it != props.end()) ranked = it->second;
        std::stable_sort(ranked.begin(), ranked.end(),
                         [](const Proposal& a, const Proposal& b) { return a.score > b.score; });
        if (static_cast<long>(ranked.size()) > top_n) ranked.resize(top_n);
        for (const auto& t : boxes) {
            for (const auto& p : ranked) {
                if (cpn::iou(p.box, t) > thr) {
                    ++matched;
                    break;
                }
            }
        }
    }
    return static_cast<double>(matched) / static_cast<double>(total);
}

}  // namespace

TEST_CASE("iou basics") {
    BBox a{0, 0, 10, 10};
    CHECK(cpn::iou(a, a) == 1.f);
    CHECK(cpn::iou(a, BBox{20, 0, 10, 10}) == 0.f);
    CHECK(cpn::iou(a, BBox{5, 0, 10, 10}) == doctest::Approx(1.f / 3.f));
    CHECK_THROWS_AS(cpn::iou(a, BBox{0, 0, 0, 10}), std::invalid_argument);
}

TEST_CASE("recall on proposals identical to truths is 1") {
    cpn::GroundTruth truths{{"a", {{0, 0, 10, 10}, {30, 30, 8, 12}}}};
    cpn::ProposalSet props{{"a", {prop(0, 0, 10, 10, 0.9f), prop(30, 30, 8, 12, 0.8f)}}};
    auto r = cpn::recall(props, truths, 0.5, 100);
    CHECK(r.recall == 1.0);
    CHECK(r.matched == 2);
    CHECK(r.total == 2);
}

TEST_CASE("recall with no proposals is 0") {
    cpn::GroundTruth truths{{"a", {{0, 0, 10, 10}}}};
    auto r = cpn::recall({}, truths, 0.5, 100);
    CHECK(r.recall == 0.0);
}

TEST_CASE("two images, truths {2,1}, matches {1,1} give recall 2/3") {
    cpn::GroundTruth truths{{"a", {{0, 0, 10, 10}, {50, 50, 10, 10}}}, {"b", {{5, 5, 20, 20}}}};
    cpn::ProposalSet props{{"a", {prop(0, 0, 10, 10, 0.9f)}}, {"b", {prop(5, 5, 20, 20, 0.9f)}}};
    auto r = cpn::recall(props, truths, 0.5, 100);
    CHECK(r.matched == 2);
    CHECK(r.total == 3);
    CHECK(r.recall == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("recall errors: zero truths, unknown image id") {
    cpn::GroundTruth empty{{"a", {}}};
    cpn::ProposalSet props{{"a", {prop(0, 0, 5, 5, 1.f)}}};
    CHECK_THROWS_AS(cpn::recall(props, empty, 0.5, 10), std::invalid_argument);

    cpn::GroundTruth truths{{"a", {{0, 0, 10, 10}}}};
    cpn::ProposalSet stranger{{"zzz", {prop(0, 0, 5, 5, 1.f)}}};
    CHECK_THROWS_AS(cpn::recall(stranger, truths, 0.5, 10), std::invalid_argument);
}

TEST_CASE("the overlap test is strictly greater-than") {
    // IoU of these two boxes is exactly 0.5
    cpn::GroundTruth truths{{"a", {{0, 0, 10, 10}}}};
    cpn::ProposalSet props{{"a", {prop(0, 0, 10, 5, 1.f)}}};
    CHECK(cpn::iou(props["a"][0].box, truths["a"][0]) == 0.5f);
    CHECK(cpn::recall(props, truths, 0.5, 10).matched == 0);
    CHECK(cpn::recall(props, truths, 0.49, 10).matched == 1);
}

TEST_CASE("top_n keeps the highest-scored proposals per image") {
    cpn::GroundTruth truths{{"a", {{0, 0, 10, 10}}}};
    cpn::ProposalSet props{
        {"a", {prop(90, 90, 5, 5, 0.9f), prop(0, 0, 10, 10, 0.3f), prop(60, 60, 5, 5, 0.5f)}}};
    CHECK(cpn::recall(props, truths, 0.5, 1).matched == 0);
    CHECK(cpn::recall(props, truths, 0.5, 3).matched == 1);
}

TEST_CASE("duplicate proposals never change recall") {
    cpn::GroundTruth truths{{"a", {{0, 0, 10, 10}, {40, 0, 10, 10}}}};
    cpn::ProposalSet props{{"a", {prop(0, 0, 10, 10, 0.9f)}}};
    auto base = cpn::recall(props, truths, 0.5, 100);
    props["a"].push_back(props["a"][0]);
    props["a"].push_back(props["a"][0]);
    auto dup = cpn::recall(props, truths, 0.5, 100);
    CHECK(base.recall == dup.recall);
}

TEST_CASE("recall matches the brute-force scan on random fixtures") {
    std::mt19937 rng(5);
    for (int trial = 0; trial < 10; ++trial) {
        cpn::GroundTruth truths;
        cpn::ProposalSet props;
        std::uniform_int_distribution<int> nbox(1, 5), nprop(0, 30);
        std::uniform_real_distribution<float> pos(0.f, 80.f), size(4.f, 30.f);
        for (int i = 0; i < 4; ++i) {
            std::string id = "img" + std::to_string(i);
            for (int b = 0; b < nbox(rng); ++b) {
                truths[id].push_back({pos(rng), pos(rng), size(rng), size(rng)});
            }
            props[id] = oracle::random_proposals(rng, nprop(rng));
        }
        for (long top : {1L, 5L, 1000L}) {
            auto got = cpn::recall(props, truths, 0.4, top);
            CHECK(got.recall == doctest::Approx(recall_reference(props, truths, 0.4, top)));
        }
    }
}

TEST_CASE("curves: single sweep point reproduces recall, and both sweeps are monotone") {
    std::mt19937 rng(9);
    cpn::GroundTruth truths;
    cpn::ProposalSet props;
    std::uniform_real_distribution<float> pos(0.f, 80.f), size(6.f, 30.f);
    for (int i = 0; i < 5; ++i) {
        std::string id = "img" + std::to_string(i);
        for (int b = 0; b < 4; ++b) {
            BBox t{pos(rng), pos(rng), size(rng), size(rng)};
            truths[id].push_back(t);
            // a jittered matching proposal plus noise
            props[id].push_back(prop(t.x + 1, t.y - 1, t.w, t.h, 0.5f + 0.01f * b));
        }
        auto noise = oracle::random_proposals(rng, 20);
        props[id].insert(props[id].end(), noise.begin(), noise.end());
    }

    cpn::CurveConfig cfg;
    auto points = cpn::recall_curves(props, truths, cfg);
    REQUIRE(points.size() == cfg.proposal_grid.size() + cfg.iou_grid.size());

    double prev = -1.0;
    for (const auto& p : points) {
        if (p.axis != "proposals") continue;
        auto direct = cpn::recall(props, truths, cfg.fixed_iou, static_cast<long>(p.value));
        CHECK(p.recall == direct.recall);
        CHECK(p.recall >= prev);  // non-decreasing in the budget
        prev = p.recall;
    }
    prev = 2.0;
    for (const auto& p : points) {
        if (p.axis != "iou") continue;
        CHECK(p.recall <= prev);  // non-increasing in the threshold
        prev = p.recall;
    }
}
