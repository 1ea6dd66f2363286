#include <doctest.h>

#include <random>

#include "cpn/network.hpp"
#include "oracles.hpp"

using cpn::ArchitectureSpec;
using cpn::Tensor;

namespace {

cpn::TemplateSet square_templates(int K, int r) {
    std::vector<float> ratios;
    for (int i = 0; i < K - 1; ++i) ratios.push_back(0.5f * (1 << i));
    return cpn::make_template_set(ratios, K, r, r);
}

cpn::Model<float> random_model(const ArchitectureSpec& spec, std::uint64_t seed,
                               double init_std = 0.05) {
    return cpn::init_model<float>(spec, square_templates(spec.num_classes, spec.input_w), seed,
                                  init_std);
}

}  // namespace

TEST_CASE("CPN-ENG configuration: 7 body layers plus a 5K head, input 29") {
    ArchitectureSpec spec = cpn::builtin_spec("CPN-ENG", 4);
    CHECK(spec.input_w == 29);
    CHECK(spec.input_h == 29);
    REQUIRE(spec.layers.size() == 8);  // 5 conv + 2 pool body, then the head
    const auto* head = std::get_if<cpn::ConvDesc>(&spec.layers.back());
    REQUIRE(head != nullptr);
    CHECK(head->out_channels == 20);  // 5K with K=4
    const auto* first = std::get_if<cpn::ConvDesc>(&spec.layers.front());
    REQUIRE(first != nullptr);
    CHECK(first->out_channels == 96);
    CHECK(first->kernel == 5);
}

TEST_CASE("CPN-CHS configuration: input 43, 8 body layers plus head") {
    ArchitectureSpec spec = cpn::builtin_spec("CPN-CHS", 4);
    CHECK(spec.input_w == 43);
    CHECK(spec.input_h == 43);
    CHECK(spec.layers.size() == 9);
    CHECK(std::get<cpn::ConvDesc>(spec.layers.back()).out_channels == 20);
}

TEST_CASE("unknown architecture names are rejected") {
    CHECK_THROWS_AS(cpn::builtin_spec("CPN-XYZ", 4), std::invalid_argument);
    CHECK_THROWS_AS(cpn::builtin_spec("CPN-ENG", 1), std::invalid_argument);
}

TEST_CASE("compute_stride is the product of all layer strides") {
    CHECK(cpn::compute_stride(cpn::builtin_spec("CPN-ENG", 4)) == 4);
    CHECK(cpn::compute_stride(cpn::builtin_spec("CPN-CHS", 2)) == 4);
    ArchitectureSpec flat = cpn::parse_arch("4C3S1-8C3S1", 5, 5, 2);
    CHECK(cpn::compute_stride(flat) == 1);
}

TEST_CASE("shape traces match the published layer arithmetic") {
    ArchitectureSpec eng = cpn::builtin_spec("CPN-ENG", 4);
    CHECK(cpn::shape_trace(eng, 29) == std::vector<int>{29, 25, 12, 9, 4, 2, 1, 1, 1});
    ArchitectureSpec chs = cpn::builtin_spec("CPN-CHS", 4);
    CHECK(cpn::shape_trace(chs, 43) == std::vector<int>{43, 39, 19, 15, 7, 5, 3, 2, 1, 1});
}

TEST_CASE("validate_geometry accepts the builtins and output_size extends them") {
    ArchitectureSpec eng = cpn::builtin_spec("CPN-ENG", 4);
    CHECK_NOTHROW(cpn::validate_geometry(eng));
    CHECK(cpn::output_size(eng, 29, 29) == std::pair<int, int>{1, 1});
    CHECK(cpn::output_size(eng, 33, 33) == std::pair<int, int>{2, 2});
    ArchitectureSpec chs = cpn::builtin_spec("CPN-CHS", 4);
    CHECK(cpn::output_size(chs, 43, 43) == std::pair<int, int>{1, 1});
}

TEST_CASE("validate_geometry rejects a receptive field that does not reach 1x1") {
    ArchitectureSpec bad = cpn::builtin_spec("CPN-ENG", 4);
    bad.input_w = bad.input_h = 33;
    CHECK_THROWS_AS(cpn::validate_geometry(bad), std::invalid_argument);
}

TEST_CASE("forward_patch emits a 1x1 unit with the 5K channel split") {
    ArchitectureSpec spec =
        cpn::parse_arch("6C5S1-P3S2-8C4S1-P3S2-12C3S1-16C2S1-12C1S1", 29, 29, 4);
    auto model = random_model(spec, 3);
    Tensor<float> patch(1, 3, 29, 29);
    std::mt19937 rng(4);
    oracle::randomize(patch, rng, 0.3);
    auto head = cpn::forward_patch(model, patch);
    CHECK(head.scores.dims == std::array<int, 4>{1, 4, 1, 1});
    CHECK(head.regress.dims == std::array<int, 4>{1, 16, 1, 1});

    Tensor<float> wrong(1, 3, 31, 31);
    CHECK_THROWS_AS(cpn::forward_patch(model, wrong), std::invalid_argument);
}

TEST_CASE("zero weights yield all-zero logits, i.e. a uniform softmax") {
    ArchitectureSpec spec = cpn::parse_arch("4C5S1-P3S2-6C4S1-P3S2-8C3S1-8C2S1-8C1S1", 29, 29, 4);
    auto model = random_model(spec, 1, 0.0);
    Tensor<float> patch(1, 3, 29, 29);
    std::mt19937 rng(9);
    oracle::randomize(patch, rng, 0.3);
    auto head = cpn::forward_patch(model, patch);
    for (float v : head.scores.data) CHECK(v == 0.f);
}

TEST_CASE("head channel partition: scores then 4-value blocks per class") {
    ArchitectureSpec spec = cpn::parse_arch("4C5S1-P3S2-6C4S1-P3S2-8C3S1-8C2S1-8C1S1", 29, 29, 3);
    auto model = random_model(spec, 12);
    Tensor<float> patch(1, 3, 29, 29);
    std::mt19937 rng(13);
    oracle::randomize(patch, rng, 0.3);
    Tensor<float> raw = cpn::detail::forward_raw<float>(model, patch, nullptr);
    REQUIRE(raw.channels() == 15);
    auto head = cpn::forward_patch(model, patch);
    const int K = 3;
    for (int k = 0; k < K; ++k) CHECK(head.scores.at(0, k, 0, 0) == raw.at(0, k, 0, 0));
    for (int c = 1; c <= K; ++c) {  // class id c, block channels K+4(c-1)..
        for (int d = 0; d < 4; ++d) {
            CHECK(head.regress.at(0, 4 * (c - 1) + d, 0, 0) ==
                  raw.at(0, K + 4 * (c - 1) + d, 0, 0));
        }
    }
}

TEST_CASE("forward_full on an exactly-R image equals forward_patch") {
    ArchitectureSpec spec = cpn::parse_arch("6C5S1-P3S2-8C4S1-P3S2-8C3S1-8C2S1-8C1S1", 29, 29, 4);
    auto model = random_model(spec, 21);
    Tensor<float> img(1, 3, 29, 29);
    std::mt19937 rng(22);
    oracle::randomize(img, rng, 0.3);
    auto full = cpn::forward_full(model, img);
    auto patch = cpn::forward_patch(model, img);
    REQUIRE(full.scores.size() == patch.scores.size());
    for (std::size_t i = 0; i < full.scores.size(); ++i) {
        CHECK(full.scores.data[i] == patch.scores.data[i]);
    }
}

TEST_CASE("forward_full rejects images smaller than the receptive field") {
    ArchitectureSpec spec = cpn::parse_arch("6C5S1-P3S2-8C4S1-P3S2-8C3S1-8C2S1-8C1S1", 29, 29, 4);
    auto model = random_model(spec, 23);
    Tensor<float> img(1, 3, 20, 40);
    CHECK_THROWS_AS(cpn::forward_full(model, img), std::invalid_argument);
}

namespace {

Tensor<float> crop(const Tensor<float>& img, int y0, int x0, int h, int w) {
    Tensor<float> out(1, img.channels(), h, w);
    for (int c = 0; c < img.channels(); ++c) {
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) out.at(0, c, y, x) = img.at(0, c, y0 + y, x0 + x);
        }
    }
    return out;
}

void check_equivalence(const cpn::Model<float>& model, const Tensor<float>& img, int row, int col,
                       const cpn::HeadOutput<float>& full) {
    const int s = model.stride;
    Tensor<float> patch = crop(img, s * row, s * col, model.spec.input_h, model.spec.input_w);
    auto unit = cpn::forward_patch(model, patch);
    for (int k = 0; k < full.scores.channels(); ++k) {
        float a = full.scores.at(0, k, row, col);
        float b = unit.scores.at(0, k, 0, 0);
        CHECK(std::abs(a - b) <= 1e-5f * std::max({std::abs(a), std::abs(b), 1e-3f}));
    }
    for (int k = 0; k < full.regress.channels(); ++k) {
        float a = full.regress.at(0, k, row, col);
        float b = unit.regress.at(0, k, 0, 0);
        CHECK(std::abs(a - b) <= 1e-5f * std::max({std::abs(a), std::abs(b), 1e-3f}));
    }
}

}  // namespace

TEST_CASE("sliding-window equivalence: 45x45 image, unit (1,2) vs crop at (4,8)") {
    ArchitectureSpec spec =
        cpn::parse_arch("8C5S1-P3S2-12C4S1-P3S2-16C3S1-16C2S1-12C1S1", 29, 29, 4);
    auto model = random_model(spec, 31);
    Tensor<float> img(1, 3, 45, 45);
    std::mt19937 rng(32);
    oracle::randomize(img, rng, 0.3);
    auto full = cpn::forward_full(model, img);
    CHECK(model.stride == 4);
    check_equivalence(model, img, 1, 2, full);
}

TEST_CASE("sliding-window equivalence holds at every unit of a 33x37 image") {
    ArchitectureSpec spec =
        cpn::parse_arch("8C5S1-P3S2-12C4S1-P3S2-16C3S1-16C2S1-12C1S1", 29, 29, 4);
    auto model = random_model(spec, 41);
    Tensor<float> img(1, 3, 33, 37);
    std::mt19937 rng(42);
    oracle::randomize(img, rng, 0.3);
    auto full = cpn::forward_full(model, img);
    REQUIRE(full.scores.height() == 2);
    REQUIRE(full.scores.width() == 3);
    for (int r = 0; r < 2; ++r) {
        for (int c = 0; c < 3; ++c) check_equivalence(model, img, r, c, full);
    }
}

TEST_CASE("init_model is deterministic per seed and records its settings") {
    ArchitectureSpec spec = cpn::parse_arch("4C3S1-4C3S1", 5, 5, 2);
    auto a = cpn::init_model<float>(spec, square_templates(2, 5), 77, 0.01);
    auto b = cpn::init_model<float>(spec, square_templates(2, 5), 77, 0.01);
    for (std::size_t j = 0; j < a.params.size(); ++j) {
        CHECK(a.params[j].kernels.data == b.params[j].kernels.data);
        CHECK(a.params[j].bias == b.params[j].bias);
    }
    bool has_std = false;
    for (const auto& [k, v] : a.metadata) has_std |= (k == "init_std");
    CHECK(has_std);
}
