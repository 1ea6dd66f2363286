#include "cpn/network.hpp"

#include <cctype>
#include <sstream>
#include <stdexcept>

namespace cpn {

namespace {

LayerDesc parse_layer_token(const std::string& tok) {
    // PwSs = pool, nCkSs = conv
    auto bad = [&] { throw std::invalid_argument("parse_arch: bad layer token '" + tok + "'"); };
    std::size_t i = 0;
    auto read_int = [&]() -> int {
        std::size_t start = i;
        while (i < tok.size() && std::isdigit(static_cast<unsigned char>(tok[i]))) ++i;
        if (i == start) bad();
        return std::stoi(tok.substr(start, i - start));
    };
    if (tok.empty()) bad();
    if (tok[0] == 'P') {
        i = 1;
        int window = read_int();
        if (i >= tok.size() || tok[i] != 'S') bad();
        ++i;
        int stride = read_int();
        if (i != tok.size() || window < 1 || stride < 1) bad();
        return PoolDesc{window, stride};
    }
    int out = read_int();
    if (i >= tok.size() || tok[i] != 'C') bad();
    ++i;
    int kernel = read_int();
    if (i >= tok.size() || tok[i] != 'S') bad();
    ++i;
    int stride = read_int();
    if (i != tok.size() || out < 1 || kernel < 1 || stride < 1) bad();
    return ConvDesc{out, kernel, stride};
}

}  // namespace

ArchitectureSpec parse_arch(const std::string& config, int input_w, int input_h, int K) {
    if (K < 2) throw std::invalid_argument("parse_arch: K must be >= 2");
    ArchitectureSpec spec;
    spec.name = config;
    spec.input_w = input_w;
    spec.input_h = input_h;
    spec.num_classes = K;
    std::stringstream ss(config);
    std::string tok;
    while (std::getline(ss, tok, '-')) {
        if (!tok.empty()) spec.layers.push_back(parse_layer_token(tok));
    }
    if (spec.layers.empty()) throw std::invalid_argument("parse_arch: empty configuration");
    spec.layers.push_back(ConvDesc{5 * K, 1, 1});  // 5K head
    return spec;
}

ArchitectureSpec builtin_spec(const std::string& name, int K) {
    if (K < 2) throw std::invalid_argument("builtin_spec: K must be >= 2");
    ArchitectureSpec spec;
    if (name == "CPN-ENG") {
        spec = parse_arch("96C5S1-P3S2-256C4S1-P3S2-384C3S1-512C2S1-256C1S1", 29, 29, K);
    } else if (name == "CPN-CHS") {
        spec = parse_arch("96C5S1-P3S2-256C5S1-P3S2-384C3S1-384C3S1-512C2S1-512C2S1", 43, 43, K);
    } else {
        throw std::invalid_argument("builtin_spec: unknown architecture '" + name +
                                    "' (expected CPN-ENG or CPN-CHS)");
    }
    spec.name = name;
    return spec;
}

int compute_stride(const ArchitectureSpec& spec) {
    int s = 1;
    for (const auto& l : spec.layers) {
        if (const auto* c = std::get_if<ConvDesc>(&l)) {
            s *= c->stride;
        } else {
            s *= std::get<PoolDesc>(l).stride;
        }
    }
    return s;
}

namespace {

int step_extent(const LayerDesc& l, int in) {
    int k, s;
    if (const auto* c = std::get_if<ConvDesc>(&l)) {
        k = c->kernel;
        s = c->stride;
    } else {
        const auto& p = std::get<PoolDesc>(l);
        k = p.window;
        s = p.stride;
    }
    if (in < k) return 0;
    return (in - k) / s + 1;
}

}  // namespace

std::pair<int, int> output_size(const ArchitectureSpec& spec, int in_h, int in_w) {
    int h = in_h, w = in_w;
    for (const auto& l : spec.layers) {
        h = step_extent(l, h);
        w = step_extent(l, w);
        if (h <= 0 || w <= 0) {
            throw std::invalid_argument("output_size: input " + std::to_string(in_w) + "x" +
                                        std::to_string(in_h) +
                                        " too small for architecture '" + spec.name + "'");
        }
    }
    return {h, w};
}

std::vector<int> shape_trace(const ArchitectureSpec& spec, int in) {
    std::vector<int> trace{in};
    int e = in;
    for (const auto& l : spec.layers) {
        e = step_extent(l, e);
        trace.push_back(e);
        if (e <= 0) break;
    }
    return trace;
}

void validate_geometry(const ArchitectureSpec& spec) {
    if (spec.layers.empty()) throw std::invalid_argument("validate_geometry: no layers");
    const auto* head = std::get_if<ConvDesc>(&spec.layers.back());
    if (!head || head->out_channels != spec.head_channels()) {
        throw std::invalid_argument("validate_geometry: final layer must be a convolution with "
                                    "5K = " +
                                    std::to_string(spec.head_channels()) + " channels");
    }
    auto [h, w] = output_size(spec, spec.input_h, spec.input_w);
    if (h != 1 || w != 1) {
        throw std::invalid_argument(
            "validate_geometry: receptive field " + std::to_string(spec.input_w) + "x" +
            std::to_string(spec.input_h) + " maps to " + std::to_string(w) + "x" +
            std::to_string(h) + ", expected 1x1");
    }
}

}  // namespace cpn
