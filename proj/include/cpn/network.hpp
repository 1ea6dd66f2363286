#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "cpn/layers.hpp"
#include "cpn/templates.hpp"
#include "cpn/tensor.hpp"

namespace cpn {

struct ConvDesc {
    int out_channels = 0;
    int kernel = 0;
    int stride = 1;
};

struct PoolDesc {
    int window = 0;
    int stride = 1;
};

using LayerDesc = std::variant<ConvDesc, PoolDesc>;

/// Layer graph of a character proposal network. The final layer is the
/// 1x1 head convolution emitting 5K channels: K class logits in
/// channels [0, K), then K contiguous 4-value regression blocks, class
/// id c occupying channels K+4(c-1) .. K+4(c-1)+3.
struct ArchitectureSpec {
    std::string name;
    std::vector<LayerDesc> layers;
    int input_w = 0;  // receptive field R_w
    int input_h = 0;  // receptive field R_h
    int input_channels = 3;
    int num_classes = 0;  // K, aspect templates + background

    int head_channels() const { return 5 * num_classes; }
};

/// Parses a layer configuration string such as
/// "96C5S1-P3S2-256C4S1-P3S2-384C3S1-512C2S1-256C1S1" (nCkSs = conv with
/// n output channels, kernel k, stride s; PwSs = max pool, window w,
/// stride s). The 5K head convolution is appended automatically.
ArchitectureSpec parse_arch(const std::string& config, int input_w, int input_h, int K);

/// The two published configurations by name ("CPN-ENG" or "CPN-CHS").
ArchitectureSpec builtin_spec(const std::string& name, int K);

/// Product of all convolution and pooling strides: the pixel offset
/// between receptive fields of adjacent response-map units.
int compute_stride(const ArchitectureSpec& spec);

/// Spatial output extents for an input of the given extents.
std::pair<int, int> output_size(const ArchitectureSpec& spec, int in_h, int in_w);

/// Per-layer spatial trace of the height extent starting from `in`
/// (the width trace is identical for square layers).
std::vector<int> shape_trace(const ArchitectureSpec& spec, int in);

/// Confirms the declared receptive field maps to a 1x1 output and that
/// the final layer emits 5K channels; throws on a misconfigured spec.
void validate_geometry(const ArchitectureSpec& spec);

/// Network parameters for one convolution layer.
template <typename S>
struct ConvParams {
    Tensor<S> kernels;  // [out, in, k, k]
    Vec<S> bias;
};

template <typename S>
struct Model {
    ArchitectureSpec spec;
    TemplateSet templates;
    std::vector<ConvParams<S>> params;  // one per ConvDesc, in layer order
    int stride = 1;
    std::vector<std::pair<std::string, std::string>> metadata;

    int receptive_w() const { return spec.input_w; }
    int receptive_h() const { return spec.input_h; }

    template <typename T>
    Model<T> cast() const {
        Model<T> m;
        m.spec = spec;
        m.templates = templates;
        m.stride = stride;
        m.metadata = metadata;
        m.params.reserve(params.size());
        for (const auto& p : params) {
            m.params.push_back({p.kernels.template cast<T>(), p.bias.template cast<T>()});
        }
        return m;
    }
};

/// Zero-mean Gaussian kernels (default std 0.01), zero biases. The
/// draw order is fixed so a given seed always yields the same model.
template <typename S>
Model<S> init_model(const ArchitectureSpec& spec, const TemplateSet& templates, std::uint64_t seed,
                    double init_std = 0.01) {
    validate_geometry(spec);
    if (spec.num_classes != templates.num_classes) {
        throw std::invalid_argument("init_model: spec K " + std::to_string(spec.num_classes) +
                                    " != template set K " + std::to_string(templates.num_classes));
    }
    Model<S> m;
    m.spec = spec;
    m.templates = templates;
    m.stride = compute_stride(spec);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> dist(0.0, init_std);
    int in_c = spec.input_channels;
    for (const auto& l : spec.layers) {
        if (const auto* c = std::get_if<ConvDesc>(&l)) {
            ConvParams<S> p;
            p.kernels = Tensor<S>(c->out_channels, in_c, c->kernel, c->kernel);
            for (S& v : p.kernels.data) v = static_cast<S>(dist(rng));
            p.bias = Vec<S>::Zero(c->out_channels);
            m.params.push_back(std::move(p));
            in_c = c->out_channels;
        }
    }
    m.metadata.emplace_back("init", "gaussian");
    m.metadata.emplace_back("init_std", std::to_string(init_std));
    m.metadata.emplace_back("init_seed", std::to_string(seed));
    return m;
}

/// Response maps of one forward pass: K per-class logits and 4K
/// regression values per spatial unit.
template <typename S>
struct HeadOutput {
    Tensor<S> scores;   // [n, K, h, w] logits
    Tensor<S> regress;  // [n, 4K, h, w]
};

/// Everything backward needs from a forward pass: the input fed to
/// each layer, conv pre-activations, and pooling argmax indices.
template <typename S>
struct ForwardTrace {
    std::vector<Tensor<S>> layer_inputs;
    std::vector<Tensor<S>> conv_pre;          // indexed like params
    std::vector<std::vector<int>> pool_argmax;  // indexed like layers (empty for conv)
};

namespace detail {

/// Runs the layer stack. ReLU follows every convolution except the 5K
/// head. When trace is non-null the intermediates needed by
/// backward_raw are recorded.
template <typename S>
Tensor<S> forward_raw(const Model<S>& model, const Tensor<S>& input, ForwardTrace<S>* trace) {
    const auto& layers = model.spec.layers;
    if (trace) {
        // index assignment (not push_back) so a reused trace recycles
        // its buffers across samples
        trace->layer_inputs.resize(layers.size());
        trace->conv_pre.resize(model.params.size());
        trace->pool_argmax.resize(layers.size());
    }
    Tensor<S> x = input;
    std::size_t conv_idx = 0;
    const std::size_t n_convs = model.params.size();
    for (std::size_t i = 0; i < layers.size(); ++i) {
        if (trace) trace->layer_inputs[i] = x;
        if (const auto* c = std::get_if<ConvDesc>(&layers[i])) {
            const auto& p = model.params[conv_idx];
            Tensor<S> y = conv2d_forward(x, p.kernels, p.bias, c->stride);
            bool is_head = (conv_idx == n_convs - 1);
            if (trace) trace->conv_pre[conv_idx] = y;
            x = is_head ? std::move(y) : relu(y);
            ++conv_idx;
        } else {
            const auto& pl = std::get<PoolDesc>(layers[i]);
            PoolResult<S> r = maxpool_forward(x, pl.window, pl.stride);
            if (trace) trace->pool_argmax[i] = r.argmax;
            x = std::move(r.output);
        }
    }
    return x;
}

/// Walks the stack in reverse from a gradient at the head output,
/// accumulating parameter gradients into `grads` (which must be
/// zero-initialized ConvParams shaped like model.params).
template <typename S>
void backward_raw(const Model<S>& model, const ForwardTrace<S>& trace,
                  const Tensor<S>& head_grad, std::vector<ConvParams<S>>& grads) {
    const auto& layers = model.spec.layers;
    Tensor<S> g = head_grad;
    std::size_t conv_idx = model.params.size();
    for (std::size_t ii = layers.size(); ii-- > 0;) {
        if (const auto* c = std::get_if<ConvDesc>(&layers[ii])) {
            --conv_idx;
            bool is_head = (conv_idx == model.params.size() - 1);
            if (!is_head) g = relu_backward(trace.conv_pre[conv_idx], g);
            LayerGrad<S> lg =
                conv2d_backward(trace.layer_inputs[ii], model.params[conv_idx].kernels,
                                c->stride, g);
            grads[conv_idx].kernels.vec() += lg.kernel_grad.vec();
            grads[conv_idx].bias += lg.bias_grad;
            g = std::move(lg.input_grad);
        } else {
            g = maxpool_backward(trace.pool_argmax[ii], trace.layer_inputs[ii].dims, g);
        }
    }
}

template <typename S>
HeadOutput<S> split_head(const Tensor<S>& raw, int K) {
    HeadOutput<S> out;
    const int n = raw.batch(), h = raw.height(), w = raw.width();
    out.scores = Tensor<S>(n, K, h, w);
    out.regress = Tensor<S>(n, 4 * K, h, w);
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    for (int b = 0; b < n; ++b) {
        const S* src = raw.data.data() + raw.offset(b, 0, 0, 0);
        std::copy(src, src + K * plane, out.scores.data.data() + out.scores.offset(b, 0, 0, 0));
        std::copy(src + K * plane, src + 5 * K * plane,
                  out.regress.data.data() + out.regress.offset(b, 0, 0, 0));
    }
    return out;
}

}  // namespace detail

template <typename S>
std::vector<ConvParams<S>> zero_grads_like(const Model<S>& model) {
    std::vector<ConvParams<S>> g;
    g.reserve(model.params.size());
    for (const auto& p : model.params) {
        ConvParams<S> z;
        z.kernels = Tensor<S>(p.kernels.dims[0], p.kernels.dims[1], p.kernels.dims[2],
                              p.kernels.dims[3]);
        z.bias = Vec<S>::Zero(p.bias.size());
        g.push_back(std::move(z));
    }
    return g;
}

/// Dense full-image pass: unit (i, j) of the result equals
/// forward_patch on the receptive field anchored at stride*(i, j).
template <typename S>
HeadOutput<S> forward_full(const Model<S>& model, const Tensor<S>& image) {
    if (image.height() < model.spec.input_h || image.width() < model.spec.input_w) {
        throw std::invalid_argument("forward_full: image " + shape_string(image) +
                                    " smaller than receptive field " +
                                    std::to_string(model.spec.input_w) + "x" +
                                    std::to_string(model.spec.input_h));
    }
    return detail::split_head(detail::forward_raw<S>(model, image, nullptr),
                              model.spec.num_classes);
}

/// Single-patch pass; the patch must match the receptive field exactly.
template <typename S>
HeadOutput<S> forward_patch(const Model<S>& model, const Tensor<S>& patch) {
    if (patch.height() != model.spec.input_h || patch.width() != model.spec.input_w) {
        throw std::invalid_argument("forward_patch: patch " + shape_string(patch) +
                                    " != receptive field " + std::to_string(model.spec.input_w) +
                                    "x" + std::to_string(model.spec.input_h));
    }
    return detail::split_head(detail::forward_raw<S>(model, patch, nullptr),
                              model.spec.num_classes);
}

}  // namespace cpn
