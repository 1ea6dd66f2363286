#pragma once

#include <cmath>
#include <limits>
#include <utility>

#include "cpn/tensor.hpp"

namespace cpn {

/// Gradients a convolution layer hands back: loss gradient w.r.t. its
/// input plus one gradient per parameter tensor.
template <typename S>
struct LayerGrad {
    Tensor<S> input_grad;
    Tensor<S> kernel_grad;
    Vec<S> bias_grad;
};

template <typename S>
struct PoolResult {
    Tensor<S> output;
    std::vector<int> argmax;  // flat input index per output element
};

template <typename S>
struct LossGrad {
    S loss = S(0);
    Vec<S> grad;
};

namespace detail {

inline int conv_out_extent(int in, int k, int stride) {
    return (in - k) / stride + 1;
}

/// Reusable per-thread scratch for the unrolled convolution matrices;
/// grows to the largest layer touched and stays there.
template <typename S, int Slot>
std::vector<S>& conv_scratch() {
    static thread_local std::vector<S> buf;
    return buf;
}

/// Unrolls one batch item into a [C*KH*KW, OH*OW] matrix whose columns
/// are the receptive windows, matching the kernel blob's row layout.
/// The matrix lives in caller-provided storage so hot loops do not
/// churn the allocator.
template <typename S>
Eigen::Map<RowMat<S>> im2col(const Tensor<S>& input, int n, int kh, int kw, int stride,
                             std::vector<S>& buf) {
    const int C = input.channels(), H = input.height(), W = input.width();
    const int oh = conv_out_extent(H, kh, stride);
    const int ow = conv_out_extent(W, kw, stride);
    const std::size_t rows = static_cast<std::size_t>(C) * kh * kw;
    if (buf.size() < rows * oh * ow) buf.resize(rows * oh * ow);
    Eigen::Map<RowMat<S>> cols(buf.data(), rows, static_cast<std::size_t>(oh) * ow);
    const S* base = input.data.data() + input.offset(n, 0, 0, 0);
    for (int c = 0; c < C; ++c) {
        for (int i = 0; i < kh; ++i) {
            for (int j = 0; j < kw; ++j) {
                S* row = cols.data() + static_cast<std::size_t>((c * kh + i) * kw + j) *
                                           cols.cols();
                const S* src = base + (static_cast<std::size_t>(c) * H + i) * W + j;
                for (int y = 0; y < oh; ++y) {
                    const S* s = src + static_cast<std::size_t>(y) * stride * W;
                    for (int x = 0; x < ow; ++x) row[y * ow + x] = s[x * stride];
                }
            }
        }
    }
    return cols;
}

/// Scatter-add of the column matrix back onto the input layout; exact
/// adjoint of im2col.
template <typename S>
void col2im_add(const Eigen::Map<RowMat<S>>& cols, int kh, int kw, int stride, Tensor<S>& input,
                int n) {
    const int C = input.channels(), H = input.height(), W = input.width();
    const int oh = conv_out_extent(H, kh, stride);
    const int ow = conv_out_extent(W, kw, stride);
    S* base = input.data.data() + input.offset(n, 0, 0, 0);
    for (int c = 0; c < C; ++c) {
        for (int i = 0; i < kh; ++i) {
            for (int j = 0; j < kw; ++j) {
                const S* row = cols.data() + static_cast<std::size_t>((c * kh + i) * kw + j) *
                                                 cols.cols();
                S* dst = base + (static_cast<std::size_t>(c) * H + i) * W + j;
                for (int y = 0; y < oh; ++y) {
                    S* d = dst + static_cast<std::size_t>(y) * stride * W;
                    for (int x = 0; x < ow; ++x) d[x * stride] += row[y * ow + x];
                }
            }
        }
    }
}

template <typename S>
void check_conv_shapes(const Tensor<S>& input, const Tensor<S>& kernels, const Vec<S>& bias,
                       int stride) {
    if (stride < 1) throw std::invalid_argument("conv2d: stride must be positive");
    if (input.channels() != kernels.dims[1]) {
        throw std::invalid_argument("conv2d: input channels != kernel input channels (input " +
                                    shape_string(input) + ", kernels " + shape_string(kernels) +
                                    ")");
    }
    if (kernels.dims[2] > input.height() || kernels.dims[3] > input.width()) {
        throw std::invalid_argument("conv2d: kernel larger than input (input " +
                                    shape_string(input) + ", kernels " + shape_string(kernels) +
                                    ")");
    }
    if (bias.size() != kernels.dims[0]) {
        throw std::invalid_argument("conv2d: bias length " + std::to_string(bias.size()) +
                                    " != output channels " + std::to_string(kernels.dims[0]));
    }
}

}  // namespace detail

/// Valid (no padding) cross-correlation. kernels is [out_c, in_c, kh, kw];
/// output extent is floor((in - k) / stride) + 1 per axis.
template <typename S>
Tensor<S> conv2d_forward(const Tensor<S>& input, const Tensor<S>& kernels,
                         const Vec<std::type_identity_t<S>>& bias, int stride) {
    detail::check_conv_shapes(input, kernels, bias, stride);
    const int N = input.batch(), O = kernels.dims[0];
    const int kh = kernels.dims[2], kw = kernels.dims[3];
    const int oh = detail::conv_out_extent(input.height(), kh, stride);
    const int ow = detail::conv_out_extent(input.width(), kw, stride);

    Tensor<S> out(N, O, oh, ow);
    Eigen::Map<const RowMat<S>> kmat(kernels.data.data(), O, kernels.dims[1] * kh * kw);
    for (int n = 0; n < N; ++n) {
        auto cols = detail::im2col(input, n, kh, kw, stride, detail::conv_scratch<S, 0>());
        Eigen::Map<RowMat<S>> om(out.data.data() + out.offset(n, 0, 0, 0), O, oh * ow);
        om.noalias() = kmat * cols;
        om.colwise() += bias;
    }
    return out;
}

/// Exact analytic gradients of a scalar loss w.r.t. input, kernels and
/// bias, given the gradient at the convolution output.
template <typename S>
LayerGrad<S> conv2d_backward(const Tensor<S>& input, const Tensor<S>& kernels, int stride,
                             const Tensor<S>& output_grad) {
    const int N = input.batch(), O = kernels.dims[0];
    const int kh = kernels.dims[2], kw = kernels.dims[3];
    const int oh = detail::conv_out_extent(input.height(), kh, stride);
    const int ow = detail::conv_out_extent(input.width(), kw, stride);
    if (output_grad.dims != std::array<int, 4>{N, O, oh, ow}) {
        throw std::invalid_argument("conv2d_backward: output_grad shape " +
                                    shape_string(output_grad) + " does not match expected " +
                                    Tensor<S>::shape_string(Tensor<S>(N, O, oh, ow)));
    }
    if (input.channels() != kernels.dims[1]) {
        throw std::invalid_argument("conv2d_backward: input channels mismatch (input " +
                                    shape_string(input) + ", kernels " + shape_string(kernels) +
                                    ")");
    }

    LayerGrad<S> g;
    g.input_grad = Tensor<S>(N, input.channels(), input.height(), input.width());
    g.kernel_grad = Tensor<S>(O, kernels.dims[1], kh, kw);
    g.bias_grad = Vec<S>::Zero(O);

    Eigen::Map<const RowMat<S>> kmat(kernels.data.data(), O, kernels.dims[1] * kh * kw);
    Eigen::Map<RowMat<S>> kgrad(g.kernel_grad.data.data(), O, kernels.dims[1] * kh * kw);
    std::vector<S>& dcols_buf = detail::conv_scratch<S, 1>();
    const std::size_t rows = static_cast<std::size_t>(kernels.dims[1]) * kh * kw;
    if (dcols_buf.size() < rows * oh * ow) dcols_buf.resize(rows * oh * ow);
    for (int n = 0; n < N; ++n) {
        Eigen::Map<const RowMat<S>> og(output_grad.data.data() + output_grad.offset(n, 0, 0, 0),
                                       O, oh * ow);
        auto cols = detail::im2col(input, n, kh, kw, stride, detail::conv_scratch<S, 0>());
        kgrad.noalias() += og * cols.transpose();
        g.bias_grad += og.rowwise().sum();
        Eigen::Map<RowMat<S>> dcols(dcols_buf.data(), rows, static_cast<std::size_t>(oh) * ow);
        dcols.noalias() = kmat.transpose() * og;
        detail::col2im_add(dcols, kh, kw, stride, g.input_grad, n);
    }
    return g;
}

/// Max pooling; ties broken by the first (row-major) index so backward
/// routing is deterministic.
template <typename S>
PoolResult<S> maxpool_forward(const Tensor<S>& input, int window, int stride) {
    if (stride < 1 || window < 1) {
        throw std::invalid_argument("maxpool: window and stride must be positive");
    }
    if (window > input.height() || window > input.width()) {
        throw std::invalid_argument("maxpool: window " + std::to_string(window) +
                                    " larger than input " + shape_string(input));
    }
    const int N = input.batch(), C = input.channels();
    const int oh = detail::conv_out_extent(input.height(), window, stride);
    const int ow = detail::conv_out_extent(input.width(), window, stride);
    const int H = input.height(), W = input.width();

    PoolResult<S> r;
    r.output = Tensor<S>(N, C, oh, ow);
    r.argmax.assign(r.output.size(), 0);
    std::size_t oi = 0;
    for (int n = 0; n < N; ++n) {
        for (int c = 0; c < C; ++c) {
            const S* plane = input.data.data() + input.offset(n, c, 0, 0);
            const std::size_t plane_off = input.offset(n, c, 0, 0);
            for (int y = 0; y < oh; ++y) {
                for (int x = 0; x < ow; ++x, ++oi) {
                    int by = y * stride, bx = x * stride;
                    S best = plane[by * W + bx];
                    int best_idx = by * W + bx;
                    for (int i = 0; i < window; ++i) {
                        for (int j = 0; j < window; ++j) {
                            int idx = (by + i) * W + (bx + j);
                            if (plane[idx] > best) {
                                best = plane[idx];
                                best_idx = idx;
                            }
                        }
                    }
                    r.output.data[oi] = best;
                    r.argmax[oi] = static_cast<int>(plane_off) + best_idx;
                }
            }
        }
    }
    return r;
}

/// Routes each output gradient to the single input cell that won the
/// window maximum.
template <typename S>
Tensor<S> maxpool_backward(const std::vector<int>& argmax, const std::array<int, 4>& input_dims,
                           const Tensor<S>& output_grad) {
    if (argmax.size() != output_grad.size()) {
        throw std::invalid_argument("maxpool_backward: argmax/output_grad size mismatch");
    }
    Tensor<S> g(input_dims[0], input_dims[1], input_dims[2], input_dims[3]);
    for (std::size_t i = 0; i < argmax.size(); ++i) {
        g.data[static_cast<std::size_t>(argmax[i])] += output_grad.data[i];
    }
    return g;
}

template <typename S>
Tensor<S> relu(const Tensor<S>& input) {
    Tensor<S> out = input;
    for (S& v : out.data) v = v > S(0) ? v : S(0);
    return out;
}

template <typename S>
Tensor<S> relu_backward(const Tensor<S>& input, const Tensor<S>& output_grad) {
    if (!input.same_shape(output_grad)) {
        throw std::invalid_argument("relu_backward: shape mismatch (input " + shape_string(input) +
                                    ", output_grad " + shape_string(output_grad) + ")");
    }
    Tensor<S> g = output_grad;
    for (std::size_t i = 0; i < g.data.size(); ++i) {
        if (input.data[i] <= S(0)) g.data[i] = S(0);
    }
    return g;
}

/// Softmax cross-entropy against a 1-based class label. Stabilized by
/// max subtraction; grad is softmax(logits) - onehot(label).
template <typename D>
LossGrad<typename D::Scalar> softmax_cross_entropy(const Eigen::MatrixBase<D>& logits_expr,
                                                   int label) {
    using S = typename D::Scalar;
    Vec<S> logits = logits_expr;
    const int k = static_cast<int>(logits.size());
    if (label < 1 || label > k) {
        throw std::invalid_argument("softmax_cross_entropy: label " + std::to_string(label) +
                                    " out of range [1.." + std::to_string(k) + "]");
    }
    LossGrad<S> r;
    Vec<S> z = logits.array() - logits.maxCoeff();
    Vec<S> e = z.array().exp();
    S sum = e.sum();
    r.grad = e / sum;
    r.loss = std::log(sum) - z(label - 1);
    r.grad(label - 1) -= S(1);
    return r;
}

/// Mean square error over the entries selected by a nonzero mask; the
/// gradient is zero where the mask is zero.
template <typename D1, typename D2, typename D3>
LossGrad<typename D1::Scalar> mse_loss(const Eigen::MatrixBase<D1>& pred_expr,
                                       const Eigen::MatrixBase<D2>& target_expr,
                                       const Eigen::MatrixBase<D3>& mask_expr) {
    using S = typename D1::Scalar;
    Vec<S> pred = pred_expr;
    Vec<S> target = target_expr;
    Vec<S> mask = mask_expr;
    if (pred.size() != target.size() || pred.size() != mask.size()) {
        throw std::invalid_argument("mse_loss: length mismatch (pred " +
                                    std::to_string(pred.size()) + ", target " +
                                    std::to_string(target.size()) + ", mask " +
                                    std::to_string(mask.size()) + ")");
    }
    LossGrad<S> r;
    r.grad = Vec<S>::Zero(pred.size());
    int count = 0;
    S sum = S(0);
    for (Eigen::Index i = 0; i < pred.size(); ++i) {
        if (mask(i) == S(0)) continue;
        ++count;
        S d = target(i) - pred(i);
        sum += d * d;
    }
    if (count == 0) return r;  // fully masked out
    r.loss = sum / S(count);
    for (Eigen::Index i = 0; i < pred.size(); ++i) {
        if (mask(i) != S(0)) r.grad(i) = S(2) * (pred(i) - target(i)) / S(count);
    }
    return r;
}

}  // namespace cpn
