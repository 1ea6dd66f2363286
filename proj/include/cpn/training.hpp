#pragma once

#include <cmath>
#include <cstdint>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "cpn/network.hpp"
#include "cpn/parallel.hpp"
#include "cpn/sampling.hpp"

namespace cpn {

struct TrainConfig {
    int batch_size = 100;
    float learning_rate = 0.001f;
    float lr_decay = 1.0f;    // multiplicative step decay factor
    int lr_decay_every = 0;   // iterations between decays; 0 disables
    float alpha = 0.5f;       // classification/regression balance
    float weight_decay = 5e-4f;
    int iterations = 10000;
    int shift_count = 4;
    float max_offset = 0.1f;
    std::uint64_t seed = 0;
};

template <typename S>
struct LossBreakdown {
    S total = S(0);
    S cls = S(0);
    S reg = S(0);
};

template <typename S>
struct BatchGradients {
    LossBreakdown<S> loss;
    std::vector<ConvParams<S>> grads;
};

namespace detail {

// Fixed accumulation chunk so gradient reduction order (and therefore
// the bitwise result) does not depend on the worker count.
constexpr int kGradChunk = 8;

template <typename S>
void add_params(std::vector<ConvParams<S>>& into, const std::vector<ConvParams<S>>& from) {
    for (std::size_t j = 0; j < into.size(); ++j) {
        into[j].kernels.vec() += from[j].kernels.vec();
        into[j].bias += from[j].bias;
    }
}

}  // namespace detail

/// Multi-task loss over a batch: alpha * mean cross-entropy
/// + (1 - alpha) * mean per-sample masked regression MSE
/// + weight_decay * ||kernels||^2, with gradients for every parameter.
/// The regression term of each positive sample covers only the 4
/// outputs of its own template block; background samples contribute
/// nothing to it.
template <typename S>
BatchGradients<S> joint_loss(std::span<const TrainingSample> batch, const Model<S>& model,
                             S alpha, S weight_decay) {
    if (batch.empty()) throw std::invalid_argument("joint_loss: empty batch");
    const int K = model.spec.num_classes;
    const int n = static_cast<int>(batch.size());
    const int chunks = (n + detail::kGradChunk - 1) / detail::kGradChunk;

    std::vector<std::vector<ConvParams<S>>> chunk_grads(chunks);
    std::vector<LossBreakdown<S>> chunk_loss(chunks);

    parallel_for(chunks, [&](int ci) {
        auto grads = zero_grads_like(model);
        LossBreakdown<S> loss;
        ForwardTrace<S> trace;
        const int begin = ci * detail::kGradChunk;
        const int end = std::min(n, begin + detail::kGradChunk);
        for (int i = begin; i < end; ++i) {
            const TrainingSample& sample = batch[i];
            Tensor<S> x = image_to_tensor<S>(sample.patch);
            Tensor<S> head = detail::forward_raw<S>(model, x, &trace);

            Vec<S> logits(K);
            for (int k = 0; k < K; ++k) logits(k) = head.data[k];
            LossGrad<S> ce = softmax_cross_entropy(logits, sample.class_id);
            loss.cls += ce.loss;

            Tensor<S> head_grad(1, 5 * K, 1, 1);
            const S cls_scale = alpha / S(n);
            for (int k = 0; k < K; ++k) head_grad.data[k] = cls_scale * ce.grad(k);

            if (sample.has_target()) {
                const int block = K + 4 * (sample.class_id - 1);
                Vec<S> pred(4), target(4);
                for (int d = 0; d < 4; ++d) {
                    pred(d) = head.data[block + d];
                    target(d) = S(sample.target[d]);
                }
                LossGrad<S> reg = mse_loss(pred, target, Vec<S>::Ones(4));
                loss.reg += reg.loss;
                const S reg_scale = (S(1) - alpha) / S(n);
                for (int d = 0; d < 4; ++d) head_grad.data[block + d] = reg_scale * reg.grad(d);
            }
            detail::backward_raw(model, trace, head_grad, grads);
        }
        chunk_grads[ci] = std::move(grads);
        chunk_loss[ci] = loss;
    });

    BatchGradients<S> out;
    out.grads = std::move(chunk_grads[0]);
    out.loss = chunk_loss[0];
    for (int ci = 1; ci < chunks; ++ci) {
        detail::add_params(out.grads, chunk_grads[ci]);
        out.loss.cls += chunk_loss[ci].cls;
        out.loss.reg += chunk_loss[ci].reg;
    }
    out.loss.cls /= S(n);
    out.loss.reg /= S(n);

    S decay_term = S(0);
    for (std::size_t j = 0; j < model.params.size(); ++j) {
        const auto k = model.params[j].kernels.vec();
        decay_term += weight_decay * k.squaredNorm();
        out.grads[j].kernels.vec() += S(2) * weight_decay * k;
    }
    out.loss.total = alpha * out.loss.cls + (S(1) - alpha) * out.loss.reg + decay_term;
    return out;
}

/// Plain minibatch SGD: draw a batch, accumulate gradients over it,
/// step W <- W - lr_t * dW. Deterministic for a fixed seed regardless
/// of worker count. Writes one CSV line per iteration when log is set;
/// aborts with a diagnostic if the loss stops being finite.
template <typename S>
void train(const std::vector<TrainingSample>& dataset, const TrainConfig& config, Model<S>& model,
           std::ostream* log = nullptr) {
    bool has_pos = false, has_neg = false;
    for (const auto& s : dataset) (s.positive ? has_pos : has_neg) = true;
    if (!has_pos || !has_neg) {
        throw std::invalid_argument("train: dataset needs both positive and negative samples");
    }
    if (config.batch_size < 1) throw std::invalid_argument("train: batch_size must be >= 1");

    std::mt19937_64 rng(config.seed);
    std::uniform_int_distribution<std::size_t> pick(0, dataset.size() - 1);
    if (log) *log << "iter,loss_total,loss_cls,loss_reg\n";

    std::vector<TrainingSample> batch(config.batch_size);
    for (int iter = 1; iter <= config.iterations; ++iter) {
        for (int i = 0; i < config.batch_size; ++i) batch[i] = dataset[pick(rng)];

        BatchGradients<S> bg =
            joint_loss<S>(batch, model, S(config.alpha), S(config.weight_decay));
        if (!std::isfinite(static_cast<double>(bg.loss.total))) {
            throw std::runtime_error("train: loss diverged (non-finite) at iteration " +
                                     std::to_string(iter));
        }

        S lr = S(config.learning_rate);
        if (config.lr_decay_every > 0) {
            lr *= std::pow(S(config.lr_decay), S((iter - 1) / config.lr_decay_every));
        }
        for (std::size_t j = 0; j < model.params.size(); ++j) {
            model.params[j].kernels.vec() -= lr * bg.grads[j].kernels.vec();
            model.params[j].bias -= lr * bg.grads[j].bias;
        }
        if (log) {
            *log << iter << ',' << bg.loss.total << ',' << bg.loss.cls << ',' << bg.loss.reg
                 << '\n';
        }
    }
}

}  // namespace cpn
