#pragma once

#include <cmath>
#include <vector>

#include "rcnn/clique.hpp"
#include "rcnn/config.hpp"
#include "rcnn/latent.hpp"
#include "rcnn/layers.hpp"
#include "rcnn/params.hpp"
#include "rcnn/tensor.hpp"

namespace rcnn {

// Probabilities below kProbFloor (and above 1 - kProbFloor) are clamped
// inside logarithms; log(1 - F) is singular at F = 1.
inline constexpr double kProbFloor = 1e-12;

template <class Scalar>
struct NetworkCache {
    LatentVars latent;
    std::vector<Tensor<Scalar>> features;              // per clique
    std::vector<CliqueActivation<Scalar>> activations; // per clique
    Tensor<Scalar> concat;
    Tensor<Scalar> hidden_pre, hidden, logits, probs;
    bool valid = false;
};

// First-dense partial projection of one clique's feature slice:
// W[offset .. offset+len)^T * features. The full first-dense preactivation
// is the clique-ordered sum of these partials plus the bias; every forward
// path in the library computes it that way, so scores agree bit-for-bit
// between the training forward and the enumeration scorer.
template <class Scalar>
Tensor<Scalar> clique_partial_projection(const DenseLayer<Scalar>& fc1, int clique_index,
                                         const Tensor<Scalar>& features,
                                         const ModelConfig& config) {
    const std::int64_t len = config.clique_feature_len();
    Tensor<Scalar> partial(Shape{config.hidden_units});
    ConstMatrixMap<Scalar> w(fc1.weights.data(), fc1.fan_in(), fc1.fan_out());
    partial.vector() =
        w.middleRows(clique_index * len, len).transpose() * features.vector();
    return partial;
}

template <class Scalar>
struct HeadResult {
    Tensor<Scalar> hidden_pre, hidden, logits, probs;
};

// The one head evaluation path: clique-ordered partial sums plus bias, tanh,
// second dense layer, softmax. Training forwards and the enumeration scorer
// both come through here.
template <class Scalar>
HeadResult<Scalar> head_forward_ptrs(const std::vector<const Tensor<Scalar>*>& partials,
                                     const Parameters<Scalar>& params) {
    HeadResult<Scalar> h;
    h.hidden_pre = params.fc1.biases;
    for (const auto* p : partials) h.hidden_pre.array() += p->array();
    h.hidden = tanh_map(h.hidden_pre);
    h.logits = dense_forward(h.hidden, params.fc2, Activation::kIdentity);
    h.probs = softmax(h.logits);
    return h;
}

template <class Scalar>
HeadResult<Scalar> head_forward(const std::vector<Tensor<Scalar>>& partials,
                                const Parameters<Scalar>& params) {
    std::vector<const Tensor<Scalar>*> ptrs;
    ptrs.reserve(partials.size());
    for (const auto& p : partials) ptrs.push_back(&p);
    return head_forward_ptrs(ptrs, params);
}

// F(X, w, H): runs each clique on the window H selects for it, merges the
// features through the two full-connection layers and the softmax. The
// output sums to 1. An invalid H is an error, never silently clamped.
template <class Scalar>
Tensor<Scalar> network_forward(const Tensor<Scalar>& frames, const Parameters<Scalar>& params,
                               const LatentVars& latent, const ModelConfig& config,
                               NetworkCache<Scalar>* cache = nullptr) {
    LatentCheck chk =
        validate(latent, config.anchor_frames, config.cliques, config.min_frames, config.max_frames);
    if (!chk.ok)
        throw ArgumentError("network_forward: invalid latent " + latent.str() + ": " +
                            chk.violation);
    if (frames.shape().rank() != 4 || frames.shape()[1] != config.anchor_frames)
        throw DimensionError("network_forward: frames " + frames.shape().str() +
                             " do not carry " + std::to_string(config.anchor_frames) +
                             " anchor frames");

    std::vector<Tensor<Scalar>> features(static_cast<std::size_t>(config.cliques));
    std::vector<CliqueActivation<Scalar>> activations(static_cast<std::size_t>(config.cliques));
    std::vector<Tensor<Scalar>> partials(static_cast<std::size_t>(config.cliques));
    for (int i = 0; i < config.cliques; ++i) {
        Tensor<Scalar> window =
            temporal_window(frames, latent.starts[i] - 1, latent.lengths[i]);
        auto [f, act] = clique_forward(window, params.cliques[i], config, cache != nullptr);
        partials[i] = clique_partial_projection(params.fc1, i, f, config);
        features[i] = std::move(f);
        activations[i] = std::move(act);
    }
    HeadResult<Scalar> head = head_forward(partials, params);

    if (cache) {
        cache->latent = latent;
        cache->concat = concat_flatten(features);
        cache->features = std::move(features);
        cache->activations = std::move(activations);
        cache->hidden_pre = head.hidden_pre;
        cache->hidden = head.hidden;
        cache->logits = head.logits;
        cache->probs = head.probs;
        cache->valid = true;
    }
    return head.probs;
}

// Per-sample data term of the cost: binary cross-entropy over all outputs,
//   -log F_y - sum_{k != y} log(1 - F_k),
// probabilities clamped to [kProbFloor, 1 - kProbFloor] inside the logs.
template <class Scalar>
double sample_loss(const Tensor<Scalar>& probs, int label) {
    const int k = static_cast<int>(probs.size());
    if (label < 1 || label > k)
        throw ArgumentError("sample_loss: label " + std::to_string(label) + " outside 1.." +
                            std::to_string(k));
    double loss = 0.0;
    for (int i = 0; i < k; ++i) {
        double f = std::min(std::max(double(probs[i]), kProbFloor), 1.0 - kProbFloor);
        loss -= (i == label - 1) ? std::log(f) : std::log(1.0 - f);
    }
    return loss;
}

// Gradient of sample_loss with respect to the logits (softmax folded in).
// With G = sum_{k != y} F_k / (1 - F_k):
//   d/dz_j = F_j - [j == y] + (j != y ? F_j / (1 - F_j) : 0) - F_j * G
template <class Scalar>
Tensor<Scalar> loss_grad_logits(const Tensor<Scalar>& probs, int label) {
    const int k = static_cast<int>(probs.size());
    const int y = label - 1;
    Tensor<Scalar> grad(probs.shape());
    double g = 0.0;
    for (int i = 0; i < k; ++i) {
        if (i == y) continue;
        double f = double(probs[i]);
        g += f / std::max(1.0 - f, kProbFloor);
    }
    for (int j = 0; j < k; ++j) {
        double f = double(probs[j]);
        double d = f - (j == y ? 1.0 : 0.0) - f * g;
        if (j != y) d += f / std::max(1.0 - f, kProbFloor);
        grad[j] = static_cast<Scalar>(d);
    }
    return grad;
}

// Gradients of the per-sample data term with respect to every parameter
// (the regularizer pull is the trainer's job). Masked feature slots receive
// exactly zero gradient. Accumulates into `grads`.
template <class Scalar>
void network_backward(const NetworkCache<Scalar>& cache, const Parameters<Scalar>& params,
                      int label, const ModelConfig& config, Parameters<Scalar>& grads) {
    if (!cache.valid)
        throw StateError("network_backward: forward cache not populated");
    if (static_cast<int>(cache.activations.size()) != config.cliques)
        throw StateError("network_backward: cache/config clique mismatch");

    Tensor<Scalar> gz = loss_grad_logits(cache.probs, label);
    DenseGrads<Scalar> g2 =
        dense_backward(gz, cache.hidden, cache.logits, params.fc2, Activation::kIdentity);
    DenseGrads<Scalar> g1 =
        dense_backward(g2.input, cache.concat, cache.hidden_pre, params.fc1, Activation::kTanh);

    grads.fc2.weights.array() += g2.weights.array();
    grads.fc2.biases.array() += g2.biases.array();
    grads.fc1.weights.array() += g1.weights.array();
    grads.fc1.biases.array() += g1.biases.array();

    const std::int64_t len = config.clique_feature_len();
    for (int i = 0; i < config.cliques; ++i) {
        Tensor<Scalar> slice(Shape{static_cast<int>(len)});
        std::copy(g1.input.data() + i * len, g1.input.data() + (i + 1) * len, slice.data());
        clique_backward(slice, cache.activations[i], params.cliques[i], config,
                        grads.cliques[i]);
    }
}

}  // namespace rcnn
