#pragma once

#include <memory>
#include <utility>
#include <vector>

#include "rcnn/config.hpp"
#include "rcnn/layers.hpp"
#include "rcnn/params.hpp"
#include "rcnn/tensor.hpp"

namespace rcnn {

// Forward intermediates of one clique, kept only when a backward pass will
// follow. Indexing mirrors CliqueParams.
template <class Scalar>
struct CliqueCache {
    Tensor<Scalar> input;                         // (channels, t, H, W)
    std::vector<Tensor<Scalar>> conv1_pre, conv1_out;  // per i1
    std::vector<PoolRecord<Scalar>> pool1;             // per i1
    std::vector<Tensor<Scalar>> conv2_pre, conv2_out;  // per (i1,i2)
    std::vector<PoolRecord<Scalar>> pool2;             // per (i1,i2)
    std::vector<Tensor<Scalar>> conv3_pre;             // per chain, (t-shrink, h3, w3)
};

// Which feature slots of a clique's output are real versus inactivated.
// The feature vector is laid out as if the segment had max_frames frames:
// chain-major, then temporal slot, then the (h3 x w3) map cells row-major.
// A segment of t frames fills slots [0, t - temporal_shrink) of each chain;
// the trailing slots are zero with zero gradient.
template <class Scalar>
struct CliqueActivation {
    int frames = 0;       // t
    int maps_stage1 = 0;  // t - (conv1.t - 1)
    int maps_stage2 = 0;  // t - temporal_shrink (= active slots per chain)
    std::unique_ptr<CliqueCache<Scalar>> cache;

    bool masked(std::int64_t feature_index, const ModelConfig& config) const {
        const std::int64_t slot =
            (feature_index / config.map_cells()) % config.slots_per_chain();
        return slot >= maps_stage2;
    }
};

// conv3d -> pool -> conv3d -> pool -> conv2d over `frames`, any temporal
// extent >= temporal_shrink + 1. Returns one (T - shrink, h3, w3) tensor per
// kernel chain. Shared by the per-window forward and by the full-video
// scoring cache, which is what makes the two produce bit-identical values.
template <class Scalar>
std::vector<Tensor<Scalar>> clique_pipeline(const Tensor<Scalar>& frames,
                                            const CliqueParams<Scalar>& params,
                                            const ModelConfig& config,
                                            CliqueCache<Scalar>* cache = nullptr) {
    const int c1 = config.conv1_kernels, c2 = config.conv2_kernels, c3 = config.conv3_kernels;
    const int t = frames.shape()[1];
    const int maps2 = t - config.temporal_shrink();

    if (cache) {
        cache->input = frames;
        cache->conv1_pre.resize(c1);
        cache->conv1_out.resize(c1);
        cache->pool1.resize(c1);
        cache->conv2_pre.resize(std::size_t(c1) * c2);
        cache->conv2_out.resize(std::size_t(c1) * c2);
        cache->pool2.resize(std::size_t(c1) * c2);
        cache->conv3_pre.resize(std::size_t(c1) * c2 * c3);
    }

    std::vector<Tensor<Scalar>> chains(std::size_t(c1) * c2 * c3);
    for (int i1 = 0; i1 < c1; ++i1) {
        Tensor<Scalar> pre1;
        Tensor<Scalar> out1 = conv3d_forward(frames, params.conv1[i1], cache ? &pre1 : nullptr);
        PoolRecord<Scalar> p1 = maxpool_forward(out1, config.pool1.h, config.pool1.w);
        const Shape& ps1 = p1.pooled.shape();
        Tensor<Scalar> lifted1 = p1.pooled.reshaped(Shape{1, ps1[0], ps1[1], ps1[2]});

        for (int i2 = 0; i2 < c2; ++i2) {
            const int q2 = i1 * c2 + i2;
            Tensor<Scalar> pre2;
            Tensor<Scalar> out2 =
                conv3d_forward(lifted1, params.conv2[q2], cache ? &pre2 : nullptr);
            PoolRecord<Scalar> p2 = maxpool_forward(out2, config.pool2.h, config.pool2.w);
            const Shape& ps2 = p2.pooled.shape();  // (maps2, hp2, wp2)

            for (int i3 = 0; i3 < c3; ++i3) {
                const int q3 = q2 * c3 + i3;
                const auto& kernel = params.conv3[q3];
                Tensor<Scalar> chain(
                    Shape{maps2, ps2[1] - kernel.kh() + 1, ps2[2] - kernel.kw() + 1});
                Tensor<Scalar> chain_pre;
                if (cache) chain_pre = Tensor<Scalar>(chain.shape());
                const std::int64_t cells =
                    static_cast<std::int64_t>(chain.shape()[1]) * chain.shape()[2];
                for (int u = 0; u < maps2; ++u) {
                    Tensor<Scalar> map(Shape{ps2[1], ps2[2]});
                    std::copy(&p2.pooled(u, 0, 0), &p2.pooled(u, 0, 0) + ps2[1] * ps2[2],
                              map.data());
                    Tensor<Scalar> pre3;
                    Tensor<Scalar> out3 =
                        conv2d_forward(map, kernel, cache ? &pre3 : nullptr);
                    std::copy(out3.data(), out3.data() + cells, chain.data() + u * cells);
                    if (cache)
                        std::copy(pre3.data(), pre3.data() + cells,
                                  chain_pre.data() + u * cells);
                }
                if (cache) cache->conv3_pre[q3] = std::move(chain_pre);
                chains[q3] = std::move(chain);
            }
            if (cache) {
                cache->conv2_pre[q2] = std::move(pre2);
                cache->conv2_out[q2] = std::move(out2);
                cache->pool2[q2] = std::move(p2);
            }
        }
        if (cache) {
            cache->conv1_pre[i1] = std::move(pre1);
            cache->conv1_out[i1] = std::move(out1);
            cache->pool1[i1] = std::move(p1);
        }
    }
    return chains;
}

// Copies `active` temporal maps per chain, starting at `offset`, into the
// fixed as-if-max_frames layout; trailing slots stay zero.
template <class Scalar>
Tensor<Scalar> assemble_clique_features(const std::vector<Tensor<Scalar>>& chains, int offset,
                                        int active, const ModelConfig& config) {
    const int slots = config.slots_per_chain();
    const std::int64_t cells = config.map_cells();
    Tensor<Scalar> features(Shape{static_cast<int>(config.clique_feature_len())});
    for (std::size_t q = 0; q < chains.size(); ++q) {
        const Scalar* src = chains[q].data() + offset * cells;
        Scalar* dst = features.data() + static_cast<std::int64_t>(q) * slots * cells;
        std::copy(src, src + static_cast<std::int64_t>(active) * cells, dst);
    }
    return features;
}

// Forward pass of one clique over a segment of t frames, min_frames <= t <=
// max_frames. Produces the fixed-length feature vector with trailing slots
// zeroed for short segments.
template <class Scalar>
std::pair<Tensor<Scalar>, CliqueActivation<Scalar>> clique_forward(
    const Tensor<Scalar>& frames, const CliqueParams<Scalar>& params, const ModelConfig& config,
    bool keep_cache = false) {
    const Shape& fs = frames.shape();
    if (fs.rank() != 4 || fs[0] != config.channels || fs[2] != config.frame_h ||
        fs[3] != config.frame_w)
        throw DimensionError("clique_forward: frames " + fs.str() + " do not match config (" +
                             std::to_string(config.channels) + ",t," +
                             std::to_string(config.frame_h) + "," +
                             std::to_string(config.frame_w) + ")");
    const int t = fs[1];
    if (t < config.min_frames || t > config.max_frames)
        throw ArgumentError("clique_forward: segment of " + std::to_string(t) +
                            " frames outside [" + std::to_string(config.min_frames) + "," +
                            std::to_string(config.max_frames) + "]");

    CliqueActivation<Scalar> act;
    act.frames = t;
    act.maps_stage1 = config.valid_maps(1, t);
    act.maps_stage2 = config.valid_maps(2, t);
    if (keep_cache) act.cache = std::make_unique<CliqueCache<Scalar>>();

    std::vector<Tensor<Scalar>> chains =
        clique_pipeline(frames, params, config, act.cache.get());
    Tensor<Scalar> features = assemble_clique_features(chains, 0, act.maps_stage2, config);
    return {std::move(features), std::move(act)};
}

// Backward through one clique; masked feature slots contribute nothing.
// Parameter gradients are accumulated into `grads` (same structure as the
// parameters, caller-zeroed).
template <class Scalar>
void clique_backward(const Tensor<Scalar>& grad_features,
                     const CliqueActivation<Scalar>& activation,
                     const CliqueParams<Scalar>& params, const ModelConfig& config,
                     CliqueParams<Scalar>& grads) {
    if (!activation.cache)
        throw StateError("clique_backward: no forward cache retained");
    const CliqueCache<Scalar>& cache = *activation.cache;
    const int c1 = config.conv1_kernels, c2 = config.conv2_kernels, c3 = config.conv3_kernels;
    const int active = activation.maps_stage2;
    const int slots = config.slots_per_chain();
    const std::int64_t cells = config.map_cells();

    for (int i1 = 0; i1 < c1; ++i1) {
        const Shape& ps1 = cache.pool1[i1].pooled.shape();
        Tensor<Scalar> grad_pool1(ps1);

        for (int i2 = 0; i2 < c2; ++i2) {
            const int q2 = i1 * c2 + i2;
            const Shape& ps2 = cache.pool2[q2].pooled.shape();
            Tensor<Scalar> grad_pool2(ps2);

            for (int i3 = 0; i3 < c3; ++i3) {
                const int q3 = q2 * c3 + i3;
                const auto& kernel = params.conv3[q3];
                const Shape map_shape{ps2[1], ps2[2]};
                const Shape out_shape{ps2[1] - kernel.kh() + 1, ps2[2] - kernel.kw() + 1};
                for (int u = 0; u < active; ++u) {
                    Tensor<Scalar> gout(out_shape);
                    const Scalar* gsrc = grad_features.data() +
                                         (static_cast<std::int64_t>(q3) * slots + u) * cells;
                    std::copy(gsrc, gsrc + cells, gout.data());

                    Tensor<Scalar> map(map_shape);
                    std::copy(&cache.pool2[q2].pooled(u, 0, 0),
                              &cache.pool2[q2].pooled(u, 0, 0) + map_shape.count(), map.data());
                    Tensor<Scalar> pre(out_shape);
                    const Scalar* psrc = cache.conv3_pre[q3].data() + u * cells;
                    std::copy(psrc, psrc + cells, pre.data());

                    Conv3DGrads<Scalar> g = conv2d_backward(gout, map, pre, kernel, true);
                    grads.conv3[q3].weights.array() += g.weights.array();
                    grads.conv3[q3].bias += g.bias;
                    ArrayMap<Scalar>(&grad_pool2(u, 0, 0), map_shape.count()) +=
                        g.input.array();
                }
            }

            Tensor<Scalar> grad_conv2_out =
                maxpool_backward(grad_pool2, cache.pool2[q2], cache.conv2_out[q2].shape());
            const Shape& p1s = cache.pool1[i1].pooled.shape();
            Tensor<Scalar> lifted1 =
                cache.pool1[i1].pooled.reshaped(Shape{1, p1s[0], p1s[1], p1s[2]});
            Conv3DGrads<Scalar> g2 = conv3d_backward(grad_conv2_out, lifted1,
                                                     cache.conv2_pre[q2], params.conv2[q2], true);
            grads.conv2[q2].weights.array() += g2.weights.array();
            grads.conv2[q2].bias += g2.bias;
            grad_pool1.array() += g2.input.array();
        }

        Tensor<Scalar> grad_conv1_out =
            maxpool_backward(grad_pool1, cache.pool1[i1], cache.conv1_out[i1].shape());
        Conv3DGrads<Scalar> g1 = conv3d_backward(grad_conv1_out, cache.input,
                                                 cache.conv1_pre[i1], params.conv1[i1], false);
        grads.conv1[i1].weights.array() += g1.weights.array();
        grads.conv1[i1].bias += g1.bias;
    }
}

}  // namespace rcnn
