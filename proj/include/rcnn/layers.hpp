#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "rcnn/tensor.hpp"

namespace rcnn {

// One 3D convolution kernel: weights (channels, kt, kh, kw) plus one bias
// per feature-map set. A 2D kernel is the kt = 1 special case (and a plain
// spatial kernel additionally has channels = 1).
template <class Scalar>
struct Conv3DKernel {
    Tensor<Scalar> weights;
    Scalar bias = Scalar(0);

    int channels() const { return weights.shape()[0]; }
    int kt() const { return weights.shape()[1]; }
    int kh() const { return weights.shape()[2]; }
    int kw() const { return weights.shape()[3]; }
};

template <class Scalar>
struct DenseLayer {
    Tensor<Scalar> weights;  // (fan_in, fan_out), row-major
    Tensor<Scalar> biases;   // (fan_out)

    int fan_in() const { return weights.shape()[0]; }
    int fan_out() const { return weights.shape()[1]; }
};

enum class Activation { kTanh, kIdentity };

// ---------------------------------------------------------------------------
// 3D convolution (correlation form, no kernel flip), tanh activation.
//
// out(s,y,x) = tanh(b + sum_{c,k,j,i} w(c,k,j,i) * in(c, s+k, y+j, x+i))
//
// The channel sum happens before the activation. If `preactivation` is
// non-null it receives the pre-tanh sums (needed by the backward pass).
// ---------------------------------------------------------------------------
template <class Scalar>
Tensor<Scalar> conv3d_forward(const Tensor<Scalar>& input, const Conv3DKernel<Scalar>& kernel,
                              Tensor<Scalar>* preactivation = nullptr) {
    const Shape& is = input.shape();
    const Shape& ks = kernel.weights.shape();
    if (is.rank() != 4 || ks.rank() != 4)
        throw DimensionError("conv3d_forward: need (channels,T,H,W) input and kernel, got " +
                             is.str() + " and " + ks.str());
    if (is[0] != ks[0])
        throw DimensionError("conv3d_forward: channel mismatch, input " + is.str() +
                             " vs kernel " + ks.str());
    const Shape os = conv_output_shape(Shape{is[1], is[2], is[3]}, Shape{ks[1], ks[2], ks[3]});
    const int to = os[0], ho = os[1], wo = os[2];
    const int channels = is[0], kt = ks[1], kh = ks[2], kw = ks[3];

    Tensor<Scalar> pre(os);
    pre.fill(kernel.bias);
    for (int s = 0; s < to; ++s) {
        for (int y = 0; y < ho; ++y) {
            ArrayMap<Scalar> acc(&pre(s, y, 0), wo);
            for (int c = 0; c < channels; ++c)
                for (int k = 0; k < kt; ++k)
                    for (int j = 0; j < kh; ++j) {
                        const Scalar* in_row = &input(c, s + k, y + j, 0);
                        const Scalar* w_row = &kernel.weights(c, k, j, 0);
                        for (int i = 0; i < kw; ++i)
                            acc += w_row[i] * ConstArrayMap<Scalar>(in_row + i, wo);
                    }
        }
    }
    Tensor<Scalar> out = tanh_map(pre);
    if (preactivation) *preactivation = std::move(pre);
    return out;
}

template <class Scalar>
struct Conv3DGrads {
    Tensor<Scalar> input;    // empty when not requested
    Tensor<Scalar> weights;  // same shape as kernel.weights
    Scalar bias = Scalar(0);
};

template <class Scalar>
Conv3DGrads<Scalar> conv3d_backward(const Tensor<Scalar>& grad_out,
                                    const Tensor<Scalar>& cached_input,
                                    const Tensor<Scalar>& cached_preactivation,
                                    const Conv3DKernel<Scalar>& kernel,
                                    bool want_input_grad = true) {
    const Shape& is = cached_input.shape();
    const Shape& ks = kernel.weights.shape();
    if (is.rank() != 4 || ks.rank() != 4 || is[0] != ks[0])
        throw StateError("conv3d_backward: cached input " + is.str() +
                         " inconsistent with kernel " + ks.str());
    const Shape os = conv_output_shape(Shape{is[1], is[2], is[3]}, Shape{ks[1], ks[2], ks[3]});
    if (grad_out.shape() != os || cached_preactivation.shape() != os)
        throw StateError("conv3d_backward: cache/grad shape " + grad_out.shape().str() +
                         " does not match forward output " + os.str());
    const int to = os[0], ho = os[1], wo = os[2];
    const int channels = is[0], kt = ks[1], kh = ks[2], kw = ks[3];

    // d out / d pre = 1 - tanh(pre)^2
    Tensor<Scalar> gpre(os);
    gpre.array() = grad_out.array() * (Scalar(1) - cached_preactivation.array().tanh().square());

    Conv3DGrads<Scalar> g;
    g.bias = gpre.array().sum();
    g.weights = Tensor<Scalar>(ks);
    if (want_input_grad) g.input = Tensor<Scalar>(is);

    for (int s = 0; s < to; ++s) {
        for (int y = 0; y < ho; ++y) {
            ConstArrayMap<Scalar> grow(&gpre(s, y, 0), wo);
            for (int c = 0; c < channels; ++c)
                for (int k = 0; k < kt; ++k)
                    for (int j = 0; j < kh; ++j) {
                        const Scalar* in_row = &cached_input(c, s + k, y + j, 0);
                        Scalar* gw_row = &g.weights(c, k, j, 0);
                        for (int i = 0; i < kw; ++i)
                            gw_row[i] += (grow * ConstArrayMap<Scalar>(in_row + i, wo)).sum();
                        if (want_input_grad) {
                            Scalar* gi_row = &g.input(c, s + k, y + j, 0);
                            const Scalar* w_row = &kernel.weights(c, k, j, 0);
                            for (int i = 0; i < kw; ++i)
                                ArrayMap<Scalar>(gi_row + i, wo) += w_row[i] * grow;
                        }
                    }
        }
    }
    return g;
}

// ---------------------------------------------------------------------------
// Spatial max-pooling over non-overlapping windows, temporal axis untouched
// (each map pooled independently). Ties go to the first cell in row-major
// window order. Trailing remainder rows/columns form truncated windows.
// ---------------------------------------------------------------------------
template <class Scalar>
struct PoolRecord {
    Tensor<Scalar> pooled;             // (maps, Ho, Wo)
    std::vector<std::int64_t> argmax;  // flat index into the input per output cell
    Shape input_shape;
    int window_h = 0, window_w = 0;
};

template <class Scalar>
PoolRecord<Scalar> maxpool_forward(const Tensor<Scalar>& input, int window_h, int window_w) {
    const Shape& is = input.shape();
    if (is.rank() != 3)
        throw DimensionError("maxpool_forward: need (maps,H,W), got " + is.str());
    if (window_h < 1 || window_w < 1 || window_h > is[1] || window_w > is[2])
        throw DimensionError("maxpool_forward: window " + std::to_string(window_h) + "x" +
                             std::to_string(window_w) + " on input " + is.str());
    const int maps = is[0], h = is[1], w = is[2];
    const int ho = (h + window_h - 1) / window_h;
    const int wo = (w + window_w - 1) / window_w;

    PoolRecord<Scalar> rec;
    rec.pooled = Tensor<Scalar>(Shape{maps, ho, wo});
    rec.argmax.resize(static_cast<std::size_t>(maps) * ho * wo);
    rec.input_shape = is;
    rec.window_h = window_h;
    rec.window_w = window_w;

    std::int64_t out_idx = 0;
    for (int z = 0; z < maps; ++z)
        for (int oy = 0; oy < ho; ++oy)
            for (int ox = 0; ox < wo; ++ox, ++out_idx) {
                const int y1 = std::min((oy + 1) * window_h, h);
                const int x1 = std::min((ox + 1) * window_w, w);
                Scalar best = input(z, oy * window_h, ox * window_w);
                std::int64_t best_at =
                    (static_cast<std::int64_t>(z) * h + oy * window_h) * w + ox * window_w;
                for (int y = oy * window_h; y < y1; ++y)
                    for (int x = ox * window_w; x < x1; ++x) {
                        Scalar v = input(z, y, x);
                        if (v > best) {
                            best = v;
                            best_at = (static_cast<std::int64_t>(z) * h + y) * w + x;
                        }
                    }
                rec.pooled[out_idx] = best;
                rec.argmax[static_cast<std::size_t>(out_idx)] = best_at;
            }
    return rec;
}

template <class Scalar>
Tensor<Scalar> maxpool_backward(const Tensor<Scalar>& grad_out, const PoolRecord<Scalar>& record,
                                const Shape& input_shape) {
    if (record.input_shape != input_shape)
        throw StateError("maxpool_backward: record input shape " + record.input_shape.str() +
                         " vs " + input_shape.str());
    if (grad_out.shape() != record.pooled.shape())
        throw StateError("maxpool_backward: grad shape " + grad_out.shape().str() +
                         " vs pooled " + record.pooled.shape().str());
    Tensor<Scalar> grad_in(input_shape);
    const std::int64_t n = input_shape.count();
    for (std::int64_t i = 0; i < grad_out.size(); ++i) {
        const std::int64_t at = record.argmax[static_cast<std::size_t>(i)];
        if (at < 0 || at >= n)
            throw StateError("maxpool_backward: argmax " + std::to_string(at) +
                             " outside input of " + std::to_string(n) + " cells");
        grad_in[at] += grad_out[i];
    }
    return grad_in;
}

// ---------------------------------------------------------------------------
// 2D convolution: the temporal-length-1 special case of the 3D convolution,
// implemented as exactly that delegation (one code path).
// ---------------------------------------------------------------------------
template <class Scalar>
Tensor<Scalar> conv2d_forward(const Tensor<Scalar>& input_map, const Conv3DKernel<Scalar>& kernel,
                              Tensor<Scalar>* preactivation = nullptr) {
    const Shape& is = input_map.shape();
    if (is.rank() != 2)
        throw DimensionError("conv2d_forward: need (H,W), got " + is.str());
    if (kernel.channels() != 1 || kernel.kt() != 1)
        throw DimensionError("conv2d_forward: kernel must be (1,1,kh,kw), got " +
                             kernel.weights.shape().str());
    Tensor<Scalar> lifted = input_map.reshaped(Shape{1, 1, is[0], is[1]});
    Tensor<Scalar> pre;
    Tensor<Scalar> out = conv3d_forward(lifted, kernel, preactivation ? &pre : nullptr);
    const Shape& os = out.shape();  // (1, Ho, Wo)
    if (preactivation) *preactivation = pre.reshaped(Shape{os[1], os[2]});
    return out.reshaped(Shape{os[1], os[2]});
}

template <class Scalar>
Conv3DGrads<Scalar> conv2d_backward(const Tensor<Scalar>& grad_out,
                                    const Tensor<Scalar>& cached_input,
                                    const Tensor<Scalar>& cached_preactivation,
                                    const Conv3DKernel<Scalar>& kernel,
                                    bool want_input_grad = true) {
    const Shape& is = cached_input.shape();
    const Shape& os = grad_out.shape();
    if (is.rank() != 2 || os.rank() != 2)
        throw StateError("conv2d_backward: rank-2 caches expected");
    Conv3DGrads<Scalar> g = conv3d_backward(
        grad_out.reshaped(Shape{1, os[0], os[1]}),
        cached_input.reshaped(Shape{1, 1, is[0], is[1]}),
        cached_preactivation.reshaped(Shape{1, os[0], os[1]}), kernel, want_input_grad);
    if (want_input_grad) g.input = g.input.reshaped(Shape{is[0], is[1]});
    return g;
}

// ---------------------------------------------------------------------------
// Full connection: out = activation(W^T x + b).
// ---------------------------------------------------------------------------
template <class Scalar>
Tensor<Scalar> dense_forward(const Tensor<Scalar>& input, const DenseLayer<Scalar>& layer,
                             Activation activation, Tensor<Scalar>* preactivation = nullptr) {
    if (input.shape().rank() != 1 || input.size() != layer.fan_in())
        throw DimensionError("dense_forward: input " + input.shape().str() + " vs fan_in " +
                             std::to_string(layer.fan_in()));
    Tensor<Scalar> pre(Shape{layer.fan_out()});
    ConstMatrixMap<Scalar> w(layer.weights.data(), layer.fan_in(), layer.fan_out());
    pre.vector() = w.transpose() * input.vector() + layer.biases.vector();
    Tensor<Scalar> out = activation == Activation::kTanh ? tanh_map(pre) : pre;
    if (preactivation) *preactivation = std::move(pre);
    return out;
}

template <class Scalar>
struct DenseGrads {
    Tensor<Scalar> input;
    Tensor<Scalar> weights;
    Tensor<Scalar> biases;
};

template <class Scalar>
DenseGrads<Scalar> dense_backward(const Tensor<Scalar>& grad_out, const Tensor<Scalar>& cached_input,
                                  const Tensor<Scalar>& cached_preactivation,
                                  const DenseLayer<Scalar>& layer, Activation activation) {
    if (cached_input.size() != layer.fan_in() || cached_preactivation.size() != layer.fan_out() ||
        grad_out.size() != layer.fan_out())
        throw StateError("dense_backward: caches do not match layer " +
                         std::to_string(layer.fan_in()) + "x" + std::to_string(layer.fan_out()));
    Tensor<Scalar> gpre(Shape{layer.fan_out()});
    if (activation == Activation::kTanh)
        gpre.array() = grad_out.array() *
                       (Scalar(1) - cached_preactivation.array().tanh().square());
    else
        gpre.array() = grad_out.array();

    DenseGrads<Scalar> g;
    g.input = Tensor<Scalar>(Shape{layer.fan_in()});
    g.weights = Tensor<Scalar>(layer.weights.shape());
    g.biases = gpre;
    ConstMatrixMap<Scalar> w(layer.weights.data(), layer.fan_in(), layer.fan_out());
    g.input.vector() = w * gpre.vector();
    Eigen::Map<RowMajorMatrix<Scalar>> gw(g.weights.data(), layer.fan_in(), layer.fan_out());
    gw.noalias() = cached_input.vector() * gpre.vector().transpose();
    return g;
}

// Softmax with max-subtraction; outputs are strictly positive and sum to 1.
template <class Scalar>
Tensor<Scalar> softmax(const Tensor<Scalar>& logits) {
    if (logits.size() < 1)
        throw DimensionError("softmax: empty logits");
    if (!logits.array().isFinite().all())
        throw NumericError("softmax: non-finite logit");
    Tensor<Scalar> out(logits.shape());
    const Scalar m = logits.array().maxCoeff();
    out.array() = (logits.array() - m).exp();
    out.array() /= out.array().sum();
    return out;
}

}  // namespace rcnn
