#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "rcnn/config.hpp"
#include "rcnn/layers.hpp"
#include "rcnn/rng.hpp"
#include "rcnn/tensor.hpp"

namespace rcnn {

// Per-clique convolution weights. All cliques share the same structure but
// carry independent values. Second- and third-layer kernels are independent
// per upstream set:
//   conv1[i1]                    i1 in [0,c1)        weights (channels, t1, h1, w1)
//   conv2[i1*c2 + i2]            i2 in [0,c2)        weights (1, t2, h2, w2)
//   conv3[(i1*c2 + i2)*c3 + i3]  i3 in [0,c3)        weights (1, 1, h3, w3)
template <class Scalar>
struct CliqueParams {
    std::vector<Conv3DKernel<Scalar>> conv1;
    std::vector<Conv3DKernel<Scalar>> conv2;
    std::vector<Conv3DKernel<Scalar>> conv3;
};

// All learnable weights. The two full-connection layers sit above the concat
// of the clique features and are shared across cliques.
template <class Scalar>
struct Parameters {
    std::vector<CliqueParams<Scalar>> cliques;
    DenseLayer<Scalar> fc1;  // concat_len -> hidden_units, tanh
    DenseLayer<Scalar> fc2;  // hidden_units -> classes, identity (softmax applied after)
};

// Canonical traversal order; serialization, SGD updates, gradient flattening
// and the checkpoint format all rely on it. fn receives (ptr, count).
template <class Scalar, class Fn>
void for_each_param_span(Parameters<Scalar>& p, Fn&& fn) {
    for (auto& cl : p.cliques) {
        for (auto& k : cl.conv1) {
            fn(k.weights.data(), k.weights.size());
            fn(&k.bias, std::int64_t(1));
        }
        for (auto& k : cl.conv2) {
            fn(k.weights.data(), k.weights.size());
            fn(&k.bias, std::int64_t(1));
        }
        for (auto& k : cl.conv3) {
            fn(k.weights.data(), k.weights.size());
            fn(&k.bias, std::int64_t(1));
        }
    }
    fn(p.fc1.weights.data(), p.fc1.weights.size());
    fn(p.fc1.biases.data(), p.fc1.biases.size());
    fn(p.fc2.weights.data(), p.fc2.weights.size());
    fn(p.fc2.biases.data(), p.fc2.biases.size());
}

template <class Scalar, class Fn>
void for_each_param_span(const Parameters<Scalar>& p, Fn&& fn) {
    for_each_param_span(const_cast<Parameters<Scalar>&>(p),
                        [&fn](Scalar* ptr, std::int64_t n) {
                            fn(static_cast<const Scalar*>(ptr), n);
                        });
}

// Walks two same-structure parameter sets in lockstep (weights + their
// gradients, typically). fn receives (ptr_a, ptr_b, count).
template <class Scalar, class Fn>
void for_each_param_pair(Parameters<Scalar>& a, const Parameters<Scalar>& b, Fn&& fn) {
    struct Span {
        const Scalar* ptr;
        std::int64_t n;
    };
    std::vector<Span> spans;
    for_each_param_span(b, [&spans](const Scalar* ptr, std::int64_t n) {
        spans.push_back({ptr, n});
    });
    std::size_t i = 0;
    for_each_param_span(a, [&spans, &i, &fn](Scalar* ptr, std::int64_t n) {
        if (i >= spans.size() || spans[i].n != n)
            throw StateError("for_each_param_pair: structure mismatch");
        fn(ptr, spans[i].ptr, n);
        ++i;
    });
}

template <class Scalar>
std::int64_t parameter_count(const Parameters<Scalar>& p) {
    std::int64_t n = 0;
    for_each_param_span(p, [&n](const Scalar*, std::int64_t c) { n += c; });
    return n;
}

inline std::int64_t parameter_count(const ModelConfig& c) {
    const std::int64_t conv1 =
        c.conv1_kernels * (std::int64_t(c.channels) * c.conv1.t * c.conv1.h * c.conv1.w + 1);
    const std::int64_t conv2 = std::int64_t(c.conv1_kernels) * c.conv2_kernels *
                               (std::int64_t(c.conv2.t) * c.conv2.h * c.conv2.w + 1);
    const std::int64_t conv3 = std::int64_t(c.chain_count()) * (std::int64_t(c.conv3.h) * c.conv3.w + 1);
    const std::int64_t fc1 = c.concat_len() * c.hidden_units + c.hidden_units;
    const std::int64_t fc2 = std::int64_t(c.hidden_units) * c.classes + c.classes;
    return c.cliques * (conv1 + conv2 + conv3) + fc1 + fc2;
}

template <class Scalar>
double squared_norm(const Parameters<Scalar>& p) {
    double n = 0.0;
    for_each_param_span(p, [&n](const Scalar* ptr, std::int64_t c) {
        for (std::int64_t i = 0; i < c; ++i) n += double(ptr[i]) * double(ptr[i]);
    });
    return n;
}

namespace detail {

template <class Scalar>
void glorot_fill(Tensor<Scalar>& t, std::int64_t fan_in, std::int64_t fan_out, SeededRng& rng) {
    const double bound = std::sqrt(6.0 / double(fan_in + fan_out));
    for (std::int64_t i = 0; i < t.size(); ++i)
        t[i] = static_cast<Scalar>(rng.uniform(-bound, bound));
}

template <class Scalar>
Conv3DKernel<Scalar> make_conv_kernel(int channels, int kt, int kh, int kw, int layer_kernels,
                                      SeededRng& rng) {
    Conv3DKernel<Scalar> k;
    k.weights = Tensor<Scalar>(Shape{channels, kt, kh, kw});
    // Receptive-field fan-in, layer width as fan-out.
    glorot_fill(k.weights, k.weights.size(), std::int64_t(layer_kernels), rng);
    k.bias = Scalar(0);
    return k;
}

template <class Scalar>
DenseLayer<Scalar> make_dense(std::int64_t fan_in, std::int64_t fan_out, SeededRng& rng) {
    DenseLayer<Scalar> d;
    d.weights = Tensor<Scalar>(Shape{int(fan_in), int(fan_out)});
    d.biases = Tensor<Scalar>(Shape{int(fan_out)});
    glorot_fill(d.weights, fan_in, fan_out, rng);
    return d;
}

}  // namespace detail

// Seeded uniform init on +-sqrt(6/(fan_in+fan_out)), biases zero.
template <class Scalar>
Parameters<Scalar> init_parameters(const ModelConfig& c, std::uint64_t seed) {
    c.validate();
    SeededRng rng(seed);
    Parameters<Scalar> p;
    p.cliques.resize(static_cast<std::size_t>(c.cliques));
    for (auto& cl : p.cliques) {
        cl.conv1.reserve(c.conv1_kernels);
        for (int i = 0; i < c.conv1_kernels; ++i)
            cl.conv1.push_back(detail::make_conv_kernel<Scalar>(
                c.channels, c.conv1.t, c.conv1.h, c.conv1.w, c.conv1_kernels, rng));
        cl.conv2.reserve(std::size_t(c.conv1_kernels) * c.conv2_kernels);
        for (int i = 0; i < c.conv1_kernels * c.conv2_kernels; ++i)
            cl.conv2.push_back(detail::make_conv_kernel<Scalar>(
                1, c.conv2.t, c.conv2.h, c.conv2.w, c.conv2_kernels, rng));
        cl.conv3.reserve(std::size_t(c.chain_count()));
        for (int i = 0; i < c.chain_count(); ++i)
            cl.conv3.push_back(detail::make_conv_kernel<Scalar>(1, 1, c.conv3.h, c.conv3.w,
                                                                c.conv3_kernels, rng));
    }
    p.fc1 = detail::make_dense<Scalar>(c.concat_len(), c.hidden_units, rng);
    p.fc2 = detail::make_dense<Scalar>(c.hidden_units, c.classes, rng);
    return p;
}

// Zero-valued parameters with the same structure; gradient accumulator.
template <class Scalar>
Parameters<Scalar> zero_like(const Parameters<Scalar>& p) {
    Parameters<Scalar> z = p;
    for_each_param_span(z, [](Scalar* ptr, std::int64_t n) {
        std::fill(ptr, ptr + n, Scalar(0));
    });
    return z;
}

template <class Target, class Scalar>
Parameters<Target> cast_parameters(const Parameters<Scalar>& p) {
    Parameters<Target> out;
    out.cliques.resize(p.cliques.size());
    for (std::size_t i = 0; i < p.cliques.size(); ++i) {
        for (const auto& k : p.cliques[i].conv1)
            out.cliques[i].conv1.push_back(
                {k.weights.template cast<Target>(), static_cast<Target>(k.bias)});
        for (const auto& k : p.cliques[i].conv2)
            out.cliques[i].conv2.push_back(
                {k.weights.template cast<Target>(), static_cast<Target>(k.bias)});
        for (const auto& k : p.cliques[i].conv3)
            out.cliques[i].conv3.push_back(
                {k.weights.template cast<Target>(), static_cast<Target>(k.bias)});
    }
    out.fc1 = {p.fc1.weights.template cast<Target>(), p.fc1.biases.template cast<Target>()};
    out.fc2 = {p.fc2.weights.template cast<Target>(), p.fc2.biases.template cast<Target>()};
    return out;
}

// Carries single-channel pretrained weights into the two-channel model: the
// first-layer kernels gain a depth channel that copies the gray weights, all
// deeper convolution parameters transfer unchanged, and both full-connection
// layers are re-initialized (seeded) because they must be relearned on the
// target data.
template <class Scalar>
Parameters<Scalar> transfer_pretrained(const Parameters<Scalar>& pretrain,
                                       const ModelConfig& target, std::uint64_t seed) {
    target.validate();
    if (target.channels != 2)
        throw ArgumentError("transfer_pretrained: target config must have 2 channels");
    if (static_cast<int>(pretrain.cliques.size()) != target.cliques)
        throw ArgumentError("transfer_pretrained: clique count mismatch");
    for (const auto& cl : pretrain.cliques) {
        if (static_cast<int>(cl.conv1.size()) != target.conv1_kernels ||
            static_cast<int>(cl.conv2.size()) != target.conv1_kernels * target.conv2_kernels ||
            static_cast<int>(cl.conv3.size()) != target.chain_count())
            throw ArgumentError("transfer_pretrained: kernel counts do not match target config");
        for (const auto& k : cl.conv1) {
            if (k.channels() != 1)
                throw ArgumentError("transfer_pretrained: pretrain kernels must be single-channel");
            if (k.kt() != target.conv1.t || k.kh() != target.conv1.h || k.kw() != target.conv1.w)
                throw ArgumentError("transfer_pretrained: first-layer kernel extents differ");
        }
    }

    SeededRng rng(seed);
    Parameters<Scalar> out;
    out.cliques.resize(pretrain.cliques.size());
    for (std::size_t ci = 0; ci < pretrain.cliques.size(); ++ci) {
        const auto& src = pretrain.cliques[ci];
        auto& dst = out.cliques[ci];
        dst.conv1.reserve(src.conv1.size());
        for (const auto& k : src.conv1) {
            Conv3DKernel<Scalar> dup;
            dup.weights = Tensor<Scalar>(Shape{2, k.kt(), k.kh(), k.kw()});
            const std::int64_t n = k.weights.size();
            std::copy(k.weights.data(), k.weights.data() + n, dup.weights.data());
            std::copy(k.weights.data(), k.weights.data() + n, dup.weights.data() + n);
            dup.bias = k.bias;
            dst.conv1.push_back(std::move(dup));
        }
        dst.conv2 = src.conv2;
        dst.conv3 = src.conv3;
    }
    out.fc1 = detail::make_dense<Scalar>(target.concat_len(), target.hidden_units, rng);
    out.fc2 = detail::make_dense<Scalar>(target.hidden_units, target.classes, rng);
    return out;
}

}  // namespace rcnn
