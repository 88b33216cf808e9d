#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>
#include <string>
#include <type_traits>
#include <vector>

#include <Eigen/Core>

#include "rcnn/errors.hpp"

namespace rcnn {

// Dense shape of up to four axes. Axis order convention throughout the
// library is (channel, temporal, height, width), row-major, so width runs
// fastest and temporal slices are contiguous per channel.
class Shape {
public:
    static constexpr int kMaxRank = 4;

    Shape() = default;
    Shape(std::initializer_list<int> extents) {
        if (static_cast<int>(extents.size()) > kMaxRank)
            throw DimensionError("Shape supports at most 4 axes, got " +
                                 std::to_string(extents.size()));
        for (int e : extents) extents_[rank_++] = e;
    }

    int rank() const { return rank_; }
    int operator[](int axis) const { return extents_[axis]; }
    int& operator[](int axis) { return extents_[axis]; }

    std::int64_t count() const {
        std::int64_t n = 1;
        for (int a = 0; a < rank_; ++a) n *= extents_[a];
        return n;
    }

    bool operator==(const Shape& o) const {
        if (rank_ != o.rank_) return false;
        for (int a = 0; a < rank_; ++a)
            if (extents_[a] != o.extents_[a]) return false;
        return true;
    }
    bool operator!=(const Shape& o) const { return !(*this == o); }

    std::string str() const {
        std::string s = "(";
        for (int a = 0; a < rank_; ++a) {
            if (a) s += ",";
            s += std::to_string(extents_[a]);
        }
        return s + ")";
    }

    void require_positive(const char* what) const {
        if (rank_ == 0)
            throw DimensionError(std::string(what) + ": rank-0 shape");
        for (int a = 0; a < rank_; ++a)
            if (extents_[a] < 1)
                throw DimensionError(std::string(what) + ": extent " +
                                     std::to_string(extents_[a]) + " on axis " +
                                     std::to_string(a) + " of " + str());
    }

private:
    std::array<int, kMaxRank> extents_{};
    int rank_ = 0;
};

template <class Scalar>
using ArrayMap = Eigen::Map<Eigen::Array<Scalar, Eigen::Dynamic, 1>>;
template <class Scalar>
using ConstArrayMap = Eigen::Map<const Eigen::Array<Scalar, Eigen::Dynamic, 1>>;
template <class Scalar>
using VectorMap = Eigen::Map<Eigen::Matrix<Scalar, Eigen::Dynamic, 1>>;
template <class Scalar>
using ConstVectorMap = Eigen::Map<const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>>;
template <class Scalar>
using RowMajorMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class Scalar>
using ConstMatrixMap = Eigen::Map<const RowMajorMatrix<Scalar>>;

// Dense row-major tensor of real values. Value type: freely copyable, and
// safe to share across threads once filled (all library code treats inputs
// as read-only; mutation happens only while a tensor is being built).
template <class Scalar>
class Tensor {
    static_assert(std::is_floating_point_v<Scalar>,
                  "Tensor is a carrier of real values");

public:
    Tensor() = default;

    explicit Tensor(Shape shape) : shape_(shape) {
        shape_.require_positive("Tensor");
        data_.assign(static_cast<std::size_t>(shape_.count()), Scalar(0));
    }

    Tensor(Shape shape, std::vector<Scalar> values)
        : shape_(shape), data_(std::move(values)) {
        shape_.require_positive("Tensor");
        if (static_cast<std::int64_t>(data_.size()) != shape_.count())
            throw DimensionError("Tensor: " + std::to_string(data_.size()) +
                                 " values for shape " + shape_.str());
    }

    static Tensor scalar(Scalar v) { return Tensor(Shape{1}, {v}); }

    const Shape& shape() const { return shape_; }
    std::int64_t size() const { return static_cast<std::int64_t>(data_.size()); }
    bool empty() const { return data_.empty(); }

    Scalar* data() { return data_.data(); }
    const Scalar* data() const { return data_.data(); }

    Scalar& operator[](std::int64_t i) { return data_[static_cast<std::size_t>(i)]; }
    const Scalar& operator[](std::int64_t i) const { return data_[static_cast<std::size_t>(i)]; }

    // Multi-index access; rank is the caller's responsibility on hot paths.
    Scalar& operator()(int a) { return data_[static_cast<std::size_t>(a)]; }
    const Scalar& operator()(int a) const { return data_[static_cast<std::size_t>(a)]; }
    Scalar& operator()(int a, int b) {
        return data_[static_cast<std::size_t>(a) * shape_[1] + b];
    }
    const Scalar& operator()(int a, int b) const {
        return data_[static_cast<std::size_t>(a) * shape_[1] + b];
    }
    Scalar& operator()(int a, int b, int c) {
        return data_[(static_cast<std::size_t>(a) * shape_[1] + b) * shape_[2] + c];
    }
    const Scalar& operator()(int a, int b, int c) const {
        return data_[(static_cast<std::size_t>(a) * shape_[1] + b) * shape_[2] + c];
    }
    Scalar& operator()(int a, int b, int c, int d) {
        return data_[((static_cast<std::size_t>(a) * shape_[1] + b) * shape_[2] + c) *
                         shape_[3] +
                     d];
    }
    const Scalar& operator()(int a, int b, int c, int d) const {
        return data_[((static_cast<std::size_t>(a) * shape_[1] + b) * shape_[2] + c) *
                         shape_[3] +
                     d];
    }

    ArrayMap<Scalar> array() { return ArrayMap<Scalar>(data(), size()); }
    ConstArrayMap<Scalar> array() const { return ConstArrayMap<Scalar>(data(), size()); }
    VectorMap<Scalar> vector() { return VectorMap<Scalar>(data(), size()); }
    ConstVectorMap<Scalar> vector() const { return ConstVectorMap<Scalar>(data(), size()); }

    void fill(Scalar v) { std::fill(data_.begin(), data_.end(), v); }

    // Same data, different shape; the element count must match exactly.
    Tensor reshaped(Shape shape) const {
        shape.require_positive("reshaped");
        if (shape.count() != size())
            throw DimensionError("reshaped: " + shape_.str() + " -> " + shape.str() +
                                 " changes the element count");
        return Tensor(shape, data_);
    }

    template <class Target>
    Tensor<Target> cast() const {
        std::vector<Target> out(data_.size());
        for (std::size_t i = 0; i < data_.size(); ++i)
            out[i] = static_cast<Target>(data_[i]);
        return Tensor<Target>(shape_, std::move(out));
    }

private:
    Shape shape_;
    std::vector<Scalar> data_;
};

// Valid-convolution output shape: per axis input - kernel + 1, stride 1,
// no padding. Both shapes must have the same rank.
inline Shape conv_output_shape(const Shape& input, const Shape& kernel) {
    if (input.rank() != kernel.rank())
        throw DimensionError("conv_output_shape: rank mismatch " + input.str() +
                             " vs " + kernel.str());
    Shape out = input;
    for (int a = 0; a < input.rank(); ++a) {
        if (kernel[a] > input[a])
            throw DimensionError("conv_output_shape: kernel extent " +
                                 std::to_string(kernel[a]) + " exceeds input extent " +
                                 std::to_string(input[a]) + " on axis " +
                                 std::to_string(a));
        out[a] = input[a] - kernel[a] + 1;
    }
    return out;
}

template <class Scalar>
Tensor<Scalar> tanh_map(const Tensor<Scalar>& t) {
    Tensor<Scalar> out(t.shape());
    out.array() = t.array().tanh();
    return out;
}

// Flattens the tensors into one vector, list order, each row-major. The
// inverse mapping (flat index -> source tensor + offset) is the running
// prefix sum of element counts.
template <class Scalar>
Tensor<Scalar> concat_flatten(const std::vector<const Tensor<Scalar>*>& tensors) {
    if (tensors.empty())
        throw ArgumentError("concat_flatten: empty tensor list");
    std::int64_t total = 0;
    for (const auto* t : tensors) total += t->size();
    Tensor<Scalar> out(Shape{static_cast<int>(total)});
    std::int64_t at = 0;
    for (const auto* t : tensors) {
        std::copy(t->data(), t->data() + t->size(), out.data() + at);
        at += t->size();
    }
    return out;
}

template <class Scalar>
Tensor<Scalar> concat_flatten(const std::vector<Tensor<Scalar>>& tensors) {
    std::vector<const Tensor<Scalar>*> ptrs;
    ptrs.reserve(tensors.size());
    for (const auto& t : tensors) ptrs.push_back(&t);
    return concat_flatten(ptrs);
}

// Copies frames [start, start+count) of a (channels, T, H, W) tensor.
// Temporal slices are contiguous per channel, so this is one span copy per
// channel.
template <class Scalar>
Tensor<Scalar> temporal_window(const Tensor<Scalar>& frames, int start, int count) {
    const Shape& s = frames.shape();
    if (s.rank() != 4)
        throw DimensionError("temporal_window: need (channels,T,H,W), got " + s.str());
    if (start < 0 || count < 1 || start + count > s[1])
        throw ArgumentError("temporal_window: [" + std::to_string(start) + "," +
                            std::to_string(start + count) + ") outside T=" +
                            std::to_string(s[1]));
    Tensor<Scalar> out(Shape{s[0], count, s[2], s[3]});
    const std::int64_t plane = static_cast<std::int64_t>(s[2]) * s[3];
    for (int c = 0; c < s[0]; ++c) {
        const Scalar* src = frames.data() + (static_cast<std::int64_t>(c) * s[1] + start) * plane;
        std::copy(src, src + plane * count, out.data() + static_cast<std::int64_t>(c) * count * plane);
    }
    return out;
}

}  // namespace rcnn
