#pragma once

#include <cassert>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace advlab {

/// Dense multi-dimensional array, row-major, channel-first for images (C x H x W).
/// Plain value type: copying copies the buffer.
template <class S>
struct TensorT {
    std::vector<int> shape;
    std::vector<S> data;

    TensorT() = default;

    explicit TensorT(std::vector<int> shp) : shape(std::move(shp)), data(checked_numel(shape), S(0)) {}

    TensorT(std::vector<int> shp, std::vector<S> d) : shape(std::move(shp)), data(std::move(d)) {
        if (checked_numel(shape) != static_cast<std::int64_t>(data.size()))
            throw std::invalid_argument("tensor: shape does not match data length");
    }

    std::int64_t numel() const { return static_cast<std::int64_t>(data.size()); }

    int dim(int i) const { return shape[static_cast<std::size_t>(i)]; }

    // C x H x W accessors for image-shaped tensors.
    S& at(int c, int y, int x) {
        return data[(static_cast<std::size_t>(c) * shape[1] + y) * shape[2] + x];
    }
    S at(int c, int y, int x) const {
        return data[(static_cast<std::size_t>(c) * shape[1] + y) * shape[2] + x];
    }

    bool same_shape(const TensorT& other) const { return shape == other.shape; }

    static std::int64_t checked_numel(const std::vector<int>& shp) {
        std::int64_t n = 1;
        for (int d : shp) {
            if (d <= 0) throw std::invalid_argument("tensor: non-positive dimension");
            n *= d;
        }
        return n;
    }
};

using TensorF = TensorT<float>;
using TensorD = TensorT<double>;
using Tensor = TensorF;

template <class S>
TensorT<S> zeros_like(const TensorT<S>& t) {
    return TensorT<S>(t.shape);
}

template <class S, class T>
TensorT<T> tensor_cast(const TensorT<S>& t) {
    TensorT<T> out(t.shape);
    for (std::size_t i = 0; i < t.data.size(); ++i) out.data[i] = static_cast<T>(t.data[i]);
    return out;
}

/// Elementwise sign: negatives -> -1, positives -> +1, exact zero -> 0.
template <class S>
TensorT<S> sign(const TensorT<S>& t) {
    TensorT<S> out(t.shape);
    for (std::size_t i = 0; i < t.data.size(); ++i) {
        S v = t.data[i];
        out.data[i] = (v > S(0)) ? S(1) : (v < S(0) ? S(-1) : S(0));
    }
    return out;
}

template <class S>
TensorT<S> clamp(const TensorT<S>& t, S lo, S hi) {
    if (lo > hi) throw std::invalid_argument("clamp: lo > hi");
    TensorT<S> out(t.shape);
    for (std::size_t i = 0; i < t.data.size(); ++i) {
        S v = t.data[i];
        out.data[i] = v < lo ? lo : (v > hi ? hi : v);
    }
    return out;
}

/// Sum of absolute values, accumulated in double in index order.
template <class S>
double l1_norm(const TensorT<S>& t) {
    double acc = 0.0;
    for (S v : t.data) acc += std::abs(static_cast<double>(v));
    return acc;
}

template <class S>
double linf_norm(const TensorT<S>& t) {
    double m = 0.0;
    for (S v : t.data) m = std::max(m, std::abs(static_cast<double>(v)));
    return m;
}

template <class S>
double dot(const TensorT<S>& a, const TensorT<S>& b) {
    assert(a.numel() == b.numel());
    double acc = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i)
        acc += static_cast<double>(a.data[i]) * static_cast<double>(b.data[i]);
    return acc;
}

template <class S>
TensorT<S> add(const TensorT<S>& a, const TensorT<S>& b) {
    if (!a.same_shape(b)) throw std::invalid_argument("add: shape mismatch");
    TensorT<S> out(a.shape);
    for (std::size_t i = 0; i < a.data.size(); ++i) out.data[i] = a.data[i] + b.data[i];
    return out;
}

template <class S>
void add_into(TensorT<S>& dst, const TensorT<S>& src) {
    if (!dst.same_shape(src)) throw std::invalid_argument("add_into: shape mismatch");
    for (std::size_t i = 0; i < dst.data.size(); ++i) dst.data[i] += src.data[i];
}

template <class S>
TensorT<S> scale(const TensorT<S>& a, S k) {
    TensorT<S> out(a.shape);
    for (std::size_t i = 0; i < a.data.size(); ++i) out.data[i] = a.data[i] * k;
    return out;
}

template <class S>
bool all_finite(const TensorT<S>& t) {
    for (S v : t.data)
        if (!std::isfinite(static_cast<double>(v))) return false;
    return true;
}

} // namespace advlab
