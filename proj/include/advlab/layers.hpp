#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "advlab/tensor.hpp"

namespace advlab {

// ---------------------------------------------------------------------------
// Small GEMM kernels. Row-major everywhere. For every output element the
// k-terms are accumulated in increasing k order, which fixes the floating
// point summation order and keeps results reproducible run to run.
// ---------------------------------------------------------------------------

/// C[M x N] += A[M x K] * B[K x N]
template <class S>
void gemm_acc(int M, int N, int K, const S* A, const S* B, S* C) {
    for (int i = 0; i < M; ++i) {
        S* c_row = C + static_cast<std::size_t>(i) * N;
        const S* a_row = A + static_cast<std::size_t>(i) * K;
        for (int k = 0; k < K; ++k) {
            const S a = a_row[k];
            const S* b_row = B + static_cast<std::size_t>(k) * N;
            for (int j = 0; j < N; ++j) c_row[j] += a * b_row[j];
        }
    }
}

/// C[M x N] += A[M x K] * B^T where B is [N x K]
template <class S>
void gemm_abt_acc(int M, int N, int K, const S* A, const S* B, S* C) {
    for (int i = 0; i < M; ++i) {
        const S* a_row = A + static_cast<std::size_t>(i) * K;
        S* c_row = C + static_cast<std::size_t>(i) * N;
        for (int j = 0; j < N; ++j) {
            const S* b_row = B + static_cast<std::size_t>(j) * K;
            S acc = S(0);
            for (int k = 0; k < K; ++k) acc += a_row[k] * b_row[k];
            c_row[j] += acc;
        }
    }
}

/// C[M x N] += A^T * B where A is [K x M], B is [K x N]
template <class S>
void gemm_atb_acc(int M, int N, int K, const S* A, const S* B, S* C) {
    for (int k = 0; k < K; ++k) {
        const S* a_row = A + static_cast<std::size_t>(k) * M;
        const S* b_row = B + static_cast<std::size_t>(k) * N;
        for (int i = 0; i < M; ++i) {
            const S a = a_row[i];
            S* c_row = C + static_cast<std::size_t>(i) * N;
            for (int j = 0; j < N; ++j) c_row[j] += a * b_row[j];
        }
    }
}

// ---------------------------------------------------------------------------
// conv2d: direct cross-correlation via im2col. Input C x H x W, weights
// Cout x Cin x kh x kw. im2col rows are ordered (channel, kh, kw) with kernel
// width innermost.
// ---------------------------------------------------------------------------

inline int conv_out_dim(int in, int k, int stride, int pad) {
    return (in + 2 * pad - k) / stride + 1;
}

namespace detail {

template <class S>
void im2col(const TensorT<S>& in, int kh, int kw, int stride, int pad, int out_h, int out_w,
            std::vector<S>& cols) {
    const int C = in.shape[0], H = in.shape[1], W = in.shape[2];
    const std::size_t P = static_cast<std::size_t>(out_h) * out_w;
    cols.assign(static_cast<std::size_t>(C) * kh * kw * P, S(0));
    std::size_t r = 0;
    for (int c = 0; c < C; ++c) {
        for (int u = 0; u < kh; ++u) {
            for (int v = 0; v < kw; ++v, ++r) {
                S* dst = cols.data() + r * P;
                for (int oy = 0; oy < out_h; ++oy) {
                    const int iy = oy * stride + u - pad;
                    if (iy < 0 || iy >= H) continue;
                    const S* src = in.data.data() + (static_cast<std::size_t>(c) * H + iy) * W;
                    S* drow = dst + static_cast<std::size_t>(oy) * out_w;
                    for (int ox = 0; ox < out_w; ++ox) {
                        const int ix = ox * stride + v - pad;
                        if (ix >= 0 && ix < W) drow[ox] = src[ix];
                    }
                }
            }
        }
    }
}

template <class S>
void col2im_acc(const std::vector<S>& cols, int C, int H, int W, int kh, int kw, int stride,
                int pad, int out_h, int out_w, TensorT<S>& grad_in) {
    const std::size_t P = static_cast<std::size_t>(out_h) * out_w;
    std::size_t r = 0;
    for (int c = 0; c < C; ++c) {
        for (int u = 0; u < kh; ++u) {
            for (int v = 0; v < kw; ++v, ++r) {
                const S* src = cols.data() + r * P;
                for (int oy = 0; oy < out_h; ++oy) {
                    const int iy = oy * stride + u - pad;
                    if (iy < 0 || iy >= H) continue;
                    S* dst = grad_in.data.data() + (static_cast<std::size_t>(c) * H + iy) * W;
                    const S* srow = src + static_cast<std::size_t>(oy) * out_w;
                    for (int ox = 0; ox < out_w; ++ox) {
                        const int ix = ox * stride + v - pad;
                        if (ix >= 0 && ix < W) dst[ix] += srow[ox];
                    }
                }
            }
        }
    }
}

template <class S>
void check_conv_args(const TensorT<S>& input, const TensorT<S>& weights, int stride, int pad) {
    if (input.shape.size() != 3 || weights.shape.size() != 4)
        throw std::invalid_argument("conv2d: input must be CxHxW, weights CoutxCinxKhxKw");
    if (weights.shape[1] != input.shape[0])
        throw std::invalid_argument("conv2d: input channels do not match weight Cin");
    if (stride < 1) throw std::invalid_argument("conv2d: stride must be >= 1");
    if (pad < 0) throw std::invalid_argument("conv2d: negative padding");
    if (weights.shape[2] > input.shape[1] + 2 * pad || weights.shape[3] > input.shape[2] + 2 * pad)
        throw std::invalid_argument("conv2d: kernel larger than padded input");
}

} // namespace detail

template <class S>
TensorT<S> conv2d_forward(const TensorT<S>& input, const TensorT<S>& weights,
                          const std::vector<S>& bias, int stride, int pad) {
    detail::check_conv_args(input, weights, stride, pad);
    const int Cout = weights.shape[0], Cin = weights.shape[1];
    const int kh = weights.shape[2], kw = weights.shape[3];
    if (!bias.empty() && static_cast<int>(bias.size()) != Cout)
        throw std::invalid_argument("conv2d: bias length does not match Cout");
    const int out_h = conv_out_dim(input.shape[1], kh, stride, pad);
    const int out_w = conv_out_dim(input.shape[2], kw, stride, pad);
    const std::size_t P = static_cast<std::size_t>(out_h) * out_w;

    std::vector<S> cols;
    detail::im2col(input, kh, kw, stride, pad, out_h, out_w, cols);

    TensorT<S> out({Cout, out_h, out_w});
    for (int oc = 0; oc < Cout; ++oc) {
        const S b = bias.empty() ? S(0) : bias[oc];
        std::fill_n(out.data.data() + oc * P, P, b);
    }
    gemm_acc<S>(Cout, static_cast<int>(P), Cin * kh * kw, weights.data.data(), cols.data(),
                out.data.data());
    return out;
}

template <class S>
struct ConvGrads {
    TensorT<S> grad_input;
    TensorT<S> grad_weights;
    std::vector<S> grad_bias;
};

/// Exact adjoints of conv2d_forward. When want_param_grads is false only
/// grad_input is produced (the attack loop never needs weight gradients).
template <class S>
ConvGrads<S> conv2d_backward(const TensorT<S>& input, const TensorT<S>& weights,
                             const TensorT<S>& grad_output, int stride, int pad,
                             bool want_param_grads = true) {
    detail::check_conv_args(input, weights, stride, pad);
    const int Cout = weights.shape[0], Cin = weights.shape[1];
    const int kh = weights.shape[2], kw = weights.shape[3];
    const int out_h = conv_out_dim(input.shape[1], kh, stride, pad);
    const int out_w = conv_out_dim(input.shape[2], kw, stride, pad);
    if (grad_output.shape != std::vector<int>{Cout, out_h, out_w})
        throw std::invalid_argument("conv2d_backward: grad_output shape mismatch");
    const int P = out_h * out_w;
    const int R = Cin * kh * kw;

    ConvGrads<S> g;
    // grad wrt input: scatter W^T * grad_output back through im2col
    std::vector<S> colgrad(static_cast<std::size_t>(R) * P, S(0));
    gemm_atb_acc<S>(R, P, Cout, weights.data.data(), grad_output.data.data(), colgrad.data());
    g.grad_input = TensorT<S>(input.shape);
    detail::col2im_acc(colgrad, Cin, input.shape[1], input.shape[2], kh, kw, stride, pad, out_h,
                       out_w, g.grad_input);

    if (want_param_grads) {
        std::vector<S> cols;
        detail::im2col(input, kh, kw, stride, pad, out_h, out_w, cols);
        g.grad_weights = TensorT<S>(weights.shape);
        gemm_abt_acc<S>(Cout, R, P, grad_output.data.data(), cols.data(),
                        g.grad_weights.data.data());
        g.grad_bias.assign(Cout, S(0));
        for (int oc = 0; oc < Cout; ++oc) {
            double acc = 0.0;
            const S* row = grad_output.data.data() + static_cast<std::size_t>(oc) * P;
            for (int p = 0; p < P; ++p) acc += static_cast<double>(row[p]);
            g.grad_bias[oc] = static_cast<S>(acc);
        }
    }
    return g;
}

// ---------------------------------------------------------------------------
// Other layer kinds
// ---------------------------------------------------------------------------

enum class LayerKind { Conv2d, Relu, MaxPool2, AvgPool2, Dense, Flatten, AddSkip };

inline const char* layer_kind_name(LayerKind k) {
    switch (k) {
        case LayerKind::Conv2d: return "conv2d";
        case LayerKind::Relu: return "relu";
        case LayerKind::MaxPool2: return "maxpool2";
        case LayerKind::AvgPool2: return "avgpool2";
        case LayerKind::Dense: return "dense";
        case LayerKind::Flatten: return "flatten";
        case LayerKind::AddSkip: return "add-skip";
    }
    return "?";
}

/// Saved forward state consumed by the matching backward.
template <class S>
struct LayerCache {
    LayerKind kind{};
    std::vector<int> in_shape;
    TensorT<S> input;        // conv, relu (mask source), dense
    std::vector<int> argmax; // maxpool2: flat input index per output element
};

/// Non-owning view of a layer's parameters / second input.
template <class S>
struct LayerParamsT {
    const TensorT<S>* weight = nullptr;
    const std::vector<S>* bias = nullptr;
    const TensorT<S>* skip = nullptr; // add-skip second operand
    int stride = 1;
    int pad = 0;
};

template <class S>
struct LayerOut {
    TensorT<S> output;
    LayerCache<S> cache;
};

template <class S>
struct LayerGrads {
    TensorT<S> grad_input;
    TensorT<S> grad_weight;  // conv/dense only
    std::vector<S> grad_bias;
    TensorT<S> grad_skip;    // add-skip only
};

namespace detail {

template <class S>
void check_pool_shape(const TensorT<S>& in, const char* kind) {
    if (in.shape.size() != 3)
        throw std::invalid_argument(std::string(kind) + ": input must be CxHxW");
    if (in.shape[1] % 2 != 0 || in.shape[2] % 2 != 0)
        throw std::invalid_argument(std::string(kind) + ": spatial dims must be even");
}

} // namespace detail

template <class S>
LayerOut<S> layer_forward(LayerKind kind, const LayerParamsT<S>& params, const TensorT<S>& input) {
    LayerOut<S> r;
    r.cache.kind = kind;
    r.cache.in_shape = input.shape;
    switch (kind) {
        case LayerKind::Conv2d: {
            if (!params.weight) throw std::invalid_argument("conv2d: missing weights");
            r.output = conv2d_forward(input, *params.weight,
                                      params.bias ? *params.bias : std::vector<S>{}, params.stride,
                                      params.pad);
            r.cache.input = input;
            break;
        }
        case LayerKind::Relu: {
            r.output = TensorT<S>(input.shape);
            for (std::size_t i = 0; i < input.data.size(); ++i)
                r.output.data[i] = input.data[i] > S(0) ? input.data[i] : S(0);
            r.cache.input = input;
            break;
        }
        case LayerKind::MaxPool2: {
            detail::check_pool_shape(input, "maxpool2");
            const int C = input.shape[0], H = input.shape[1], W = input.shape[2];
            r.output = TensorT<S>({C, H / 2, W / 2});
            r.cache.argmax.resize(r.output.data.size());
            std::size_t o = 0;
            for (int c = 0; c < C; ++c)
                for (int y = 0; y < H; y += 2)
                    for (int x = 0; x < W; x += 2, ++o) {
                        // ties break to the first window position in row-major order
                        int best = (c * H + y) * W + x;
                        S bv = input.data[best];
                        const int cand[3] = {(c * H + y) * W + x + 1, (c * H + y + 1) * W + x,
                                             (c * H + y + 1) * W + x + 1};
                        for (int idx : cand)
                            if (input.data[idx] > bv) {
                                bv = input.data[idx];
                                best = idx;
                            }
                        r.output.data[o] = bv;
                        r.cache.argmax[o] = best;
                    }
            break;
        }
        case LayerKind::AvgPool2: {
            detail::check_pool_shape(input, "avgpool2");
            const int C = input.shape[0], H = input.shape[1], W = input.shape[2];
            r.output = TensorT<S>({C, H / 2, W / 2});
            std::size_t o = 0;
            for (int c = 0; c < C; ++c)
                for (int y = 0; y < H; y += 2)
                    for (int x = 0; x < W; x += 2, ++o) {
                        const S* base = input.data.data() + (static_cast<std::size_t>(c) * H + y) * W + x;
                        r.output.data[o] = (base[0] + base[1] + base[W] + base[W + 1]) * S(0.25);
                    }
            break;
        }
        case LayerKind::Dense: {
            if (!params.weight || params.weight->shape.size() != 2)
                throw std::invalid_argument("dense: missing or non-2D weights");
            const int out_n = params.weight->shape[0], in_n = params.weight->shape[1];
            if (static_cast<std::int64_t>(in_n) != input.numel())
                throw std::invalid_argument("dense: flattened input length != weight columns");
            if (params.bias && !params.bias->empty() &&
                static_cast<int>(params.bias->size()) != out_n)
                throw std::invalid_argument("dense: bias length mismatch");
            r.output = TensorT<S>({out_n});
            for (int i = 0; i < out_n; ++i)
                r.output.data[i] = (params.bias && !params.bias->empty()) ? (*params.bias)[i] : S(0);
            gemm_acc<S>(out_n, 1, in_n, params.weight->data.data(), input.data.data(),
                        r.output.data.data());
            r.cache.input = input;
            break;
        }
        case LayerKind::Flatten: {
            r.output = TensorT<S>({static_cast<int>(input.numel())}, input.data);
            break;
        }
        case LayerKind::AddSkip: {
            if (!params.skip) throw std::invalid_argument("add-skip: missing second operand");
            r.output = add(input, *params.skip);
            break;
        }
    }
    return r;
}

template <class S>
LayerGrads<S> layer_backward(LayerKind kind, const LayerParamsT<S>& params,
                             const LayerCache<S>& cache, const TensorT<S>& grad_output,
                             bool want_param_grads = true) {
    if (cache.kind != kind) throw std::invalid_argument("layer_backward: cache/kind mismatch");
    LayerGrads<S> g;
    switch (kind) {
        case LayerKind::Conv2d: {
            if (!params.weight) throw std::invalid_argument("conv2d backward: missing weights");
            auto cg = conv2d_backward(cache.input, *params.weight, grad_output, params.stride,
                                      params.pad, want_param_grads);
            g.grad_input = std::move(cg.grad_input);
            g.grad_weight = std::move(cg.grad_weights);
            g.grad_bias = std::move(cg.grad_bias);
            break;
        }
        case LayerKind::Relu: {
            if (grad_output.shape != cache.in_shape)
                throw std::invalid_argument("relu backward: grad shape mismatch");
            g.grad_input = TensorT<S>(cache.in_shape);
            for (std::size_t i = 0; i < grad_output.data.size(); ++i)
                g.grad_input.data[i] = cache.input.data[i] > S(0) ? grad_output.data[i] : S(0);
            break;
        }
        case LayerKind::MaxPool2: {
            g.grad_input = TensorT<S>(cache.in_shape);
            if (grad_output.data.size() != cache.argmax.size())
                throw std::invalid_argument("maxpool2 backward: grad shape mismatch");
            for (std::size_t o = 0; o < cache.argmax.size(); ++o)
                g.grad_input.data[cache.argmax[o]] += grad_output.data[o];
            break;
        }
        case LayerKind::AvgPool2: {
            const int C = cache.in_shape[0], H = cache.in_shape[1], W = cache.in_shape[2];
            if (grad_output.shape != std::vector<int>{C, H / 2, W / 2})
                throw std::invalid_argument("avgpool2 backward: grad shape mismatch");
            g.grad_input = TensorT<S>(cache.in_shape);
            std::size_t o = 0;
            for (int c = 0; c < C; ++c)
                for (int y = 0; y < H; y += 2)
                    for (int x = 0; x < W; x += 2, ++o) {
                        const S v = grad_output.data[o] * S(0.25);
                        S* base = g.grad_input.data.data() + (static_cast<std::size_t>(c) * H + y) * W + x;
                        base[0] += v;
                        base[1] += v;
                        base[W] += v;
                        base[W + 1] += v;
                    }
            break;
        }
        case LayerKind::Dense: {
            const int out_n = params.weight->shape[0], in_n = params.weight->shape[1];
            if (grad_output.numel() != out_n)
                throw std::invalid_argument("dense backward: grad shape mismatch");
            g.grad_input = TensorT<S>(cache.in_shape);
            gemm_atb_acc<S>(in_n, 1, out_n, params.weight->data.data(), grad_output.data.data(),
                            g.grad_input.data.data());
            if (want_param_grads) {
                g.grad_weight = TensorT<S>(params.weight->shape);
                gemm_acc<S>(out_n, in_n, 1, grad_output.data.data(), cache.input.data.data(),
                            g.grad_weight.data.data());
                g.grad_bias.assign(grad_output.data.begin(), grad_output.data.end());
            }
            break;
        }
        case LayerKind::Flatten: {
            if (grad_output.numel() != TensorT<S>::checked_numel(cache.in_shape))
                throw std::invalid_argument("flatten backward: grad shape mismatch");
            g.grad_input = TensorT<S>(cache.in_shape, grad_output.data);
            break;
        }
        case LayerKind::AddSkip: {
            // adjoint of elementwise sum: identical gradient to both operands
            g.grad_input = grad_output;
            g.grad_skip = grad_output;
            break;
        }
    }
    return g;
}

// ---------------------------------------------------------------------------
// Loss primitives
// ---------------------------------------------------------------------------

template <class S>
struct CrossEntropyOut {
    S loss;
    std::vector<S> grad_logits;
};

/// -log softmax(logits)[target], stabilized by max subtraction.
/// grad = softmax(logits) - onehot(target).
template <class S>
CrossEntropyOut<S> softmax_cross_entropy(std::span<const S> logits, int target) {
    const int K = static_cast<int>(logits.size());
    if (K < 2) throw std::invalid_argument("softmax_cross_entropy: need at least 2 classes");
    if (target < 0 || target >= K)
        throw std::invalid_argument("softmax_cross_entropy: target out of range");
    S mx = logits[0];
    for (S v : logits) mx = std::max(mx, v);
    double denom = 0.0;
    for (S v : logits) denom += std::exp(static_cast<double>(v - mx));
    CrossEntropyOut<S> out;
    out.grad_logits.resize(K);
    for (int i = 0; i < K; ++i) {
        const double p = std::exp(static_cast<double>(logits[i] - mx)) / denom;
        out.grad_logits[i] = static_cast<S>(p - (i == target ? 1.0 : 0.0));
    }
    out.loss = static_cast<S>(std::log(denom) - static_cast<double>(logits[target] - mx));
    return out;
}

template <class S>
struct CosineSimilarityOut {
    S score;
    std::vector<S> grad_a;
    std::vector<S> grad_b;
    bool degenerate = false; // a zero-norm input was seen
};

/// score = <a,b> / (|a||b|); gradients are the exact partials.
/// A zero-norm input yields score 0 with zero gradients and the degenerate
/// flag set instead of an error, so a dead feature map cannot abort an attack.
template <class S>
CosineSimilarityOut<S> cosine_similarity(std::span<const S> a, std::span<const S> b) {
    if (a.size() != b.size()) throw std::invalid_argument("cosine_similarity: length mismatch");
    CosineSimilarityOut<S> out;
    out.grad_a.assign(a.size(), S(0));
    out.grad_b.assign(b.size(), S(0));
    double aa = 0.0, bb = 0.0, ab = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double x = a[i], y = b[i];
        aa += x * x;
        bb += y * y;
        ab += x * y;
    }
    const double na = std::sqrt(aa), nb = std::sqrt(bb);
    if (na == 0.0 || nb == 0.0) {
        out.score = S(0);
        out.degenerate = true;
        return out;
    }
    double score = ab / (na * nb);
    score = std::clamp(score, -1.0, 1.0);
    out.score = static_cast<S>(score);
    const double inv = 1.0 / (na * nb);
    for (std::size_t i = 0; i < a.size(); ++i) {
        out.grad_a[i] = static_cast<S>(static_cast<double>(b[i]) * inv -
                                       score * static_cast<double>(a[i]) / aa);
        out.grad_b[i] = static_cast<S>(static_cast<double>(a[i]) * inv -
                                       score * static_cast<double>(b[i]) / bb);
    }
    return out;
}

} // namespace advlab
