#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "advlab/layers.hpp"
#include "advlab/rng.hpp"
#include "advlab/tensor.hpp"

namespace advlab {

inline constexpr int kSkipFromInput = -1;
inline constexpr int kNoSkip = -2;

struct LayerSpec {
    LayerKind kind{};
    int out_channels = 0; // conv
    int kernel = 0;       // conv
    int stride = 1;       // conv
    int pad = 0;          // conv
    int out_features = 0; // dense
    int skip_from = kNoSkip; // add-skip source layer index, kSkipFromInput for the model input
};

/// Architecture description: ordered layer list plus the four feature-tap
/// positions (bottom to top), one per stage.
struct ModelSpec {
    std::string architecture;
    std::vector<int> input_shape; // C, H, W
    int num_classes = 0;
    std::vector<LayerSpec> layers;
    std::array<int, 4> taps{};
};

/// Per-layer output shapes; throws invalid_argument on any incompatibility.
std::vector<std::vector<int>> infer_shapes(const ModelSpec& spec);

/// The three desk-scale architectures. ConvNetA: four wide conv-relu-maxpool
/// stages. ConvNetB: six thinner convs mixing 3x3 and 5x5 kernels with
/// average pooling. MiniResNet: four residual blocks joined by skip adds.
ModelSpec make_model_spec(const std::string& architecture, int num_classes,
                          const std::vector<int>& input_shape);

template <class S>
struct ModelT {
    ModelSpec spec;
    std::vector<TensorT<S>> weights;      // empty tensor for parameterless layers
    std::vector<std::vector<S>> biases;   // empty for parameterless layers
};

using Model = ModelT<float>;

namespace detail {

inline void check_tap(int tap) {
    if (tap < 1 || tap > 4) throw std::invalid_argument("tap must be in 1..4");
}

template <class S>
LayerParamsT<S> layer_params(const ModelT<S>& m, int i, const TensorT<S>* skip) {
    LayerParamsT<S> p;
    const LayerSpec& ls = m.spec.layers[i];
    if (ls.kind == LayerKind::Conv2d || ls.kind == LayerKind::Dense) {
        p.weight = &m.weights[i];
        p.bias = &m.biases[i];
    }
    p.stride = ls.stride;
    p.pad = ls.pad;
    p.skip = skip;
    return p;
}

} // namespace detail

/// Deterministic fan-in-scaled uniform init; identical (name, seed) pairs
/// produce bit-identical weights.
template <class S>
ModelT<S> init_model_t(const ModelSpec& spec, std::uint64_t seed) {
    ModelT<S> m;
    m.spec = spec;
    auto shapes = infer_shapes(m.spec);
    m.weights.resize(m.spec.layers.size());
    m.biases.resize(m.spec.layers.size());
    for (std::size_t i = 0; i < m.spec.layers.size(); ++i) {
        const LayerSpec& ls = m.spec.layers[i];
        if (ls.kind == LayerKind::Conv2d) {
            const std::vector<int>& in = (i == 0) ? m.spec.input_shape : shapes[i - 1];
            m.weights[i] = TensorT<S>({ls.out_channels, in[0], ls.kernel, ls.kernel});
            m.biases[i].resize(ls.out_channels);
        } else if (ls.kind == LayerKind::Dense) {
            const std::vector<int>& in = (i == 0) ? m.spec.input_shape : shapes[i - 1];
            const int in_n = static_cast<int>(TensorT<S>::checked_numel(in));
            m.weights[i] = TensorT<S>({ls.out_features, in_n});
            m.biases[i].resize(ls.out_features);
        } else {
            continue;
        }
        const int fan_in = static_cast<int>(m.weights[i].numel()) / m.weights[i].shape[0];
        const double bound_w = std::sqrt(3.0 / fan_in);
        const double bound_b = 1.0 / std::sqrt(static_cast<double>(fan_in));
        RngStream wrng = RngStream::keyed(seed, i, 0, "weight");
        for (auto& v : m.weights[i].data) v = static_cast<S>(wrng.uniform(-bound_w, bound_w));
        RngStream brng = RngStream::keyed(seed, i, 0, "bias");
        for (auto& v : m.biases[i]) v = static_cast<S>(brng.uniform(-bound_b, bound_b));
    }
    return m;
}

template <class S>
ModelT<S> build_model_t(const std::string& architecture, int num_classes,
                        const std::vector<int>& input_shape, std::uint64_t seed) {
    return init_model_t<S>(make_model_spec(architecture, num_classes, input_shape), seed);
}

inline Model build_model(const std::string& architecture, int num_classes,
                         const std::vector<int>& input_shape, std::uint64_t seed) {
    return build_model_t<float>(architecture, num_classes, input_shape, seed);
}

inline Model init_model(const ModelSpec& spec, std::uint64_t seed) {
    return init_model_t<float>(spec, seed);
}

template <class S, class T>
ModelT<T> model_cast(const ModelT<S>& m) {
    ModelT<T> out;
    out.spec = m.spec;
    out.weights.reserve(m.weights.size());
    for (const auto& w : m.weights)
        out.weights.push_back(w.data.empty() ? TensorT<T>() : tensor_cast<S, T>(w));
    out.biases.resize(m.biases.size());
    for (std::size_t i = 0; i < m.biases.size(); ++i)
        out.biases[i].assign(m.biases[i].begin(), m.biases[i].end());
    return out;
}

template <class S>
struct ForwardTrace {
    std::vector<TensorT<S>> activations; // output of each layer
    std::vector<LayerCache<S>> caches;
};

/// Full forward pass; logits are the last layer's output. When trace is
/// given, all activations and caches are kept for a later backward.
template <class S>
std::vector<S> forward(const ModelT<S>& m, const TensorT<S>& x, ForwardTrace<S>* trace = nullptr) {
    if (x.shape != m.spec.input_shape)
        throw std::invalid_argument("forward: input shape does not match model");
    const std::size_t n = m.spec.layers.size();
    ForwardTrace<S> local;
    ForwardTrace<S>& tr = trace ? *trace : local;
    tr.activations.clear();
    tr.caches.clear();
    tr.activations.resize(n);
    tr.caches.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const LayerSpec& ls = m.spec.layers[i];
        const TensorT<S>& in = (i == 0) ? x : tr.activations[i - 1];
        const TensorT<S>* skip = nullptr;
        if (ls.kind == LayerKind::AddSkip)
            skip = (ls.skip_from == kSkipFromInput) ? &x : &tr.activations[ls.skip_from];
        auto out = layer_forward(ls.kind, detail::layer_params(m, static_cast<int>(i), skip), in);
        tr.activations[i] = std::move(out.output);
        tr.caches[i] = std::move(out.cache);
    }
    return tr.activations[n - 1].data;
}

template <class S>
struct TapOutput {
    std::vector<S> logits;
    TensorT<S> feature; // activation right after the tap layer
};

/// Forward pass that also extracts the feature at tap layer `tap` (1..4).
template <class S>
TapOutput<S> forward_with_taps(const ModelT<S>& m, const TensorT<S>& x, int tap) {
    detail::check_tap(tap);
    ForwardTrace<S> tr;
    TapOutput<S> out;
    out.logits = forward(m, x, &tr);
    out.feature = tr.activations[m.spec.taps[tap - 1]];
    return out;
}

/// Upstream gradients fed into the backward sweep: always a logits gradient,
/// optionally a feature gradient injected at a tap layer.
template <class S>
struct Upstream {
    std::vector<S> grad_logits;
    int tap = 0;                             // 0 = no feature injection
    const TensorT<S>* grad_feature = nullptr;
};

template <class S>
struct ParamGrads {
    std::vector<TensorT<S>> weights;
    std::vector<std::vector<S>> biases;
};

/// Single reverse sweep from a completed forward trace. Contributions are
/// summed where paths merge (skip connections, feature injection). Either
/// output pointer may be null to skip that part of the work.
template <class S>
void backward(const ModelT<S>& m, const TensorT<S>& x, const ForwardTrace<S>& tr,
              const Upstream<S>& up, TensorT<S>* grad_input, ParamGrads<S>* param_grads) {
    const std::size_t n = m.spec.layers.size();
    if (static_cast<std::int64_t>(up.grad_logits.size()) != tr.activations[n - 1].numel())
        throw std::invalid_argument("backward: grad_logits length mismatch");
    std::vector<TensorT<S>> grad_at(n); // gradient wrt each layer's output
    grad_at[n - 1] = TensorT<S>(tr.activations[n - 1].shape, up.grad_logits);
    if (up.tap != 0) {
        detail::check_tap(up.tap);
        if (!up.grad_feature) throw std::invalid_argument("backward: tap set without grad_feature");
        const int ti = m.spec.taps[up.tap - 1];
        if (up.grad_feature->shape != tr.activations[ti].shape)
            throw std::invalid_argument("backward: grad_feature shape mismatch");
        if (grad_at[ti].data.empty())
            grad_at[ti] = *up.grad_feature;
        else
            add_into(grad_at[ti], *up.grad_feature);
    }
    const bool want_params = param_grads != nullptr;
    if (want_params) {
        param_grads->weights.assign(n, TensorT<S>());
        param_grads->biases.assign(n, {});
    }
    TensorT<S> grad_x(x.shape);
    for (std::size_t ii = n; ii-- > 0;) {
        if (grad_at[ii].data.empty()) continue; // no path reaches this output
        const LayerSpec& ls = m.spec.layers[ii];
        const TensorT<S>* skip = nullptr;
        if (ls.kind == LayerKind::AddSkip)
            skip = (ls.skip_from == kSkipFromInput) ? &x : &tr.activations[ls.skip_from];
        auto lg = layer_backward(ls.kind, detail::layer_params(m, static_cast<int>(ii), skip),
                                 tr.caches[ii], grad_at[ii], want_params);
        if (want_params && lg.grad_weight.numel() > 0) {
            param_grads->weights[ii] = std::move(lg.grad_weight);
            param_grads->biases[ii] = std::move(lg.grad_bias);
        }
        auto accumulate = [&](int dst, TensorT<S>&& g) {
            if (dst == kSkipFromInput) {
                add_into(grad_x, g);
            } else if (grad_at[dst].data.empty()) {
                grad_at[dst] = std::move(g);
            } else {
                add_into(grad_at[dst], g);
            }
        };
        if (ls.kind == LayerKind::AddSkip)
            accumulate(ls.skip_from, std::move(lg.grad_skip));
        accumulate(ii == 0 ? kSkipFromInput : static_cast<int>(ii) - 1, std::move(lg.grad_input));
        grad_at[ii] = TensorT<S>(); // free as we go
    }
    if (grad_input) *grad_input = std::move(grad_x);
}

/// Gradient of the upstream-weighted outputs wrt the model input; one
/// forward plus one input-only backward.
template <class S>
TensorT<S> input_gradient(const ModelT<S>& m, const TensorT<S>& x, const Upstream<S>& up) {
    ForwardTrace<S> tr;
    forward(m, x, &tr);
    TensorT<S> g;
    backward(m, x, tr, up, &g, static_cast<ParamGrads<S>*>(nullptr));
    return g;
}

// Checkpoint I/O (32-bit float payload; see docs for the container layout).
std::uint64_t spec_fingerprint(const ModelSpec& spec);
void save_checkpoint(const Model& m, const std::string& path);
Model load_checkpoint(const std::string& path, const ModelSpec& expected_spec);

} // namespace advlab
