#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "advlab/rng.hpp"
#include "advlab/tensor.hpp"

namespace advlab {

// ---------------------------------------------------------------------------
// Translation-invariance kernel (gradient smoothing)
// ---------------------------------------------------------------------------

/// Normalized 2D smoothing kernel of odd side 2r+1.
template <class S>
struct TiKernelT {
    int radius = 0;
    std::vector<S> values; // (2r+1)^2, row-major

    int side() const { return 2 * radius + 1; }
    bool is_identity() const { return radius == 0; }
};

using TiKernel = TiKernelT<float>;

/// Discretized Gaussian exp(-(i^2+j^2)/(2 sigma^2)) on [-r, r]^2, normalized
/// to sum 1. r = 0 yields the identity kernel [[1]].
template <class S>
TiKernelT<S> make_ti_kernel(int radius, double sigma) {
    if (radius < 0) throw std::invalid_argument("make_ti_kernel: negative radius");
    if (sigma <= 0.0) throw std::invalid_argument("make_ti_kernel: sigma must be positive");
    TiKernelT<S> k;
    k.radius = radius;
    const int side = k.side();
    std::vector<double> tmp(static_cast<std::size_t>(side) * side);
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i)
        for (int j = -radius; j <= radius; ++j) {
            const double v = std::exp(-(i * i + j * j) / (2.0 * sigma * sigma));
            tmp[(i + radius) * side + (j + radius)] = v;
            sum += v;
        }
    k.values.resize(tmp.size());
    for (std::size_t i = 0; i < tmp.size(); ++i) k.values[i] = static_cast<S>(tmp[i] / sum);
    return k;
}

/// Depthwise cross-correlation with zero padding; output shape equals input.
template <class S>
TensorT<S> ti_smooth(const TensorT<S>& grad, const TiKernelT<S>& kernel) {
    if (grad.shape.size() != 3) throw std::invalid_argument("ti_smooth: input must be CxHxW");
    if (kernel.is_identity()) return grad;
    const int C = grad.shape[0], H = grad.shape[1], W = grad.shape[2];
    const int r = kernel.radius, side = kernel.side();
    if (side > H || side > W)
        throw std::invalid_argument("ti_smooth: kernel larger than image");
    TensorT<S> out(grad.shape);
    for (int c = 0; c < C; ++c)
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x) {
                S acc = S(0);
                for (int u = -r; u <= r; ++u) {
                    const int iy = y + u;
                    if (iy < 0 || iy >= H) continue;
                    for (int v = -r; v <= r; ++v) {
                        const int ix = x + v;
                        if (ix < 0 || ix >= W) continue;
                        acc += kernel.values[(u + r) * side + (v + r)] * grad.at(c, iy, ix);
                    }
                }
                out.at(c, y, x) = acc;
            }
    return out;
}

// ---------------------------------------------------------------------------
// Bilinear resize and its exact adjoint
// ---------------------------------------------------------------------------

/// Half-pixel-center convention: source coordinate (i+0.5)*in/out - 0.5,
/// clamped to the valid range. out dims == in dims is a bit-exact identity.
template <class S>
TensorT<S> bilinear_resize(const TensorT<S>& img, int out_h, int out_w) {
    if (img.shape.size() != 3) throw std::invalid_argument("bilinear_resize: input must be CxHxW");
    if (out_h <= 0 || out_w <= 0)
        throw std::invalid_argument("bilinear_resize: non-positive target dims");
    const int C = img.shape[0], H = img.shape[1], W = img.shape[2];
    if (out_h == H && out_w == W) return img;
    TensorT<S> out({C, out_h, out_w});
    for (int oy = 0; oy < out_h; ++oy) {
        double sy = (oy + 0.5) * static_cast<double>(H) / out_h - 0.5;
        sy = std::min(std::max(sy, 0.0), static_cast<double>(H - 1));
        const int y0 = static_cast<int>(sy);
        const int y1 = std::min(y0 + 1, H - 1);
        const double fy = sy - y0;
        for (int ox = 0; ox < out_w; ++ox) {
            double sx = (ox + 0.5) * static_cast<double>(W) / out_w - 0.5;
            sx = std::min(std::max(sx, 0.0), static_cast<double>(W - 1));
            const int x0 = static_cast<int>(sx);
            const int x1 = std::min(x0 + 1, W - 1);
            const double fx = sx - x0;
            const S w00 = static_cast<S>((1 - fy) * (1 - fx));
            const S w01 = static_cast<S>((1 - fy) * fx);
            const S w10 = static_cast<S>(fy * (1 - fx));
            const S w11 = static_cast<S>(fy * fx);
            for (int c = 0; c < C; ++c)
                out.at(c, oy, ox) = w00 * img.at(c, y0, x0) + w01 * img.at(c, y0, x1) +
                                    w10 * img.at(c, y1, x0) + w11 * img.at(c, y1, x1);
        }
    }
    return out;
}

/// Exact transpose of bilinear_resize: scatter with the same weights.
template <class S>
TensorT<S> bilinear_resize_adjoint(const TensorT<S>& grad, int in_h, int in_w) {
    if (grad.shape.size() != 3)
        throw std::invalid_argument("bilinear_resize_adjoint: input must be CxHxW");
    const int C = grad.shape[0], out_h = grad.shape[1], out_w = grad.shape[2];
    if (out_h == in_h && out_w == in_w) return grad;
    TensorT<S> out({C, in_h, in_w});
    for (int oy = 0; oy < out_h; ++oy) {
        double sy = (oy + 0.5) * static_cast<double>(in_h) / out_h - 0.5;
        sy = std::min(std::max(sy, 0.0), static_cast<double>(in_h - 1));
        const int y0 = static_cast<int>(sy);
        const int y1 = std::min(y0 + 1, in_h - 1);
        const double fy = sy - y0;
        for (int ox = 0; ox < out_w; ++ox) {
            double sx = (ox + 0.5) * static_cast<double>(in_w) / out_w - 0.5;
            sx = std::min(std::max(sx, 0.0), static_cast<double>(in_w - 1));
            const int x0 = static_cast<int>(sx);
            const int x1 = std::min(x0 + 1, in_w - 1);
            const double fx = sx - x0;
            const S w00 = static_cast<S>((1 - fy) * (1 - fx));
            const S w01 = static_cast<S>((1 - fy) * fx);
            const S w10 = static_cast<S>(fy * (1 - fx));
            const S w11 = static_cast<S>(fy * fx);
            for (int c = 0; c < C; ++c) {
                const S g = grad.at(c, oy, ox);
                out.at(c, y0, x0) += w00 * g;
                out.at(c, y0, x1) += w01 * g;
                out.at(c, y1, x0) += w10 * g;
                out.at(c, y1, x1) += w11 * g;
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Diverse-input transform: random resize and zero-pad, with exact adjoint
// ---------------------------------------------------------------------------

/// Record of one diverse-input draw; enough to replay the linear map exactly.
struct DiTrace {
    bool applied = false;
    int resize_to = 0; // target side r (square), r < H
    int top = 0;
    int left = 0;
};

inline constexpr double kDiMinScale = 0.7; // resize target drawn from [ceil(0.7 H), H-1]

/// Replay a recorded DI map: shrink to r x r, embed at the recorded offsets
/// inside a zero canvas of the input size. Identity when not applied.
template <class S>
TensorT<S> di_apply(const TensorT<S>& img, const DiTrace& trace) {
    if (img.shape.size() != 3) throw std::invalid_argument("di_apply: input must be CxHxW");
    if (!trace.applied) return img;
    const int C = img.shape[0], H = img.shape[1], W = img.shape[2];
    const int r = trace.resize_to;
    if (r < 1 || r > H || trace.top + r > H || trace.left + r > W)
        throw std::invalid_argument("di_apply: trace does not fit the image shape");
    TensorT<S> small = bilinear_resize(img, r, r);
    TensorT<S> out({C, H, W});
    for (int c = 0; c < C; ++c)
        for (int y = 0; y < r; ++y)
            for (int x = 0; x < r; ++x)
                out.at(c, trace.top + y, trace.left + x) = small.at(c, y, x);
    return out;
}

/// With one Bernoulli(p) draw: bilinearly shrink to r x r, r uniform in
/// [ceil(0.7 H), H-1], and embed at a uniform offset inside an H x W zero
/// canvas; otherwise identity. Draw order: apply?, r, top, left.
template <class S>
std::pair<TensorT<S>, DiTrace> di_transform(const TensorT<S>& img, double p, RngStream& rng) {
    if (img.shape.size() != 3) throw std::invalid_argument("di_transform: input must be CxHxW");
    if (p < 0.0 || p > 1.0) throw std::invalid_argument("di_transform: p outside [0,1]");
    const int H = img.shape[1], W = img.shape[2];
    DiTrace trace;
    if (p > 0.0 && rng.bernoulli(p)) {
        const int lo = static_cast<int>(std::ceil(kDiMinScale * H));
        const int hi = H - 1;
        if (lo <= hi && hi >= 1) {
            trace.applied = true;
            trace.resize_to = rng.uniform_int(lo, hi);
            trace.top = rng.uniform_int(0, H - trace.resize_to);
            trace.left = rng.uniform_int(0, W - trace.resize_to);
        }
    }
    return {di_apply(img, trace), trace};
}

/// Exact adjoint of the recorded map: crop the padded window, then apply the
/// bilinear-resize adjoint back to the original size.
template <class S>
TensorT<S> di_adjoint(const TensorT<S>& grad_out, const DiTrace& trace) {
    if (grad_out.shape.size() != 3) throw std::invalid_argument("di_adjoint: input must be CxHxW");
    if (!trace.applied) return grad_out;
    const int C = grad_out.shape[0], H = grad_out.shape[1], W = grad_out.shape[2];
    const int r = trace.resize_to;
    if (r < 1 || r > H || trace.top + r > H || trace.left + r > W)
        throw std::invalid_argument("di_adjoint: trace does not fit the gradient shape");
    TensorT<S> window({C, r, r});
    for (int c = 0; c < C; ++c)
        for (int y = 0; y < r; ++y)
            for (int x = 0; x < r; ++x)
                window.at(c, y, x) = grad_out.at(c, trace.top + y, trace.left + x);
    return bilinear_resize_adjoint(window, H, W);
}

// ---------------------------------------------------------------------------
// Locality crop: random square crop resized back to full size
// ---------------------------------------------------------------------------

struct LocTrace {
    int top = 0;
    int left = 0;
    int side = 0;
    double area = 0.0; // drawn area fraction
};

/// Replay a recorded crop: take the square window, resize back to H x W.
template <class S>
TensorT<S> loc_apply(const TensorT<S>& img, const LocTrace& trace) {
    if (img.shape.size() != 3) throw std::invalid_argument("loc_apply: input must be CxHxW");
    const int C = img.shape[0], H = img.shape[1], W = img.shape[2];
    const int side = trace.side;
    if (side < 1 || trace.top + side > H || trace.left + side > W)
        throw std::invalid_argument("loc_apply: trace does not fit the image shape");
    if (side == H && side == W) return img; // whole-image crop, resize is identity
    TensorT<S> patch({C, side, side});
    for (int c = 0; c < C; ++c)
        for (int y = 0; y < side; ++y)
            for (int x = 0; x < side; ++x)
                patch.at(c, y, x) = img.at(c, trace.top + y, trace.left + x);
    return bilinear_resize(patch, H, W);
}

/// Draw area fraction a uniform in [s_l, s_l + s_int], crop a square of side
/// round(sqrt(a*H*W)) (clamped to [1, min(H,W)]) at a uniform position, and
/// bilinearly resize the crop back to H x W. Aspect ratio is fixed at 1.
/// Draw order: a, top, left.
template <class S>
std::pair<TensorT<S>, LocTrace> loc_crop(const TensorT<S>& img, double s_lower, double s_interval,
                                         RngStream& rng) {
    if (img.shape.size() != 3) throw std::invalid_argument("loc_crop: input must be CxHxW");
    if (s_lower <= 0.0 || s_lower > 1.0 || s_interval < 0.0 || s_lower + s_interval > 1.0)
        throw std::invalid_argument("loc_crop: scale parameters outside range");
    const int H = img.shape[1], W = img.shape[2];
    LocTrace trace;
    trace.area = s_lower + s_interval * rng.uniform();
    int side = static_cast<int>(std::llround(std::sqrt(trace.area * H * W)));
    side = std::min(std::max(side, 1), std::min(H, W));
    trace.side = side;
    trace.top = rng.uniform_int(0, H - side);
    trace.left = rng.uniform_int(0, W - side);
    return {loc_apply(img, trace), trace};
}

} // namespace advlab
