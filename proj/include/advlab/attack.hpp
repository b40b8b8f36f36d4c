#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "advlab/model.hpp"
#include "advlab/tensor.hpp"
#include "advlab/transforms.hpp"

namespace advlab {

enum class LossKind { CrossEntropy, Logit };

std::string loss_kind_name(LossKind k);
LossKind parse_loss_kind(const std::string& name);

// Budgets are stored in [0,1] pixel scale: a byte-scale budget of 16 maps to
// 16/255 here.
struct AttackConfig {
    float epsilon = 16.0f / 255.0f; // L-inf budget
    float alpha = 2.0f / 255.0f;    // step size
    int iterations = 300;
    float mu = 1.0f;          // momentum decay; 0 disables accumulation
    float di_p = 0.7f;        // random resize-pad probability; 0 disables
    int ti_radius = 2;        // 0 means identity kernel
    double ti_sigma = 3.0;
    float s_lower = 0.1f;     // crop area fraction lower bound
    float s_interval = 0.0f;  // crop area fraction interval width
    float lambda = 0.4f;      // feature-similarity weight
    int tap = 3;              // feature tap layer, 1..4
    LossKind loss = LossKind::CrossEntropy;
    bool enable_local = true; // false drops the local branch and the CS term
    bool track_success = false; // per-iteration clean-forward success probe
    std::uint64_t seed = 0;
};

void validate(const AttackConfig& cfg);

// Named presets covering the compared methods. The *-li presets enable the
// local branch with lambda=0.4, s=(0.1,0), tap 3.
AttackConfig attack_preset(const std::string& name);
std::vector<std::string> attack_preset_names();

struct ClassLoss {
    double value = 0.0;
    std::vector<float> grad_logits;
};

// CrossEntropy: softmax cross-entropy toward y_t. Logit: -logits[y_t].
// Both are minimized by the attack loop.
ClassLoss classification_loss(const std::vector<float>& logits, int y_t, LossKind kind);

// Frozen randomness for one li_gradient evaluation: independent resize-pad
// draws per branch plus the crop rectangle.
struct LiTraces {
    DiTrace di_global;
    DiTrace di_local;
    LocTrace loc;
    bool local_active = false;
};

LiTraces draw_li_traces(const TensorF& x, const AttackConfig& cfg, int image_index,
                        int iteration);

struct LiEval {
    double composite = 0.0; // loss_global + loss_local - lambda * cs
    double loss_global = 0.0;
    double loss_local = 0.0;
    double cs = 0.0;
    bool degenerate_cs = false;
};

struct LiGradient {
    TensorF grad; // d(composite)/d(delta)
    LiEval eval;
};

// Composite objective under fixed traces:
//   L = J(f(T(x+d)), y_t) + J(f(T(Loc(x)+d)), y_t) - lambda*CS(f_l(.), f_l(.))
// with the local terms dropped when the local branch is disabled.
LiEval li_value_traced(const Model& m, const TensorF& x, const TensorF& delta, int y_t,
                       const AttackConfig& cfg, const LiTraces& traces);

// Gradient of the composite wrt delta under fixed traces: each branch runs one
// backward pass combining the classification upstream with the CS gradient
// injected at the tap, then maps through its resize-pad adjoint; branches sum.
LiGradient li_gradient_traced(const Model& m, const TensorF& x, const TensorF& delta, int y_t,
                              const AttackConfig& cfg, const LiTraces& traces);

// Draws fresh traces from streams keyed by (cfg.seed, image_index, iteration,
// branch tag) and evaluates the gradient.
LiGradient li_gradient(const Model& m, const TensorF& x, const TensorF& delta, int y_t,
                       const AttackConfig& cfg, int image_index, int iteration);

// g <- mu*g + smooth/l1(smooth), smooth = ti_smooth(raw, kernel); the
// normalized term is 0 when l1(smooth) = 0.
TensorF mi_update(const TensorF& g_prev, const TensorF& raw_grad, float mu,
                  const TiKernelT<float>& kernel);

// d' = clamp(d - alpha*sign(g), -eps, eps), then clamped into the pixel box
// so x+d' lies in [0,1] exactly, in both float and real arithmetic.
TensorF step_and_clip(const TensorF& delta, const TensorF& g, float alpha, float epsilon,
                      const TensorF& x);

struct IterStats {
    double loss_global = 0.0;
    double loss_local = 0.0;
    double cs = 0.0;
};

struct AttackHooks {
    std::function<void(int iteration, const TensorF& delta)> after_iter;
};

struct AdvResult {
    TensorF delta;
    TensorF x_adv;
    bool success = false;       // final argmax equals y_t on every attacked model
    int iterations_used = 0;
    int first_success_iter = -1; // -1 when untracked or never reached
    bool degenerate_cs = false;  // any iteration hit a zero-norm feature
    std::vector<IterStats> telemetry;  // one entry per iteration
    std::vector<TensorF> snapshots;    // x_adv at each requested checkpoint
};

// Iterations count 1..I; a checkpoint k stores x_adv right after iteration k.
AdvResult attack(const Model& m, const TensorF& x, int y_t, const AttackConfig& cfg,
                 int image_index, const std::vector<int>& checkpoints = {},
                 const AttackHooks* hooks = nullptr);

// Equal-weight ensemble: the per-iteration gradient is the unweighted mean of
// per-model composite gradients; all models see the same transform draws.
AdvResult ensemble_attack(const std::vector<const Model*>& models, const TensorF& x, int y_t,
                          const AttackConfig& cfg, int image_index,
                          const std::vector<int>& checkpoints = {},
                          const AttackHooks* hooks = nullptr);

} // namespace advlab
