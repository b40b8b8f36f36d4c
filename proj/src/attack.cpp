#include "advlab/attack.hpp"

#include <cmath>
#include <span>

#include "advlab/layers.hpp"
#include "advlab/rng.hpp"

namespace advlab {

std::string loss_kind_name(LossKind k) {
    return k == LossKind::CrossEntropy ? "ce" : "logit";
}

LossKind parse_loss_kind(const std::string& name) {
    if (name == "ce") return LossKind::CrossEntropy;
    if (name == "logit") return LossKind::Logit;
    throw std::invalid_argument("unknown loss kind '" + name + "'");
}

void validate(const AttackConfig& cfg) {
    if (cfg.epsilon < 0) throw std::invalid_argument("attack config: epsilon must be >= 0");
    if (cfg.alpha <= 0) throw std::invalid_argument("attack config: alpha must be > 0");
    if (cfg.iterations < 1) throw std::invalid_argument("attack config: iterations must be >= 1");
    if (cfg.mu < 0) throw std::invalid_argument("attack config: mu must be >= 0");
    if (cfg.di_p < 0 || cfg.di_p > 1)
        throw std::invalid_argument("attack config: di_p must lie in [0,1]");
    if (cfg.ti_radius < 0) throw std::invalid_argument("attack config: ti_radius must be >= 0");
    if (cfg.ti_sigma <= 0) throw std::invalid_argument("attack config: ti_sigma must be > 0");
    if (cfg.lambda < 0) throw std::invalid_argument("attack config: lambda must be >= 0");
    if (cfg.tap < 1 || cfg.tap > 4)
        throw std::invalid_argument("attack config: tap must lie in 1..4");
    if (cfg.enable_local &&
        (cfg.s_lower <= 0 || cfg.s_lower > 1 || cfg.s_interval < 0 ||
         cfg.s_lower + cfg.s_interval > 1))
        throw std::invalid_argument("attack config: crop scale outside range");
}

AttackConfig attack_preset(const std::string& name) {
    AttackConfig cfg; // defaults carry epsilon=16/255, alpha=2/255, I=300
    if (name == "ifgsm") {
        cfg.di_p = 0.0f;
        cfg.mu = 0.0f;
        cfg.ti_radius = 0;
        cfg.lambda = 0.0f;
        cfg.enable_local = false;
        cfg.loss = LossKind::CrossEntropy;
    } else if (name == "dtmi-ce" || name == "dtmi-logit") {
        cfg.lambda = 0.0f;
        cfg.enable_local = false;
        cfg.loss = name == "dtmi-ce" ? LossKind::CrossEntropy : LossKind::Logit;
    } else if (name == "dtmi-ce-li" || name == "dtmi-logit-li") {
        cfg.enable_local = true;
        cfg.loss = name == "dtmi-ce-li" ? LossKind::CrossEntropy : LossKind::Logit;
    } else {
        throw std::invalid_argument("unknown attack preset '" + name + "'");
    }
    return cfg;
}

std::vector<std::string> attack_preset_names() {
    return {"ifgsm", "dtmi-ce", "dtmi-logit", "dtmi-ce-li", "dtmi-logit-li"};
}

ClassLoss classification_loss(const std::vector<float>& logits, int y_t, LossKind kind) {
    if (y_t < 0 || y_t >= static_cast<int>(logits.size()))
        throw std::invalid_argument("classification_loss: target class out of range");
    ClassLoss out;
    if (kind == LossKind::CrossEntropy) {
        auto ce = softmax_cross_entropy<float>(std::span<const float>(logits.data(), logits.size()),
                                               y_t);
        out.value = ce.loss;
        out.grad_logits = std::move(ce.grad_logits);
    } else {
        out.value = -static_cast<double>(logits[y_t]);
        out.grad_logits.assign(logits.size(), 0.0f);
        out.grad_logits[y_t] = -1.0f;
    }
    return out;
}

LiTraces draw_li_traces(const TensorF& x, const AttackConfig& cfg, int image_index,
                        int iteration) {
    LiTraces t;
    {
        RngStream rng = RngStream::keyed(cfg.seed, image_index, iteration, "di-global");
        t.di_global = di_transform(x, cfg.di_p, rng).second;
    }
    if (cfg.enable_local) {
        t.local_active = true;
        {
            RngStream rng = RngStream::keyed(cfg.seed, image_index, iteration, "di-local");
            t.di_local = di_transform(x, cfg.di_p, rng).second;
        }
        {
            RngStream rng = RngStream::keyed(cfg.seed, image_index, iteration, "loc");
            t.loc = loc_crop(x, cfg.s_lower, cfg.s_interval, rng).second;
        }
    }
    return t;
}

namespace {

struct BranchForward {
    TensorF input;            // branch image after resize-pad
    ForwardTrace<float> trace;
    std::vector<float> logits;
};

BranchForward branch_forward(const Model& m, const TensorF& base, const TensorF& delta,
                             const DiTrace& di) {
    BranchForward b;
    b.input = add(base, delta);
    b.input = di_apply(b.input, di);
    b.logits = forward(m, b.input, &b.trace);
    return b;
}

const TensorF& tap_activation(const Model& m, const ForwardTrace<float>& tr, int tap) {
    return tr.activations[m.spec.taps[tap - 1]];
}

} // namespace

LiEval li_value_traced(const Model& m, const TensorF& x, const TensorF& delta, int y_t,
                       const AttackConfig& cfg, const LiTraces& traces) {
    LiEval e;
    TensorF global_in = di_apply(add(x, delta), traces.di_global);
    if (!traces.local_active) {
        e.loss_global = classification_loss(forward(m, global_in), y_t, cfg.loss).value;
        e.composite = e.loss_global;
        return e;
    }
    TapOutput<float> g = forward_with_taps(m, global_in, cfg.tap);
    TensorF local_in = di_apply(add(loc_apply(x, traces.loc), delta), traces.di_local);
    TapOutput<float> l = forward_with_taps(m, local_in, cfg.tap);
    e.loss_global = classification_loss(g.logits, y_t, cfg.loss).value;
    e.loss_local = classification_loss(l.logits, y_t, cfg.loss).value;
    auto cs = cosine_similarity<float>(
        std::span<const float>(g.feature.data.data(), g.feature.data.size()),
        std::span<const float>(l.feature.data.data(), l.feature.data.size()));
    e.cs = cs.score;
    e.degenerate_cs = cs.degenerate;
    e.composite = e.loss_global + e.loss_local - cfg.lambda * e.cs;
    return e;
}

LiGradient li_gradient_traced(const Model& m, const TensorF& x, const TensorF& delta, int y_t,
                              const AttackConfig& cfg, const LiTraces& traces) {
    LiGradient out;
    BranchForward g = branch_forward(m, x, delta, traces.di_global);
    ClassLoss g_loss = classification_loss(g.logits, y_t, cfg.loss);
    out.eval.loss_global = g_loss.value;

    if (!traces.local_active) {
        Upstream<float> up;
        up.grad_logits = std::move(g_loss.grad_logits);
        TensorF branch_grad;
        backward(m, g.input, g.trace, up, &branch_grad, static_cast<ParamGrads<float>*>(nullptr));
        out.grad = di_adjoint(branch_grad, traces.di_global);
        out.eval.composite = out.eval.loss_global;
        return out;
    }

    TensorF local_base = loc_apply(x, traces.loc);
    BranchForward l = branch_forward(m, local_base, delta, traces.di_local);
    ClassLoss l_loss = classification_loss(l.logits, y_t, cfg.loss);
    out.eval.loss_local = l_loss.value;

    const TensorF& feat_g = tap_activation(m, g.trace, cfg.tap);
    const TensorF& feat_l = tap_activation(m, l.trace, cfg.tap);
    auto cs = cosine_similarity<float>(
        std::span<const float>(feat_g.data.data(), feat_g.data.size()),
        std::span<const float>(feat_l.data.data(), feat_l.data.size()));
    out.eval.cs = cs.score;
    out.eval.degenerate_cs = cs.degenerate;
    out.eval.composite = out.eval.loss_global + out.eval.loss_local - cfg.lambda * out.eval.cs;

    // composite subtracts lambda*CS, so the injected feature grads flip sign
    TensorF feat_grad_g(feat_g.shape);
    TensorF feat_grad_l(feat_l.shape);
    for (std::size_t i = 0; i < cs.grad_a.size(); ++i)
        feat_grad_g.data[i] = -cfg.lambda * cs.grad_a[i];
    for (std::size_t i = 0; i < cs.grad_b.size(); ++i)
        feat_grad_l.data[i] = -cfg.lambda * cs.grad_b[i];

    Upstream<float> up_g;
    up_g.grad_logits = std::move(g_loss.grad_logits);
    up_g.tap = cfg.tap;
    up_g.grad_feature = &feat_grad_g;
    TensorF grad_g;
    backward(m, g.input, g.trace, up_g, &grad_g, static_cast<ParamGrads<float>*>(nullptr));
    out.grad = di_adjoint(grad_g, traces.di_global);

    Upstream<float> up_l;
    up_l.grad_logits = std::move(l_loss.grad_logits);
    up_l.tap = cfg.tap;
    up_l.grad_feature = &feat_grad_l;
    TensorF grad_l;
    backward(m, l.input, l.trace, up_l, &grad_l, static_cast<ParamGrads<float>*>(nullptr));
    add_into(out.grad, di_adjoint(grad_l, traces.di_local));
    return out;
}

LiGradient li_gradient(const Model& m, const TensorF& x, const TensorF& delta, int y_t,
                       const AttackConfig& cfg, int image_index, int iteration) {
    return li_gradient_traced(m, x, delta, y_t, cfg,
                              draw_li_traces(x, cfg, image_index, iteration));
}

TensorF mi_update(const TensorF& g_prev, const TensorF& raw_grad, float mu,
                  const TiKernelT<float>& kernel) {
    if (!g_prev.same_shape(raw_grad)) throw std::invalid_argument("mi_update: shape mismatch");
    TensorF smooth = ti_smooth(raw_grad, kernel);
    const double l1 = l1_norm(smooth);
    TensorF g(g_prev.shape);
    for (std::size_t i = 0; i < g.data.size(); ++i) {
        const float norm_term =
            l1 > 0.0 ? static_cast<float>(static_cast<double>(smooth.data[i]) / l1) : 0.0f;
        g.data[i] = mu * g_prev.data[i] + norm_term;
    }
    return g;
}

TensorF step_and_clip(const TensorF& delta, const TensorF& g, float alpha, float epsilon,
                      const TensorF& x) {
    if (!delta.same_shape(g) || !delta.same_shape(x))
        throw std::invalid_argument("step_and_clip: shape mismatch");
    TensorF out(delta.shape);
    for (std::size_t i = 0; i < out.data.size(); ++i) {
        const float gv = g.data[i];
        const float s = gv > 0.0f ? 1.0f : (gv < 0.0f ? -1.0f : 0.0f);
        float d = delta.data[i] - alpha * s;
        d = std::min(std::max(d, -epsilon), epsilon);
        // pixel box: the upper bound is the largest float not above the real
        // 1-x, so x+d stays in [0,1] under any evaluation precision
        const double hi_real = 1.0 - static_cast<double>(x.data[i]);
        float hi = static_cast<float>(hi_real);
        if (static_cast<double>(hi) > hi_real) hi = std::nextafter(hi, -2.0f);
        const float lo = -x.data[i];
        d = std::min(std::max(d, lo), hi);
        out.data[i] = d;
    }
    return out;
}

AdvResult ensemble_attack(const std::vector<const Model*>& models, const TensorF& x, int y_t,
                          const AttackConfig& cfg, int image_index,
                          const std::vector<int>& checkpoints, const AttackHooks* hooks) {
    if (models.empty()) throw std::invalid_argument("ensemble_attack: empty model list");
    validate(cfg);
    for (const Model* m : models) {
        if (!m) throw std::invalid_argument("ensemble_attack: null model");
        if (m->spec.input_shape != x.shape)
            throw std::invalid_argument("ensemble_attack: input shape mismatch");
        if (m->spec.num_classes != models[0]->spec.num_classes)
            throw std::invalid_argument("ensemble_attack: class count mismatch");
    }
    if (y_t < 0 || y_t >= models[0]->spec.num_classes)
        throw std::invalid_argument("ensemble_attack: target class out of range");

    const TiKernelT<float> kernel = make_ti_kernel<float>(cfg.ti_radius, cfg.ti_sigma);
    const float inv_m = 1.0f / static_cast<float>(models.size());

    AdvResult res;
    res.delta = TensorF(x.shape);
    res.telemetry.reserve(cfg.iterations);
    res.snapshots.resize(checkpoints.size()); // filled at matching iterations
    TensorF g(x.shape); // momentum state, g_0 = 0

    for (int it = 1; it <= cfg.iterations; ++it) {
        TensorF grad_sum;
        IterStats stats;
        for (std::size_t mi = 0; mi < models.size(); ++mi) {
            LiGradient lg = li_gradient(*models[mi], x, res.delta, y_t, cfg, image_index, it);
            stats.loss_global += lg.eval.loss_global / models.size();
            stats.loss_local += lg.eval.loss_local / models.size();
            stats.cs += lg.eval.cs / models.size();
            res.degenerate_cs = res.degenerate_cs || lg.eval.degenerate_cs;
            if (mi == 0)
                grad_sum = std::move(lg.grad);
            else
                add_into(grad_sum, lg.grad);
        }
        if (models.size() > 1) grad_sum = scale(grad_sum, inv_m);
        g = mi_update(g, grad_sum, cfg.mu, kernel);
        res.delta = step_and_clip(res.delta, g, cfg.alpha, cfg.epsilon, x);
        res.telemetry.push_back(stats);
        if (cfg.track_success && res.first_success_iter < 0) {
            bool all = true;
            const TensorF cand = add(x, res.delta);
            for (const Model* m : models) {
                const std::vector<float> logits = forward(*m, cand);
                int best = 0;
                for (std::size_t k = 1; k < logits.size(); ++k)
                    if (logits[k] > logits[best]) best = static_cast<int>(k);
                if (best != y_t) {
                    all = false;
                    break;
                }
            }
            if (all) res.first_success_iter = it;
        }
        if (hooks && hooks->after_iter) hooks->after_iter(it, res.delta);
        for (std::size_t k = 0; k < checkpoints.size(); ++k)
            if (checkpoints[k] == it) res.snapshots[k] = add(x, res.delta);
    }

    res.iterations_used = cfg.iterations;
    res.x_adv = add(x, res.delta);
    res.success = true;
    for (const Model* m : models) {
        const std::vector<float> logits = forward(*m, res.x_adv);
        int best = 0;
        for (std::size_t k = 1; k < logits.size(); ++k)
            if (logits[k] > logits[best]) best = static_cast<int>(k);
        if (best != y_t) res.success = false;
    }
    return res;
}

AdvResult attack(const Model& m, const TensorF& x, int y_t, const AttackConfig& cfg,
                 int image_index, const std::vector<int>& checkpoints, const AttackHooks* hooks) {
    return ensemble_attack({&m}, x, y_t, cfg, image_index, checkpoints, hooks);
}

} // namespace advlab
