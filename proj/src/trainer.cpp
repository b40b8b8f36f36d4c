#include "advlab/trainer.hpp"

#include <cmath>
#include <ostream>

#include "advlab/errors.hpp"
#include "advlab/parallel.hpp"
#include "advlab/rng.hpp"

namespace advlab {

namespace {

struct GradAccum {
    ParamGrads<float> grads;
    double loss_sum = 0.0;
    int correct = 0;

    explicit GradAccum(const Model& m) {
        grads.weights.resize(m.weights.size());
        grads.biases.resize(m.biases.size());
        for (std::size_t i = 0; i < m.weights.size(); ++i) {
            if (m.weights[i].data.empty()) continue;
            grads.weights[i] = TensorF(m.weights[i].shape);
            grads.biases[i].assign(m.biases[i].size(), 0.0f);
        }
    }

    void add(const GradAccum& o) {
        for (std::size_t i = 0; i < grads.weights.size(); ++i) {
            if (grads.weights[i].data.empty()) continue;
            add_into(grads.weights[i], o.grads.weights[i]);
            for (std::size_t k = 0; k < grads.biases[i].size(); ++k)
                grads.biases[i][k] += o.grads.biases[i][k];
        }
        loss_sum += o.loss_sum;
        correct += o.correct;
    }
};

int argmax_lowest(const std::vector<float>& v) {
    int best = 0;
    for (std::size_t i = 1; i < v.size(); ++i)
        if (v[i] > v[best]) best = static_cast<int>(i);
    return best;
}

} // namespace

void validate(const TrainHyper& h) {
    if (h.epochs < 0) throw std::invalid_argument("train: negative epoch count");
    if (h.batch_size < 1) throw std::invalid_argument("train: batch size must be positive");
    if (h.learning_rate < 0) throw std::invalid_argument("train: negative learning rate");
    if (h.momentum < 0 || h.momentum >= 1)
        throw std::invalid_argument("train: momentum must lie in [0,1)");
}

Model train(const ModelSpec& spec, const Dataset& ds, const TrainHyper& hyper,
            std::uint64_t init_seed, std::ostream* log, int threads) {
    validate(hyper);
    if (ds.records.empty()) throw std::invalid_argument("train: empty dataset");
    for (const ImageRecord& r : ds.records)
        if (r.pixels.shape != spec.input_shape)
            throw std::invalid_argument("train: record shape does not match model input");

    Model m = init_model(spec, init_seed);
    const int n = static_cast<int>(ds.records.size());
    const int num_layers = static_cast<int>(spec.layers.size());

    // momentum buffers, one per parametrized layer
    std::vector<TensorF> vel_w(num_layers);
    std::vector<std::vector<float>> vel_b(num_layers);
    for (int i = 0; i < num_layers; ++i) {
        if (m.weights[i].data.empty()) continue;
        vel_w[i] = TensorF(m.weights[i].shape);
        vel_b[i].assign(m.biases[i].size(), 0.0f);
    }

    double lr = hyper.learning_rate;
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;

    for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
        for (const DecayStep& d : hyper.decay)
            if (d.epoch == epoch) lr *= d.multiplier;

        RngStream shuffle_rng = RngStream::keyed(hyper.seed, 0, epoch, "shuffle");
        for (int i = n - 1; i > 0; --i) {
            const int j = shuffle_rng.uniform_int(0, i);
            std::swap(order[i], order[j]);
        }

        double epoch_loss = 0.0;
        int epoch_correct = 0;
        for (int start = 0; start < n; start += hyper.batch_size) {
            const int bsz = std::min(hyper.batch_size, n - start);
            std::vector<GradAccum> per_thread;
            const int nt = std::max(1, std::min(threads, bsz));
            per_thread.reserve(nt);
            for (int t = 0; t < nt; ++t) per_thread.emplace_back(m);

            parallel_for(bsz, nt, [&](int t, int lo, int hi) {
                GradAccum& acc = per_thread[t];
                for (int b = lo; b < hi; ++b) {
                    const ImageRecord& rec = ds.records[order[start + b]];
                    ForwardTrace<float> tr;
                    std::vector<float> logits = forward(m, rec.pixels, &tr);
                    auto ce = softmax_cross_entropy<float>(
                        std::span<const float>(logits.data(), logits.size()), rec.label);
                    acc.loss_sum += ce.loss;
                    if (argmax_lowest(logits) == rec.label) ++acc.correct;
                    Upstream<float> up;
                    up.grad_logits = std::move(ce.grad_logits);
                    ParamGrads<float> pg;
                    backward(m, rec.pixels, tr, up, static_cast<TensorF*>(nullptr), &pg);
                    for (int i = 0; i < num_layers; ++i) {
                        if (pg.weights[i].data.empty()) continue;
                        add_into(acc.grads.weights[i], pg.weights[i]);
                        for (std::size_t k = 0; k < pg.biases[i].size(); ++k)
                            acc.grads.biases[i][k] += pg.biases[i][k];
                    }
                }
            });
            for (int t = 1; t < nt; ++t) per_thread[0].add(per_thread[t]); // fixed order
            GradAccum& total = per_thread[0];

            const double batch_loss = total.loss_sum / bsz;
            if (!std::isfinite(batch_loss)) throw TrainingError("loss diverged", epoch);
            epoch_loss += total.loss_sum;
            epoch_correct += total.correct;

            const float inv = 1.0f / static_cast<float>(bsz);
            for (int i = 0; i < num_layers; ++i) {
                if (m.weights[i].data.empty()) continue;
                float* w = m.weights[i].data.data();
                float* vw = vel_w[i].data.data();
                const float* gw = total.grads.weights[i].data.data();
                const std::size_t wn = m.weights[i].data.size();
                for (std::size_t k = 0; k < wn; ++k) {
                    vw[k] = static_cast<float>(hyper.momentum) * vw[k] + gw[k] * inv;
                    w[k] -= static_cast<float>(lr) * vw[k];
                }
                for (std::size_t k = 0; k < m.biases[i].size(); ++k) {
                    vel_b[i][k] = static_cast<float>(hyper.momentum) * vel_b[i][k] +
                                  total.grads.biases[i][k] * inv;
                    m.biases[i][k] -= static_cast<float>(lr) * vel_b[i][k];
                }
            }
        }
        if (log)
            *log << epoch << ' ' << epoch_loss / n << ' '
                 << static_cast<double>(epoch_correct) / n << '\n';
    }
    return m;
}

int predict(const Model& m, const TensorF& x) {
    return argmax_lowest(forward(m, x));
}

Accuracy eval_accuracy(const Model& m, const Dataset& ds, int threads) {
    if (ds.records.empty()) return {0.0, true};
    const int n = static_cast<int>(ds.records.size());
    const int nt = std::max(1, std::min(threads, n));
    std::vector<int> correct(nt, 0);
    parallel_for(n, nt, [&](int t, int lo, int hi) {
        for (int i = lo; i < hi; ++i)
            if (predict(m, ds.records[i].pixels) == ds.records[i].label) ++correct[t];
    });
    int total = 0;
    for (int c : correct) total += c;
    return {static_cast<double>(total) / n, false};
}

} // namespace advlab
