#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "advlab/data_io.hpp"
#include "advlab/model.hpp"

namespace advlab {

struct DecayStep {
    int epoch = 0;          // 0-based epoch at whose start the multiplier applies
    double multiplier = 1.0;
};

struct TrainHyper {
    int epochs = 30;
    int batch_size = 64;
    double learning_rate = 0.05;
    double momentum = 0.9;
    std::vector<DecayStep> decay = {{20, 0.1}, {25, 0.1}};
    std::uint64_t seed = 0; // shuffle seed; weight init comes from train()'s init_seed
};

struct Accuracy {
    double value = 0.0;
    bool empty = false;
};

void validate(const TrainHyper& h);

// Classic momentum SGD on softmax cross-entropy over seeded-shuffled
// mini-batches. Deterministic per (spec, hyper, init_seed) at a fixed thread
// count. A NaN batch loss raises TrainingError carrying the epoch. Optional
// log gets one "epoch loss accuracy" line per epoch (training accuracy).
Model train(const ModelSpec& spec, const Dataset& ds, const TrainHyper& hyper,
            std::uint64_t init_seed, std::ostream* log = nullptr, int threads = 1);

int predict(const Model& m, const TensorF& x); // argmax logits, ties to lowest index

Accuracy eval_accuracy(const Model& m, const Dataset& ds, int threads = 1);

} // namespace advlab
