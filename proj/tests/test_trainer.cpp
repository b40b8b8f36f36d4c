#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>
#include <sstream>
#include <string>

#include "advlab/errors.hpp"
#include "advlab/synth.hpp"
#include "advlab/trainer.hpp"
#include "oracle.hpp"

using namespace advlab;

namespace {

// Small random-pixel dataset: eight distinct 3x16x16 images, labels 0..7 of a
// 10-class problem. Random noise is memorizable by an over-parametrized net.
Dataset tiny_dataset(unsigned seed = 101, int count = 8) {
    std::mt19937 rng(seed);
    Dataset ds;
    ds.num_classes = 10;
    ds.provenance = "tiny";
    for (int i = 0; i < count; ++i) {
        ImageRecord rec;
        rec.pixels = oracle::random_tensor<float>({3, 16, 16}, rng, 0.0, 1.0);
        rec.label = i % 10;
        ds.records.push_back(std::move(rec));
    }
    return ds;
}

ModelSpec tiny_spec() { return make_model_spec("ConvNetA", 10, {3, 16, 16}); }

bool same_params(const Model& a, const Model& b) {
    for (std::size_t i = 0; i < a.weights.size(); ++i) {
        if (a.weights[i].data != b.weights[i].data) return false;
        if (a.biases[i] != b.biases[i]) return false;
    }
    return true;
}

} // namespace

TEST_CASE("hyperparameter defaults and validation") {
    TrainHyper h;
    CHECK(h.epochs == 30);
    CHECK(h.batch_size == 64);
    CHECK(h.learning_rate == doctest::Approx(0.05));
    CHECK(h.momentum == doctest::Approx(0.9));
    REQUIRE(h.decay.size() == 2);
    CHECK(h.decay[0].epoch == 20);
    CHECK(h.decay[0].multiplier == doctest::Approx(0.1));
    CHECK(h.decay[1].epoch == 25);
    CHECK_NOTHROW(validate(h));

    TrainHyper bad = h;
    bad.epochs = -1;
    CHECK_THROWS_AS(validate(bad), std::invalid_argument);
    bad = h;
    bad.batch_size = 0;
    CHECK_THROWS_AS(validate(bad), std::invalid_argument);
    bad = h;
    bad.learning_rate = -0.1;
    CHECK_THROWS_AS(validate(bad), std::invalid_argument);
    bad = h;
    bad.momentum = 1.0;
    CHECK_THROWS_AS(validate(bad), std::invalid_argument);
}

TEST_CASE("training memorizes a tiny dataset") {
    Dataset ds = tiny_dataset();
    TrainHyper h;
    h.epochs = 120;
    h.batch_size = 8;
    h.learning_rate = 0.05;
    h.momentum = 0.9;
    h.decay = {{90, 0.2}};
    h.seed = 1;
    std::ostringstream log;
    Model m = train(tiny_spec(), ds, h, 7, &log);
    Accuracy acc = eval_accuracy(m, ds);
    CHECK_FALSE(acc.empty);
    CHECK(acc.value == 1.0);

    // one log line per epoch: "epoch loss accuracy"
    std::istringstream in(log.str());
    std::string line;
    int lines = 0;
    int first_epoch = -1;
    double last_acc = -1.0;
    while (std::getline(in, line)) {
        std::istringstream ls(line);
        int ep;
        double loss, a;
        REQUIRE(static_cast<bool>(ls >> ep >> loss >> a));
        if (lines == 0) first_epoch = ep;
        last_acc = a;
        ++lines;
    }
    CHECK(lines == 120);
    CHECK(first_epoch == 0);
    CHECK(last_acc == 1.0);
}

TEST_CASE("zero epochs returns the untouched initialization") {
    Dataset ds = tiny_dataset();
    TrainHyper h;
    h.epochs = 0;
    std::ostringstream log;
    Model m = train(tiny_spec(), ds, h, 19, &log);
    Model init = init_model(tiny_spec(), 19);
    CHECK(same_params(m, init));
    CHECK(log.str().empty());
}

TEST_CASE("zero learning rate leaves weights bit-identical") {
    Dataset ds = tiny_dataset();
    TrainHyper h;
    h.epochs = 3;
    h.batch_size = 4;
    h.learning_rate = 0.0;
    h.decay = {};
    Model m = train(tiny_spec(), ds, h, 23);
    CHECK(same_params(m, init_model(tiny_spec(), 23)));
}

TEST_CASE("training is deterministic per seed pair") {
    Dataset ds = tiny_dataset();
    TrainHyper h;
    h.epochs = 4;
    h.batch_size = 4;
    h.decay = {};
    h.seed = 5;
    Model a = train(tiny_spec(), ds, h, 11);
    Model b = train(tiny_spec(), ds, h, 11);
    CHECK(same_params(a, b));

    TrainHyper h2 = h;
    h2.seed = 6; // different shuffle order changes the trajectory
    Model c = train(tiny_spec(), ds, h2, 11);
    CHECK_FALSE(same_params(a, c));

    Model d = train(tiny_spec(), ds, h, 12); // different init
    CHECK_FALSE(same_params(a, d));
}

TEST_CASE("a decay step multiplies the rate at the start of its epoch") {
    Dataset ds = tiny_dataset();
    TrainHyper one;
    one.epochs = 1;
    one.batch_size = 4;
    one.decay = {};
    Model after_one = train(tiny_spec(), ds, one, 31);

    TrainHyper two = one;
    two.epochs = 2;
    two.decay = {{1, 0.0}}; // epoch 1 runs with rate 0: no further movement
    Model after_two = train(tiny_spec(), ds, two, 31);
    CHECK(same_params(after_one, after_two));
}

TEST_CASE("an exploding rate raises a divergence error carrying the epoch") {
    Dataset ds = tiny_dataset();
    TrainHyper h;
    h.epochs = 3;
    h.batch_size = 4;
    h.learning_rate = 1e8;
    h.decay = {};
    try {
        train(tiny_spec(), ds, h, 3);
        CHECK(false);
    } catch (const TrainingError& e) {
        CHECK(e.epoch() >= 0);
        CHECK(e.epoch() <= 1);
        CHECK(std::string(e.what()).find("diverged") != std::string::npos);
    }
}

TEST_CASE("empty datasets are rejected by train and flagged by accuracy") {
    Dataset empty;
    empty.num_classes = 10;
    TrainHyper h;
    CHECK_THROWS_AS(train(tiny_spec(), empty, h, 0), std::invalid_argument);

    Model m = init_model(tiny_spec(), 0);
    Accuracy acc = eval_accuracy(m, empty);
    CHECK(acc.empty);
    CHECK(acc.value == 0.0);
}

TEST_CASE("training rejects records whose shape does not match the model") {
    Dataset ds = make_synthetic_dataset(4, 1); // 3x32x32 records
    TrainHyper h;
    h.epochs = 1;
    CHECK_THROWS_AS(train(tiny_spec(), ds, h, 0), std::invalid_argument);
}

TEST_CASE("prediction breaks ties toward the lowest class index") {
    ModelSpec spec = tiny_spec();
    Model m = init_model(spec, 0);
    for (auto& w : m.weights) std::fill(w.data.begin(), w.data.end(), 0.0f);
    for (auto& b : m.biases) std::fill(b.begin(), b.end(), 0.0f);
    TensorF x({3, 16, 16});
    CHECK(predict(m, x) == 0); // all-zero logits tie

    // a constant-class predictor scores exactly the class frequency
    m.biases.back()[3] = 1.0f;
    Dataset ds = make_synthetic_dataset(50, 2); // labels cycle 0..9: five 3s
    ModelSpec spec32 = make_model_spec("ConvNetA", 10, {3, 32, 32});
    Model m32 = init_model(spec32, 0);
    for (auto& w : m32.weights) std::fill(w.data.begin(), w.data.end(), 0.0f);
    for (auto& b : m32.biases) std::fill(b.begin(), b.end(), 0.0f);
    m32.biases.back()[3] = 1.0f;
    Accuracy acc = eval_accuracy(m32, ds, 2);
    CHECK(acc.value == doctest::Approx(0.1));
}
