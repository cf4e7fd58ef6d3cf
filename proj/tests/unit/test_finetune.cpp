#include <doctest.h>

#include <cmath>

#include "lighttune/errors.hpp"
#include "lighttune/finetune.hpp"

using namespace lighttune;

TEST_CASE("the trigger is inclusive at the threshold") {
    CHECK(should_update(0.3, 0.3));
    CHECK_FALSE(should_update(0.0, 0.3));
    CHECK_FALSE(should_update(0.29999, 0.3));
    CHECK(should_update(0.0, 0.0));
    CHECK_THROWS_AS(should_update(-0.1, 0.3), InputError);
}

TEST_CASE("uniform sampling with two classes always picks the other label") {
    const LabelSet labels({0.0, 1.0});
    Rng rng(1);
    for (int i = 0; i < 50; ++i)
        CHECK(sample_negative(0.0, labels, NegativeSampling::uniform, 0.0, rng) == 1.0);
}

TEST_CASE("hard sampling returns the erroneous prediction") {
    const LabelSet labels({0.0, 0.1, 0.2, 0.3});
    Rng rng(2);
    CHECK(sample_negative(0.1, labels, NegativeSampling::hard, 0.3, rng) == 0.3);
}

TEST_CASE("hard sampling falls back to uniform when the prediction is correct") {
    const LabelSet labels({0.0, 0.1, 0.2});
    Rng rng(3);
    bool fallback = false;
    const double y = sample_negative(0.1, labels, NegativeSampling::hard, 0.1, rng, &fallback);
    CHECK(fallback);
    CHECK(y != 0.1);
    CHECK(labels.contains(y));
}

TEST_CASE("uniform sampling is unbiased over the incorrect labels") {
    const LabelSet labels = LabelSet::bler_classes();
    const double y_pos = labels.value(4);
    Rng rng(5);
    std::vector<long> counts(labels.size(), 0);
    const long draws = 100000;
    for (long i = 0; i < draws; ++i) {
        const double y = sample_negative(y_pos, labels, NegativeSampling::uniform, 0.0, rng);
        ++counts[labels.index_of(y)];
    }
    CHECK(counts[4] == 0);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (i == 4) continue;
        const double freq = static_cast<double>(counts[i]) / draws;
        CHECK(freq > 1.0 / 9.0 - 0.01);
        CHECK(freq < 1.0 / 9.0 + 0.01);
    }
}

namespace {

struct StepFixture {
    MlpModel model = MlpModel::random_init({3, 6, 4}, 77);
    LabelSet labels = LabelSet::bler_classes();
    FineTuneConfig cfg;
    StepFixture() {
        cfg.delta = 0.3;
        cfg.alpha_f = 0.03;
        cfg.threshold_T = 1.0;
        cfg.seed = 9;
    }
};

}  // namespace

TEST_CASE("an unreachable trigger never changes the model") {
    StepFixture fx;
    fx.cfg.delta = 1.0;  // larger than the maximal label distance 0.9
    FineTuneState state = FineTuneState::make(fx.model, fx.cfg);
    const MlpModel before = fx.model;
    Rng rng(13);
    for (int step = 0; step < 200; ++step) {
        const std::vector<double> x = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
        const double y = fx.labels.value(rng.index(fx.labels.size()));
        const StepOutcome out = lighttune_step(fx.model, x, y, fx.labels, fx.cfg, state);
        CHECK_FALSE(out.triggered);
    }
    CHECK(fx.model == before);
}

TEST_CASE("a zero threshold triggers on every step") {
    StepFixture fx;
    fx.cfg.delta = 0.0;
    FineTuneState state = FineTuneState::make(fx.model, fx.cfg);
    Rng rng(14);
    long triggered = 0;
    const long n = 100;
    for (long step = 0; step < n; ++step) {
        const std::vector<double> x = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
        const double y = fx.labels.value(rng.index(fx.labels.size()));
        const StepOutcome out = lighttune_step(fx.model, x, y, fx.labels, fx.cfg, state);
        if (out.triggered) ++triggered;
        CHECK(out.negative_label.has_value());
        CHECK(*out.negative_label != fx.labels.nearest(y));
    }
    CHECK(triggered == n);
}

TEST_CASE("the trigger indicator matches the error comparison exactly") {
    StepFixture fx;
    FineTuneState state = FineTuneState::make(fx.model, fx.cfg);
    Rng rng(15);
    for (int step = 0; step < 300; ++step) {
        const std::vector<double> x = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
        const double y = rng.uniform(0.0, 0.9);
        const StepOutcome out = lighttune_step(fx.model, x, y, fx.labels, fx.cfg, state);
        CHECK(out.triggered == (out.error >= fx.cfg.delta));
        CHECK(out.error == doctest::Approx(std::abs(out.prediction - y)).epsilon(1e-15));
        CHECK(out.negative_label.has_value() == out.triggered);
    }
}

TEST_CASE("untriggered steps leave the model bit-identical") {
    StepFixture fx;
    FineTuneState state = FineTuneState::make(fx.model, fx.cfg);
    Rng rng(16);
    int untriggered_seen = 0;
    for (int step = 0; step < 500 && untriggered_seen < 50; ++step) {
        const std::vector<double> x = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
        const MlpModel before = fx.model;
        const Prediction pred = predict_label(fx.model, x, fx.labels);
        // pick a ground truth close to the prediction so the trigger stays off
        const double y = pred.label;
        const StepOutcome out = lighttune_step(fx.model, x, y, fx.labels, fx.cfg, state);
        CHECK_FALSE(out.triggered);
        CHECK(fx.model == before);
        ++untriggered_seen;
    }
    CHECK(untriggered_seen >= 50);
}

TEST_CASE("a precomputed prediction replaces the internal inference") {
    StepFixture fx;
    FineTuneState state = FineTuneState::make(fx.model, fx.cfg);
    const std::vector<double> x = {0.2, -0.4};
    MacCounter mac;
    const StepOutcome out =
        lighttune_step(fx.model, x, 0.9, fx.labels, fx.cfg, state, 0.05, &mac);
    CHECK(out.prediction == 0.05);
    CHECK(out.error == doctest::Approx(0.85));
    CHECK(out.triggered);
    // only the two polarity passes and the update were counted, no C-fold scan
    const long long q = static_cast<long long>(fx.model.forward_macs());
    const long long n = static_cast<long long>(fx.model.parameter_count());
    CHECK(mac.macs == 2 * q + 4 * n);
}

TEST_CASE("off-grid ground truth trains toward its nearest class") {
    StepFixture fx;
    FineTuneState state = FineTuneState::make(fx.model, fx.cfg);
    const std::vector<double> x = {0.2, -0.4};
    const StepOutcome out = lighttune_step(fx.model, x, 0.63, fx.labels, fx.cfg, state);
    if (out.triggered && out.negative_label.has_value())
        CHECK(*out.negative_label != doctest::Approx(0.6));
}

TEST_CASE("state carries only optimizer moments and the rng") {
    StepFixture fx;
    const FineTuneState state = FineTuneState::make(fx.model, fx.cfg);
    CHECK(state.layers.size() == fx.model.layer_count());
    for (std::size_t l = 1; l <= fx.model.layer_count(); ++l) {
        CHECK(state.layers[l - 1].m.rows() == fx.model.layer(l).weights.rows());
        CHECK(state.layers[l - 1].m.cols() == fx.model.layer(l).weights.cols() + 1);
        CHECK(state.layers[l - 1].t_adam == 0);
    }
    // the state is a fixed-size struct (moments + rng), independent of how
    // many samples have streamed through
    CHECK(sizeof(FineTuneState) <= sizeof(std::vector<OptimizerState>) + sizeof(Rng) + 64);
}
