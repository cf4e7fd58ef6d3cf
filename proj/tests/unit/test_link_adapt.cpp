#include <doctest.h>

#include <cmath>

#include "lighttune/errors.hpp"
#include "lighttune/link_adapt.hpp"
#include "lighttune/verify.hpp"

using namespace lighttune;
using namespace lighttune::link;

namespace {

/// Single-neuron model reading only the label slot: goodness = relu(y)^2, so
/// the predicted class is always the largest one (0.9).
MlpModel always_high_model() {
    MlpModel m = MlpModel::zeros({13, 1});
    m.layer(1).weights(0, 12) = 1.0;
    return m;
}

/// Zero model: every class ties at goodness 0, prediction is the first class.
MlpModel always_zero_model() { return MlpModel::zeros({13, 1}); }

LinkFeatures some_features() {
    LinkFeatures f;
    f.csi_rs_snr_db = 12.0;
    f.csi_rs_capacity = 8.0;
    f.delay_spread_ns = 30.0;
    f.doppler_hz = 10.0;
    f.pdsch_snr_db = 11.5;
    f.pdsch_snr_hist_db = {11.0, 10.5, 12.5};
    f.ri = 2;
    f.cqi = 9;
    return f;
}

FineTuneConfig quick_finetune() {
    FineTuneConfig cfg;
    cfg.delta = 0.3;
    cfg.alpha_f = 0.03;
    cfg.threshold_T = 9.0;
    cfg.seed = 3;
    return cfg;
}

}  // namespace

TEST_CASE("empirical bler is the nack fraction") {
    CHECK(empirical_bler(7, 3) == doctest::Approx(0.3));
    CHECK(empirical_bler(10, 0) == 0.0);
    CHECK(empirical_bler(0, 5) == 1.0);
    CHECK_THROWS_AS(empirical_bler(0, 0), InputError);
}

TEST_CASE("prediction error is the absolute difference on [0,1]") {
    CHECK(prediction_error(0.3, 0.3) == 0.0);
    CHECK(prediction_error(0.9, 0.0) == doctest::Approx(0.9));
    CHECK(prediction_error(0.2, 0.5) == doctest::Approx(0.3));
    CHECK_THROWS_AS(prediction_error(-0.1, 0.5), InputError);
    CHECK_THROWS_AS(prediction_error(0.1, 1.5), InputError);
}

TEST_CASE("the standard cqi table is strictly increasing in efficiency") {
    const CqiTable t = CqiTable::standard();
    CHECK(t.min_cqi() == 1);
    CHECK(t.max_cqi() == 15);
    for (int c = 2; c <= 15; ++c) CHECK(t.se(c) > t.se(c - 1));
    CHECK(t.entry(1).modulation_order == 2);
    CHECK(t.entry(15).modulation_order == 6);
    CHECK_THROWS_AS(t.entry(0), InputError);
    CHECK_THROWS_AS(t.entry(16), InputError);
}

TEST_CASE("a zero-weight model predicts the first class") {
    const MlpModel m = always_zero_model();
    const double p = bler_predict(m, some_features(), LabelSet::bler_classes(),
                                  io::FeatureScaler::standard_link());
    CHECK(p == 0.0);
}

TEST_CASE("the class scan equals the generic argmax prediction") {
    Rng rng(12);
    const LabelSet classes = LabelSet::bler_classes();
    const io::FeatureScaler scaler = io::FeatureScaler::standard_link();
    for (int trial = 0; trial < 1000; ++trial) {
        const MlpModel m = MlpModel::random_init({13, 6, 4}, rng);
        LinkFeatures f = some_features();
        f.csi_rs_snr_db = rng.uniform(0.0, 40.0);
        f.cqi = 1 + static_cast<int>(rng.index(15));
        f.ri = 1 + static_cast<int>(rng.index(4));
        const double direct = bler_predict(m, f, classes, scaler);
        const std::vector<double> x = scaler.apply(f.flatten());
        const Prediction pred = predict_label(m, x, classes);
        CHECK(direct == pred.label);
    }
}

TEST_CASE("prediction counts the advertised macs") {
    const MlpModel m = MlpModel::random_init({13, 32, 32}, 5);
    MacCounter mac;
    bler_predict(m, some_features(), LabelSet::bler_classes(),
                 io::FeatureScaler::standard_link(), &mac);
    CHECK(mac.macs == 10 * 1440);
}

TEST_CASE("an immediately confident prediction keeps the cqi") {
    MlpModel m = always_zero_model();  // predicts 0.0 < tau
    FineTuneState state = FineTuneState::make(m, quick_finetune());
    LinkFeatures f = some_features();
    int feedback_calls = 0;
    const FeedbackFn fb = [&](int, int) {
        ++feedback_calls;
        return PeriodOutcome{45, 5, 0.1, 0.0};
    };
    const TuneTelemetry tel =
        cqi_tune(m, state, 9, f, 1, 0.9, quick_finetune(), LabelSet::bler_classes(),
                 io::FeatureScaler::standard_link(), fb);
    CHECK(tel.cqi_out == 9);
    CHECK(tel.loop_predictions == 1);
    CHECK(tel.total_predictions == 1);
    CHECK(feedback_calls == 1);
    CHECK(f.cqi == 9);
}

TEST_CASE("one decrement and a guard exit stay within two predictions") {
    MlpModel m = always_high_model();  // predicts 0.9 >= tau
    FineTuneState state = FineTuneState::make(m, quick_finetune());
    LinkFeatures f = some_features();
    const FeedbackFn fb = [&](int, int) { return PeriodOutcome{40, 10, 0.2, 0.0}; };
    const TuneTelemetry tel =
        cqi_tune(m, state, 9, f, 8, 0.5, quick_finetune(), LabelSet::bler_classes(),
                 io::FeatureScaler::standard_link(), fb);
    CHECK(tel.cqi_out == 8);  // exactly one decrement, loop exits on the guard
    CHECK(tel.loop_predictions == 1);
    CHECK(tel.total_predictions <= 2);
}

TEST_CASE("a stuck-high predictor walks down to the floor") {
    MlpModel m = always_high_model();
    FineTuneState state = FineTuneState::make(m, quick_finetune());
    LinkFeatures f = some_features();
    const FeedbackFn fb = [&](int, int) { return PeriodOutcome{10, 40, 0.8, 0.0}; };
    const TuneTelemetry tel =
        cqi_tune(m, state, 15, f, 1, 0.5, quick_finetune(), LabelSet::bler_classes(),
                 io::FeatureScaler::standard_link(), fb);
    CHECK(tel.cqi_out == 1);
    CHECK(tel.loop_predictions == 14);
}

TEST_CASE("cqi stays between the floor and the input") {
    Rng rng(31);
    const LabelSet classes = LabelSet::bler_classes();
    const io::FeatureScaler scaler = io::FeatureScaler::standard_link();
    for (int trial = 0; trial < 100; ++trial) {
        MlpModel m = MlpModel::random_init({13, 6, 4}, rng);
        FineTuneState state = FineTuneState::make(m, quick_finetune());
        LinkFeatures f = some_features();
        const int cqi_in = 1 + static_cast<int>(rng.index(15));
        const int cqi_min = 1 + static_cast<int>(rng.index(static_cast<std::size_t>(cqi_in)));
        const FeedbackFn fb = [&](int, int) { return PeriodOutcome{30, 20, 0.4, 0.0}; };
        const TuneTelemetry tel = cqi_tune(m, state, cqi_in, f, cqi_min, 0.9, quick_finetune(),
                                           classes, scaler, fb);
        CHECK(tel.cqi_out <= cqi_in);
        CHECK(tel.cqi_out >= cqi_min);
    }
}

TEST_CASE("the model changes exactly when the period error reaches delta") {
    Rng rng(37);
    const LabelSet classes = LabelSet::bler_classes();
    const io::FeatureScaler scaler = io::FeatureScaler::standard_link();
    FineTuneConfig cfg = quick_finetune();
    MlpModel m = MlpModel::random_init({13, 8, 6}, rng);
    // positive biases keep neurons alive so triggered updates are never no-ops
    for (std::size_t l = 1; l <= m.layer_count(); ++l)
        for (double& b : m.layer(l).bias) b = 2.0;
    FineTuneState state = FineTuneState::make(m, cfg);
    for (int trial = 0; trial < 60; ++trial) {
        LinkFeatures f = some_features();
        f.csi_rs_snr_db = rng.uniform(0.0, 40.0);
        const long n_nack = static_cast<long>(rng.index(51));
        const FeedbackFn fb = [&](int, int) {
            return PeriodOutcome{50 - n_nack, n_nack, 0.0, 0.0};
        };
        const MlpModel before = m;
        const TuneTelemetry tel =
            cqi_tune(m, state, 9, f, 8, 0.9, cfg, classes, scaler, fb);
        REQUIRE(tel.p_hat.has_value());
        const bool should_change = std::abs(*tel.p_hat - tel.p_empirical) >= cfg.delta;
        CHECK(tel.triggered == should_change);
        CHECK((m == before) == !should_change);
    }
}

TEST_CASE("an empty period skips error computation and fine-tuning") {
    MlpModel m = MlpModel::random_init({13, 4}, 3);
    const MlpModel before = m;
    FineTuneState state = FineTuneState::make(m, quick_finetune());
    LinkFeatures f = some_features();
    const FeedbackFn fb = [&](int, int) { return PeriodOutcome{0, 0, 0.0, 0.0}; };
    const TuneTelemetry tel = cqi_tune(m, state, 9, f, 1, 0.9, quick_finetune(),
                                       LabelSet::bler_classes(),
                                       io::FeatureScaler::standard_link(), fb);
    CHECK(tel.empty_period);
    CHECK_FALSE(tel.triggered);
    CHECK(m == before);
}

TEST_CASE("rank selection maximizes rank times efficiency") {
    const CqiTable t = CqiTable::standard();
    // se(13) = 4.5234 for rank 1; se(8) = 1.9141 for rank 2: 4.52 > 3.83
    const std::vector<int> cqis = {0, 13, 8};
    CHECK(se_rank_select(cqis, t, 2) == 1);
}

TEST_CASE("equal efficiencies favor the highest rank") {
    const CqiTable t = CqiTable::standard();
    const std::vector<int> cqis = {0, 9, 9, 9, 9};
    CHECK(se_rank_select(cqis, t, 4) == 4);  // rank times a constant grows with rank
}

TEST_CASE("rank selection matches brute force") {
    const CqiTable t = CqiTable::standard();
    Rng rng(41);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<int> cqis = {0};
        for (int i = 1; i <= 4; ++i) cqis.push_back(1 + static_cast<int>(rng.index(15)));
        const int got = se_rank_select(cqis, t, 4);
        int best = 1;
        double best_se = -1.0;
        for (int i = 1; i <= 4; ++i) {
            const double se = i * t.se(cqis[i]);
            if (se > best_se) {
                best_se = se;
                best = i;
            }
        }
        CHECK(got == best);
    }
}

TEST_CASE("rank windows cover at most three candidates") {
    for (int r_max = 1; r_max <= 4; ++r_max) {
        for (int r = 1; r <= r_max; ++r) {
            const int r_low = (r + 1) / 2;
            const int r_high = std::min(r_low + 2, r_max);
            CHECK(r_high - r_low + 1 <= 3);
            CHECK(r_low <= r);
            CHECK(r <= r_high);
        }
    }
    // the two documented cases
    CHECK((4 + 1) / 2 == 2);
    CHECK(std::min((4 + 1) / 2 + 2, 4) == 4);
    CHECK((1 + 1) / 2 == 1);
    CHECK(std::min((1 + 1) / 2 + 2, 4) == 3);
}

TEST_CASE("a confident predictor reduces joint selection to the table choice") {
    MlpModel m = always_zero_model();  // always predicts 0.0 < tau
    FineTuneState state = FineTuneState::make(m, quick_finetune());
    const CqiTable t = CqiTable::standard();
    Rng rng(43);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<int> cqis = {0};
        for (int i = 1; i <= 4; ++i) cqis.push_back(2 + static_cast<int>(rng.index(14)));
        const int r = 1 + static_cast<int>(rng.index(4));
        LinkFeatures f = some_features();
        const FeedbackFn fb = [&](int, int) { return PeriodOutcome{49, 1, 0.02, 0.0}; };
        const TuneTelemetry tel =
            ri_cqi_tune(m, state, r, cqis, f, std::max(cqis[r] - 1, 1), 0.9, 4, t,
                        quick_finetune(), LabelSet::bler_classes(),
                        io::FeatureScaler::standard_link(), fb);
        // winner equals the best table choice within the window
        const int r_low = (r + 1) / 2;
        const int r_high = std::min(r_low + 2, 4);
        int best = r_low;
        double best_se = -1.0;
        for (int i = r_low; i <= r_high; ++i) {
            const double se = i * t.se(cqis[i]);
            if (se > best_se) {
                best_se = se;
                best = i;
            }
        }
        CHECK(tel.rank_out == best);
        CHECK(tel.cqi_out == cqis[best]);
        CHECK(tel.loop_predictions <= 3);
    }
}

TEST_CASE("joint selection stays within three times the single-rank inferences") {
    MlpModel m = always_high_model();  // worst case: every rank backs off
    FineTuneState state = FineTuneState::make(m, quick_finetune());
    const CqiTable t = CqiTable::standard();
    const std::vector<int> cqis = {0, 12, 11, 9, 7};
    LinkFeatures f = some_features();
    const FeedbackFn fb = [&](int, int) { return PeriodOutcome{25, 25, 0.5, 0.0}; };
    const TuneTelemetry tel =
        ri_cqi_tune(m, state, 4, cqis, f, std::max(cqis[4] - 1, 1), 0.5, 4, t, quick_finetune(),
                    LabelSet::bler_classes(), io::FeatureScaler::standard_link(), fb);
    CHECK(tel.loop_predictions <= 3);   // one per candidate rank at depth 1
    CHECK(tel.total_predictions <= 3);
}

TEST_CASE("olla steps couple through the target bler") {
    const OllaState s = OllaState::coupled(0.5, 0.1);
    CHECK(s.step_down_db == doctest::Approx(0.5 * 0.1 / 0.9));
    CHECK(s.offset_db == 0.0);
}

TEST_CASE("alternating feedback moves the offset linearly") {
    OllaState s = OllaState::coupled(0.5, 0.1);
    const long n = 37;
    for (long i = 0; i < n; ++i) {
        olla_step(s, false);
        olla_step(s, true);
    }
    CHECK(s.offset_db ==
          doctest::Approx(n * (s.step_up_db - s.step_down_db)).epsilon(1e-12));
}

TEST_CASE("at the target bler the offset random-walks without drift") {
    OllaState s = OllaState::coupled(0.5, 0.1);
    Rng rng(47);
    double sum_abs = 0.0;
    const int runs = 50;
    const long steps = 2000;
    for (int run = 0; run < runs; ++run) {
        OllaState w = s;
        for (long i = 0; i < steps; ++i) olla_step(w, !rng.bernoulli(0.1));
        sum_abs += std::abs(w.offset_db);
    }
    // mean |offset| after n balanced steps stays near sqrt(n) * step, far from
    // the n * step scale a drift would produce
    const double mean_abs = sum_abs / runs;
    CHECK(mean_abs < 0.2 * steps * s.step_down_db);
}

TEST_CASE("throughput accounting") {
    const CqiTable t = CqiTable::standard();
    SUBCASE("all nack gives zero bits") {
        const PeriodOutcome o{0, 50, 1.0, 0.0};
        CHECK(throughput(o, 2, 9, t, 106, 1920) == 0.0);
    }
    SUBCASE("rank scales linearly") {
        const PeriodOutcome o{50, 0, 0.0, 0.0};
        const double tp1 = throughput(o, 1, 9, t, 106, 1920);
        const double tp2 = throughput(o, 2, 9, t, 106, 1920);
        CHECK(tp2 == doctest::Approx(2.0 * tp1));
    }
    SUBCASE("hand arithmetic") {
        const PeriodOutcome o{40, 10, 0.2, 0.0};
        // 0.8 * 2 * 2.4063 * 106 * 12 * 1920
        CHECK(throughput(o, 2, 9, t, 106, 1920) ==
              doctest::Approx(0.8 * 2 * 2.4063 * 106 * 12 * 1920));
    }
}

TEST_CASE("false alarm and missed detection rates") {
    SUBCASE("perfect predictor") {
        std::vector<std::pair<double, double>> log = {{0.1, 0.1}, {0.95, 0.95}};
        const FaMdRates r = fa_md_rates(log, 0.9);
        CHECK(*r.p_fa == 0.0);
        CHECK(*r.p_md == 0.0);
    }
    SUBCASE("constant high prediction with all truths below") {
        std::vector<std::pair<double, double>> log = {{1.0, 0.1}, {1.0, 0.2}};
        const FaMdRates r = fa_md_rates(log, 0.9);
        CHECK(*r.p_fa == 1.0);
        CHECK_FALSE(r.p_md.has_value());
    }
    SUBCASE("random log against a naive two-pass counter") {
        Rng rng(53);
        std::vector<std::pair<double, double>> log;
        for (int i = 0; i < 2000; ++i) log.emplace_back(rng.uniform(), rng.uniform());
        const double tau = 0.6;
        const FaMdRates r = fa_md_rates(log, tau);
        long below = 0, above = 0;
        for (const auto& [p_hat, p] : log) (p < tau ? below : above) += 1;
        long fa = 0, md = 0;
        for (const auto& [p_hat, p] : log) {
            if (p < tau && p_hat >= tau) ++fa;
            if (p >= tau && p_hat < tau) ++md;
        }
        CHECK(*r.p_fa == doctest::Approx(static_cast<double>(fa) / below));
        CHECK(*r.p_md == doctest::Approx(static_cast<double>(md) / above));
    }
    SUBCASE("empty log") {
        CHECK_THROWS_AS(fa_md_rates({}, 0.9), InputError);
    }
}

TEST_CASE("cqi table files round-trip") {
    const CqiTable t = CqiTable::standard();
    const std::string path = "/tmp/lighttune_cqi_test.txt";
    t.save(path);
    const CqiTable back = CqiTable::from_file(path);
    for (int c = 1; c <= 15; ++c) {
        CHECK(back.se(c) == t.se(c));
        CHECK(back.entry(c).modulation_order == t.entry(c).modulation_order);
        CHECK(back.entry(c).code_rate == t.entry(c).code_rate);
    }
    std::remove(path.c_str());
}
