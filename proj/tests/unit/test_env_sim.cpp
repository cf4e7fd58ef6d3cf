#include <doctest.h>

#include <cmath>

#include "lighttune/env_sim.hpp"
#include "lighttune/errors.hpp"

using namespace lighttune;
using namespace lighttune::sim;

namespace {

ScenarioSpec tiny_constant_scenario() {
    ScenarioSpec s;
    s.name = "tiny";
    s.duration = 100;
    s.snr.kind = SnrTrajectory::Kind::constant;
    s.snr.value_db = 15.0;
    s.tx_per_period = 20;
    s.seed = 42;
    return s;
}

}  // namespace

TEST_CASE("zero observation noise yields identical features after warm-up") {
    ScenarioSpec s = tiny_constant_scenario();
    s.obs_noise_db = 0.0;
    s.delay_jitter_ns = 0.0;
    s.doppler_jitter_hz = 0.0;
    ChannelState st(s);
    link::LinkFeatures first = gen_features(s, st);
    st.push_history(first.pdsch_snr_db);
    st.advance();
    // warm-up: run until the 3-deep history is filled
    for (int i = 0; i < 3; ++i) {
        link::LinkFeatures f = gen_features(s, st);
        st.push_history(f.pdsch_snr_db);
        st.advance();
    }
    link::LinkFeatures a = gen_features(s, st);
    st.push_history(a.pdsch_snr_db);
    st.advance();
    link::LinkFeatures b = gen_features(s, st);
    CHECK(a.flatten() == b.flatten());
    CHECK(a.csi_rs_snr_db == 15.0);
}

TEST_CASE("streams are deterministic given the seed") {
    const ScenarioSpec s = tiny_constant_scenario();
    ChannelState s1(s), s2(s);
    for (int i = 0; i < 50; ++i) {
        link::LinkFeatures a = gen_features(s, s1);
        link::LinkFeatures b = gen_features(s, s2);
        CHECK(a.flatten() == b.flatten());
        s1.push_history(a.pdsch_snr_db);
        s2.push_history(b.pdsch_snr_db);
        s1.advance();
        s2.advance();
    }
}

TEST_CASE("feature means match the configured values") {
    ScenarioSpec s = tiny_constant_scenario();
    s.duration = 10000;
    ChannelState st(s);
    double sum_snr = 0.0, sum_delay = 0.0, sum_doppler = 0.0;
    const long n = 10000;
    for (long i = 0; i < n; ++i) {
        const link::LinkFeatures f = gen_features(s, st);
        sum_snr += f.csi_rs_snr_db;
        sum_delay += f.delay_spread_ns;
        sum_doppler += f.doppler_hz;
        st.push_history(f.pdsch_snr_db);
        st.advance();
    }
    // 3 sigma of the mean estimator
    CHECK(std::abs(sum_snr / n - 15.0) < 3.0 * s.obs_noise_db / std::sqrt(n));
    CHECK(std::abs(sum_delay / n - s.delay_spread_ns) <
          3.0 * s.delay_jitter_ns / std::sqrt(n));
    CHECK(std::abs(sum_doppler / n - s.doppler_hz) <
          3.0 * s.doppler_jitter_hz / std::sqrt(n));
}

TEST_CASE("the stream signals its end") {
    ScenarioSpec s = tiny_constant_scenario();
    s.duration = 2;
    ChannelState st(s);
    gen_features(s, st);
    st.advance();
    gen_features(s, st);
    st.advance();
    CHECK(st.done());
    CHECK_THROWS_AS(gen_features(s, st), EndOfStreamError);
}

TEST_CASE("the hidden bler curve is logistic in the effective sinr") {
    ScenarioSpec s = tiny_constant_scenario();
    s.correlation = Correlation::low;
    s.doppler_hz = 0.0;
    ChannelState st(s);
    SUBCASE("midpoint gives one half") {
        // pick the cqi whose midpoint equals the sinr: mid = 2 + 1.9 (c-1)
        // with snr 15: c = 1 + (15 - 2)/1.9 is not integral, so move the snr
        s.snr.value_db = s.curve.midpoint(8, 1);
        ChannelState st2(s);
        CHECK(true_bler(s, st2, 1, 8) == doctest::Approx(0.5));
    }
    SUBCASE("saturation at the extremes") {
        s.snr.value_db = 80.0;
        ChannelState hi(s);
        CHECK(true_bler(s, hi, 1, 1) < 1e-9);
        s.snr.value_db = -60.0;
        ChannelState lo(s);
        CHECK(true_bler(s, lo, 1, 15) > 1.0 - 1e-9);
    }
    SUBCASE("monotone decreasing in sinr on a grid") {
        for (int rank = 1; rank <= 4; ++rank) {
            for (int cqi : {1, 7, 15}) {
                double prev = 2.0;
                const double mid = s.curve.midpoint(cqi, rank);
                for (double snr = -10.0; snr <= 45.0; snr += 1.0) {
                    s.snr.value_db = snr;
                    ChannelState g(s);
                    const double b = true_bler(s, g, rank, cqi);
                    CHECK(b <= prev);  // the logistic saturates flat in floats
                    if (std::abs(snr - mid) < 25.0) CHECK(b < prev);
                    prev = b;
                }
            }
        }
    }
    SUBCASE("midpoint grows with cqi and rank") {
        for (int c = 2; c <= 15; ++c)
            CHECK(s.curve.midpoint(c, 1) > s.curve.midpoint(c - 1, 1));
        for (int r = 2; r <= 4; ++r) CHECK(s.curve.midpoint(5, r) > s.curve.midpoint(5, r - 1));
    }
}

TEST_CASE("degenerate blers produce pure ack or pure nack periods") {
    ScenarioSpec s = tiny_constant_scenario();
    const link::CqiTable table = link::CqiTable::standard();
    SUBCASE("bler zero") {
        s.snr.value_db = 90.0;
        ChannelState st(s);
        const link::PeriodOutcome o = simulate_period(s, st, 1, 1, table);
        CHECK(o.n_nack == 0);
        CHECK(o.empirical_bler == 0.0);
    }
    SUBCASE("bler one") {
        s.snr.value_db = -90.0;
        ChannelState st(s);
        const link::PeriodOutcome o = simulate_period(s, st, 4, 15, table);
        CHECK(o.n_ack == 0);
        CHECK(o.empirical_bler == 1.0);
        CHECK(o.throughput_bits == 0.0);
    }
}

TEST_CASE("empirical bler concentrates around the hidden truth") {
    ScenarioSpec s = tiny_constant_scenario();
    s.tx_per_period = 10000;
    s.doppler_hz = 0.0;  // no hidden penalty, the sinr equals the snr
    // aim the hidden bler at 0.3: sinr - mid = ln(7/3) at slope 1
    s.snr.value_db = s.curve.midpoint(8, 1) + std::log(0.7 / 0.3);
    ChannelState st(s);
    CHECK(true_bler(s, st, 1, 8) == doctest::Approx(0.3).epsilon(1e-9));
    const link::PeriodOutcome o = simulate_period(s, st, 1, 8, link::CqiTable::standard());
    CHECK(o.empirical_bler > 0.285);
    CHECK(o.empirical_bler < 0.315);
}

TEST_CASE("an empty shift schedule keeps parameters constant") {
    const ScenarioSpec s = tiny_constant_scenario();
    const EffectiveParams p0 = apply_shift(s, 0);
    const EffectiveParams p9 = apply_shift(s, 99);
    CHECK(p0.curve.midpoint_base_db == p9.curve.midpoint_base_db);
    CHECK(p0.snr.value_db == p9.snr.value_db);
    CHECK(p0.doppler_hz == p9.doppler_hz);
}

TEST_CASE("a single shift applies exactly from its period onward") {
    ScenarioSpec s = tiny_constant_scenario();
    ShiftOverride sh;
    sh.from_period = 50;
    sh.midpoint_base_db = 7.0;
    s.shifts.push_back(sh);
    CHECK(apply_shift(s, 49).curve.midpoint_base_db == s.curve.midpoint_base_db);
    CHECK(apply_shift(s, 50).curve.midpoint_base_db == 7.0);
    CHECK(apply_shift(s, 99).curve.midpoint_base_db == 7.0);
}

TEST_CASE("overlapping shift entries are rejected") {
    ScenarioSpec s = tiny_constant_scenario();
    ShiftOverride a, b;
    a.from_period = 10;
    b.from_period = 10;
    s.shifts = {a, b};
    CHECK_THROWS_AS(s.validate(), ConfigError);
}

TEST_CASE("scenario validation rejects bad parameters") {
    ScenarioSpec s = tiny_constant_scenario();
    s.duration = 0;
    CHECK_THROWS_AS(s.validate(), ConfigError);
    s = tiny_constant_scenario();
    s.tx_per_period = 0;
    CHECK_THROWS_AS(s.validate(), ConfigError);
    s = tiny_constant_scenario();
    s.curve.slope_per_db = 0.0;
    CHECK_THROWS_AS(s.validate(), ConfigError);
    s = tiny_constant_scenario();
    s.csi_rs_period_ms = 20;
    CHECK_THROWS_AS(s.validate(), ConfigError);
}

TEST_CASE("canned scenarios parse back from their config text") {
    for (const std::string name : {"S0", "S1", "S2"}) {
        const ScenarioSpec s = ScenarioSpec::canned(name);
        const ScenarioSpec back = ScenarioSpec::from_config(io::ConfigMap::parse(s.to_config_text()));
        CHECK(back.name == s.name);
        CHECK(back.duration == s.duration);
        CHECK(back.seed == s.seed);
        CHECK(back.shifts.size() == s.shifts.size());
        CHECK(back.curve.midpoint_base_db == s.curve.midpoint_base_db);
        CHECK(back.to_config_text() == s.to_config_text());
    }
    CHECK_THROWS_AS(ScenarioSpec::canned("S9"), ConfigError);
}

TEST_CASE("ramp trajectories sweep their range cyclically") {
    SnrTrajectory t;
    t.kind = SnrTrajectory::Kind::ramp;
    t.from_db = 0.0;
    t.to_db = 12.0;
    t.cycle_periods = 400;
    CHECK(t.at(0) == 0.0);
    CHECK(t.at(200) == doctest::Approx(6.0));
    CHECK(t.at(400) == 0.0);
    CHECK(t.at(600) == doctest::Approx(6.0));
}

TEST_CASE("symbols per period account for dmrs overhead") {
    ScenarioSpec s = tiny_constant_scenario();
    s.csi_rs_period_ms = 80;
    s.n_dmrs_symbols = 2;
    CHECK(symbols_per_period(s) == 160 * 12);
}
