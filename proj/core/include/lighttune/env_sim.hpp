#pragma once

#include <optional>
#include <string>
#include <vector>

#include "lighttune/link_adapt.hpp"
#include "lighttune/rng.hpp"

namespace lighttune::sim {

enum class Correlation { low, medium, high };

double correlation_penalty_db(Correlation c);

/// SNR over time: a constant level, a repeating sawtooth sweep, or a
/// piecewise-constant schedule.
struct SnrTrajectory {
    enum class Kind { constant, ramp, piecewise };
    Kind kind = Kind::constant;
    double value_db = 10.0;                         // constant
    double from_db = 0.0, to_db = 12.0;             // ramp
    long cycle_periods = 500;                       // ramp
    std::vector<std::pair<long, double>> points;    // piecewise (period, dB)

    double at(long period) const;
};

/// Ground-truth logistic SINR->BLER family. The midpoint grows with the CQI
/// index and the rank, so higher spectral efficiency needs more SINR.
struct BlerCurve {
    double midpoint_base_db = 2.0;
    double cqi_step_db = 1.9;
    double rank_step_db = 3.0;
    double slope_per_db = 1.0;
    double doppler_penalty_db_per_hz = 0.02;

    double midpoint(int cqi, int rank) const {
        return midpoint_base_db + cqi_step_db * (cqi - 1) + rank_step_db * (rank - 1);
    }
};

/// Piecewise-constant parameter overrides applied from a period onward.
struct ShiftOverride {
    long from_period = 0;
    std::optional<SnrTrajectory> snr;
    std::optional<double> midpoint_base_db;
    std::optional<double> slope_per_db;
    std::optional<double> rank_step_db;
    std::optional<Correlation> correlation;
    std::optional<double> doppler_hz;
    std::optional<double> delay_spread_ns;
};

struct ScenarioSpec {
    std::string name = "custom";
    long duration = 1000;
    int csi_rs_period_ms = 80;
    SnrTrajectory snr;
    double doppler_hz = 10.0;
    double delay_spread_ns = 30.0;
    Correlation correlation = Correlation::low;
    BlerCurve curve;
    int tx_per_period = 50;
    int n_rbs = 106;
    int n_dmrs_symbols = 2;
    int r_max = 4;
    double obs_noise_db = 0.5;
    double delay_jitter_ns = 2.0;
    double doppler_jitter_hz = 0.5;
    std::vector<ShiftOverride> shifts;
    std::uint64_t seed = 1;

    void validate() const;

    /// Canned version-pinned scenarios: S0 (no shift), S1 (SNR-range shift
    /// plus channel-profile change), S2 (BLER-curve shift only).
    static ScenarioSpec canned(const std::string& name);
    static ScenarioSpec from_config(const io::ConfigMap& cfg);
    std::string to_config_text() const;
};

/// Parameters in effect at one period after applying the shift schedule.
struct EffectiveParams {
    SnrTrajectory snr;
    BlerCurve curve;
    Correlation correlation = Correlation::low;
    double doppler_hz = 10.0;
    double delay_spread_ns = 30.0;
};

/// Pure function of (spec, period).
EffectiveParams apply_shift(const ScenarioSpec& spec, long period);

/// Per-stream hidden state: period counter, RNG and the PDSCH SNR history.
/// Predictors only ever see LinkFeatures and ACK/NACK feedback.
class ChannelState {
public:
    explicit ChannelState(const ScenarioSpec& spec);

    long period() const { return period_; }
    bool done() const { return period_ >= duration_; }
    void advance();

    Rng& rng() { return rng_; }
    const std::vector<double>& snr_history() const { return history_; }
    void push_history(double pdsch_snr_db);

private:
    long period_ = 0;
    long duration_ = 0;
    Rng rng_;
    std::vector<double> history_;
};

/// Emits the 12 observable features for the current period. Deterministic
/// given (spec, seed); throws EndOfStreamError past the scenario duration.
link::LinkFeatures gen_features(const ScenarioSpec& spec, ChannelState& state);

/// Hidden-truth BLER of one (rank, cqi) decision at the current period.
double true_bler(const ScenarioSpec& spec, const ChannelState& state, int rank, int cqi);
double true_bler_at(const EffectiveParams& params, long period, int rank, int cqi);

/// Effective SINR after correlation and Doppler penalties.
double effective_sinr_db(const EffectiveParams& params, long period);

/// Draws tx_per_period Bernoulli NACK indicators from the hidden BLER and
/// accounts throughput for the decision.
link::PeriodOutcome simulate_period(const ScenarioSpec& spec, ChannelState& state, int rank,
                                    int cqi, const link::CqiTable& table);

/// PDSCH symbols available in one CSI-RS period (14 OFDM symbols per slot,
/// 2 slots per ms at 30 kHz subcarrier spacing, minus DMRS overhead).
long symbols_per_period(const ScenarioSpec& spec);

}  // namespace lighttune::sim
