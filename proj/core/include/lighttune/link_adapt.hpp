#pragma once

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "lighttune/data_io.hpp"
#include "lighttune/finetune.hpp"
#include "lighttune/mlp.hpp"

namespace lighttune::link {

/// The 12-feature UE observation vector plus the mutable RI/CQI decision
/// slots. flatten() yields the fixed feature order consumed by the predictor.
struct LinkFeatures {
    double csi_rs_snr_db = 0.0;
    double csi_rs_capacity = 0.0;
    double delay_spread_ns = 0.0;
    double doppler_hz = 0.0;
    double pdsch_snr_db = 0.0;
    std::array<double, 3> pdsch_snr_hist_db{0.0, 0.0, 0.0};
    int ri = 1;
    int cqi = 1;
    int n_rbs = 106;
    int n_dmrs_symbols = 2;

    std::array<double, 12> flatten() const {
        return {csi_rs_snr_db,
                csi_rs_capacity,
                delay_spread_ns,
                doppler_hz,
                pdsch_snr_db,
                pdsch_snr_hist_db[0],
                pdsch_snr_hist_db[1],
                pdsch_snr_hist_db[2],
                static_cast<double>(ri),
                static_cast<double>(cqi),
                static_cast<double>(n_rbs),
                static_cast<double>(n_dmrs_symbols)};
    }
};

/// 4-bit CQI table: modulation order, code rate and per-layer spectral
/// efficiency SE = Q_m * R, strictly increasing in the CQI index.
struct CqiEntry {
    int index = 0;
    int modulation_order = 0;
    double code_rate = 0.0;
    double spectral_efficiency = 0.0;
};

class CqiTable {
public:
    static CqiTable standard();
    static CqiTable from_file(const std::string& path);
    void save(const std::string& path) const;

    int min_cqi() const { return entries_.front().index; }
    int max_cqi() const { return entries_.back().index; }
    const CqiEntry& entry(int cqi) const;
    double se(int cqi) const { return entry(cqi).spectral_efficiency; }
    const std::vector<CqiEntry>& entries() const { return entries_; }

private:
    explicit CqiTable(std::vector<CqiEntry> entries);
    std::vector<CqiEntry> entries_;
};

/// Feedback of one CSI-RS period.
struct PeriodOutcome {
    long n_ack = 0;
    long n_nack = 0;
    double empirical_bler = 0.0;
    double throughput_bits = 0.0;
};

/// n_nack / (n_ack + n_nack); a period with zero transmissions is an error
/// (the caller skips error computation and fine-tuning for such periods).
double empirical_bler(long n_ack, long n_nack);

/// |p_hat - p| with both operands in [0, 1].
double prediction_error(double p_hat, double p);

/// Goodness-argmax over the quantized BLER classes, scanned in class order
/// with a strict improvement test (earliest class wins exact ties).
double bler_predict(const MlpModel& model, const LinkFeatures& features, const LabelSet& classes,
                    const io::FeatureScaler& scaler, MacCounter* mac = nullptr);

/// Outer-loop link adaptation offset state. step_down is coupled to step_up
/// through the target BLER: step_down = step_up * target / (1 - target).
struct OllaState {
    double offset_db = 0.0;
    double step_up_db = 0.5;
    double step_down_db = 0.5 / 9.0;
    double target_bler = 0.1;

    static OllaState coupled(double step_up_db, double target_bler);
};

/// One ACK/NACK update: NACK raises the offset by step_up, ACK lowers it by
/// step_down.
void olla_step(OllaState& state, bool ack);

/// Deterministic throughput proxy: ack fraction x rank x SE(cqi) x n_rbs x 12
/// subcarriers x symbols in the period. Zero transmissions give zero bits.
double throughput(const PeriodOutcome& outcome, int rank, int cqi, const CqiTable& table,
                  int n_rbs, long symbols_per_period);

/// Rank maximizing rank * SE(cqi_per_rank[rank]); ties take the smallest
/// rank. cqi_per_rank[i] holds the CQI for rank i (1-based, entries 1..r_max).
int se_rank_select(const std::vector<int>& cqi_per_rank, const CqiTable& table, int r_max);

struct FaMdRates {
    std::optional<double> p_fa;
    std::optional<double> p_md;
};

/// False alarm P(p_hat >= tau | p < tau) and missed detection
/// P(p_hat < tau | p >= tau) over a log of (prediction, truth) pairs.
/// Undefined denominators are reported as absent.
FaMdRates fa_md_rates(const std::vector<std::pair<double, double>>& log, double tau_bler);

using FeedbackFn = std::function<PeriodOutcome(int rank, int cqi)>;

/// Telemetry of one CQI-Tune / RI-CQI-Tune period.
struct TuneTelemetry {
    std::optional<double> p_hat;      // prediction used for the trigger
    double p_empirical = 0.0;
    double error = 0.0;
    bool triggered = false;
    bool empty_period = false;
    int rank_out = 1;
    int cqi_out = 1;
    int loop_predictions = 0;   // back-off loop predictions
    int total_predictions = 0;  // including a final-CQI prediction when needed
    std::optional<double> negative_label;
};

/// CQI back-off (candidate decrement while the predicted BLER reaches
/// tau_bler), one transmission feedback round, then a threshold-gated
/// LightTune update with the empirical BLER as ground truth. The RI is left
/// untouched. The prediction that justified the final candidate is reused as
/// the trigger prediction; a fresh prediction is made only when the loop
/// never ran.
TuneTelemetry cqi_tune(MlpModel& model, FineTuneState& state, int cqi_in, LinkFeatures& features,
                       int cqi_min, double tau_bler, const FineTuneConfig& finetune,
                       const LabelSet& classes, const io::FeatureScaler& scaler,
                       const FeedbackFn& period_feedback, MacCounter* mac = nullptr);

/// Joint RI/CQI selection over the rank window [ceil(r/2), min(ceil(r/2)+2,
/// r_max)]: per-rank CQI back-off, SE scoring, transmission with the winner
/// and one LightTune update. The per-rank back-off floor applies the same
/// back-off depth that cqi_min implies for the baseline rank, so each
/// candidate rank performs at most (cqi_per_rank[r] - cqi_min) predictions.
TuneTelemetry ri_cqi_tune(MlpModel& model, FineTuneState& state, int r_table,
                          const std::vector<int>& cqi_per_rank, LinkFeatures& features,
                          int cqi_min, double tau_bler, int r_max, const CqiTable& table,
                          const FineTuneConfig& finetune, const LabelSet& classes,
                          const io::FeatureScaler& scaler, const FeedbackFn& period_feedback,
                          MacCounter* mac = nullptr);

}  // namespace lighttune::link
