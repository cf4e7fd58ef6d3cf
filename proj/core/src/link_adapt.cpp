#include "lighttune/link_adapt.hpp"

#include <cmath>
#include <sstream>

#include "lighttune/errors.hpp"

namespace lighttune::link {

CqiTable::CqiTable(std::vector<CqiEntry> entries) : entries_(std::move(entries)) {
    if (entries_.empty()) throw InputError("CQI table is empty");
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        if (entries_[i].index != static_cast<int>(i) + entries_.front().index)
            throw InputError("CQI indices must be contiguous");
        if (entries_[i].spectral_efficiency <= 0.0)
            throw InputError("CQI spectral efficiency must be positive");
        if (i > 0 &&
            entries_[i].spectral_efficiency <= entries_[i - 1].spectral_efficiency)
            throw InputError("CQI spectral efficiency must be strictly increasing");
    }
}

CqiTable CqiTable::standard() {
    // 4-bit CQI entries: modulation order, code rate x 1024, efficiency
    struct Row {
        int qm;
        int rate1024;
        double se;
    };
    static const Row rows[15] = {
        {2, 78, 0.1523},  {2, 120, 0.2344}, {2, 193, 0.3770}, {2, 308, 0.6016},
        {2, 449, 0.8770}, {2, 602, 1.1758}, {4, 378, 1.4766}, {4, 490, 1.9141},
        {4, 616, 2.4063}, {6, 466, 2.7305}, {6, 567, 3.3223}, {6, 666, 3.9023},
        {6, 772, 4.5234}, {6, 873, 5.1152}, {6, 948, 5.5547}};
    std::vector<CqiEntry> entries;
    entries.reserve(15);
    for (int i = 0; i < 15; ++i) {
        entries.push_back(CqiEntry{i + 1, rows[i].qm, rows[i].rate1024 / 1024.0, rows[i].se});
    }
    return CqiTable(std::move(entries));
}

CqiTable CqiTable::from_file(const std::string& path) {
    std::istringstream in(io::read_text_file(path));
    std::string line;
    std::vector<CqiEntry> entries;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream row(line);
        CqiEntry e;
        if (!(row >> e.index >> e.modulation_order >> e.code_rate >> e.spectral_efficiency))
            throw ParseError("malformed CQI table row", line_no);
        entries.push_back(e);
    }
    return CqiTable(std::move(entries));
}

void CqiTable::save(const std::string& path) const {
    std::ostringstream out;
    out << "# cqi q_m code_rate se (v1)\n";
    for (const CqiEntry& e : entries_) {
        out << e.index << ' ' << e.modulation_order << ' ' << io::csv_format(e.code_rate) << ' '
            << io::csv_format(e.spectral_efficiency) << '\n';
    }
    io::write_text_file(path, out.str());
}

const CqiEntry& CqiTable::entry(int cqi) const {
    if (cqi < min_cqi() || cqi > max_cqi())
        throw InputError("CQI index " + std::to_string(cqi) + " outside the table");
    return entries_[static_cast<std::size_t>(cqi - min_cqi())];
}

double empirical_bler(long n_ack, long n_nack) {
    if (n_ack < 0 || n_nack < 0) throw InputError("ACK/NACK counts must be >= 0");
    if (n_ack + n_nack == 0)
        throw InputError("no transmissions in the period, BLER undefined");
    return static_cast<double>(n_nack) / static_cast<double>(n_ack + n_nack);
}

double prediction_error(double p_hat, double p) {
    if (!(p_hat >= 0.0 && p_hat <= 1.0) || !(p >= 0.0 && p <= 1.0))
        throw InputError("BLER values must lie in [0, 1]");
    return std::abs(p_hat - p);
}

double bler_predict(const MlpModel& model, const LinkFeatures& features, const LabelSet& classes,
                    const io::FeatureScaler& scaler, MacCounter* mac) {
    const std::array<double, 12> raw = features.flatten();
    const std::vector<double> x = scaler.apply(raw);
    std::vector<double> z(x);
    z.push_back(0.0);

    double g_max = -1.0;
    double p_best = 0.0;
    for (std::size_t i = 0; i < classes.size(); ++i) {
        z.back() = classes.value(i);
        const LayerActivations acts = forward_pass(model, z, mac);
        double g = 0.0;
        for (double h : acts.output()) g += h * h;
        if (g > g_max) {
            g_max = g;
            p_best = classes.value(i);
        }
    }
    return p_best;
}

OllaState OllaState::coupled(double step_up_db, double target_bler) {
    if (!(step_up_db > 0.0)) throw InputError("OLLA step_up must be > 0");
    if (!(target_bler > 0.0 && target_bler < 1.0))
        throw InputError("OLLA target BLER must be in (0, 1)");
    OllaState s;
    s.step_up_db = step_up_db;
    s.step_down_db = step_up_db * target_bler / (1.0 - target_bler);
    s.target_bler = target_bler;
    return s;
}

void olla_step(OllaState& state, bool ack) {
    if (ack)
        state.offset_db -= state.step_down_db;
    else
        state.offset_db += state.step_up_db;
}

double throughput(const PeriodOutcome& outcome, int rank, int cqi, const CqiTable& table,
                  int n_rbs, long symbols_per_period) {
    const long total = outcome.n_ack + outcome.n_nack;
    if (total == 0) return 0.0;
    const double ack_fraction = static_cast<double>(outcome.n_ack) / static_cast<double>(total);
    return ack_fraction * static_cast<double>(rank) * table.se(cqi) *
           static_cast<double>(n_rbs) * 12.0 * static_cast<double>(symbols_per_period);
}

int se_rank_select(const std::vector<int>& cqi_per_rank, const CqiTable& table, int r_max) {
    if (r_max < 1) throw InputError("r_max must be >= 1");
    if (static_cast<int>(cqi_per_rank.size()) < r_max + 1)
        throw InputError("cqi_per_rank must have entries for ranks 1..r_max");
    int best_rank = 0;
    double best_se = -1.0;
    for (int i = 1; i <= r_max; ++i) {
        const double se = static_cast<double>(i) * table.se(cqi_per_rank[i]);
        if (se > best_se) {
            best_se = se;
            best_rank = i;
        }
    }
    return best_rank;
}

FaMdRates fa_md_rates(const std::vector<std::pair<double, double>>& log, double tau_bler) {
    if (log.empty()) throw InputError("empty prediction log");
    long fa = 0, below = 0, md = 0, above = 0;
    for (const auto& [p_hat, p] : log) {
        if (p < tau_bler) {
            ++below;
            if (p_hat >= tau_bler) ++fa;
        } else {
            ++above;
            if (p_hat < tau_bler) ++md;
        }
    }
    FaMdRates out;
    if (below > 0) out.p_fa = static_cast<double>(fa) / static_cast<double>(below);
    if (above > 0) out.p_md = static_cast<double>(md) / static_cast<double>(above);
    return out;
}

namespace {

/// Shared post-transmission tail of Alg. CQI-Tune / RI-CQI-Tune: empirical
/// BLER, trigger evaluation and the single fine-tuning call.
void finish_period(MlpModel& model, FineTuneState& state, LinkFeatures& features,
                   const PeriodOutcome& fb, std::optional<double> reused_prediction,
                   const FineTuneConfig& finetune, const LabelSet& classes,
                   const io::FeatureScaler& scaler, TuneTelemetry& tel, MacCounter* mac) {
    if (fb.n_ack + fb.n_nack == 0) {
        tel.empty_period = true;  // skip error computation and fine-tuning
        return;
    }
    tel.p_empirical = empirical_bler(fb.n_ack, fb.n_nack);

    std::optional<double> p_hat = reused_prediction;
    if (!p_hat.has_value()) {
        p_hat = bler_predict(model, features, classes, scaler, mac);
        tel.total_predictions += 1;
    }
    tel.p_hat = p_hat;

    const std::vector<double> x = scaler.apply(features.flatten());
    const StepOutcome out = lighttune_step(model, x, tel.p_empirical, classes, finetune, state,
                                           p_hat, mac);
    tel.error = out.error;
    tel.triggered = out.triggered;
    tel.negative_label = out.negative_label;
}

}  // namespace

TuneTelemetry cqi_tune(MlpModel& model, FineTuneState& state, int cqi_in, LinkFeatures& features,
                       int cqi_min, double tau_bler, const FineTuneConfig& finetune,
                       const LabelSet& classes, const io::FeatureScaler& scaler,
                       const FeedbackFn& period_feedback, MacCounter* mac) {
    if (cqi_min < 1) throw InputError("cqi_min must be >= 1");
    if (cqi_min > cqi_in) throw InputError("cqi_min must not exceed the input CQI");
    if (!(tau_bler > 0.0 && tau_bler <= 1.0)) throw InputError("tau_bler must be in (0, 1]");

    TuneTelemetry tel;
    int cqi = cqi_in;
    std::optional<double> last_pred;

    while (cqi > cqi_min) {
        features.cqi = cqi;
        const double p_hat = bler_predict(model, features, classes, scaler, mac);
        ++tel.loop_predictions;
        last_pred = p_hat;
        if (p_hat < tau_bler) break;
        --cqi;
    }
    features.cqi = cqi;
    tel.cqi_out = cqi;
    tel.rank_out = features.ri;  // the RI selected by the baseline is kept
    tel.total_predictions = tel.loop_predictions;

    const PeriodOutcome fb = period_feedback(features.ri, cqi);
    finish_period(model, state, features, fb, last_pred, finetune, classes, scaler, tel, mac);
    return tel;
}

TuneTelemetry ri_cqi_tune(MlpModel& model, FineTuneState& state, int r_table,
                          const std::vector<int>& cqi_per_rank, LinkFeatures& features,
                          int cqi_min, double tau_bler, int r_max, const CqiTable& table,
                          const FineTuneConfig& finetune, const LabelSet& classes,
                          const io::FeatureScaler& scaler, const FeedbackFn& period_feedback,
                          MacCounter* mac) {
    if (r_table < 1 || r_table > r_max) throw InputError("baseline rank out of range");
    if (static_cast<int>(cqi_per_rank.size()) < r_max + 1)
        throw InputError("cqi_per_rank must have entries for ranks 1..r_max");
    if (cqi_min < 1) throw InputError("cqi_min must be >= 1");
    if (cqi_min > cqi_per_rank[r_table])
        throw InputError("cqi_min must not exceed the baseline CQI");
    if (!(tau_bler > 0.0 && tau_bler <= 1.0)) throw InputError("tau_bler must be in (0, 1]");

    const int r_low = (r_table + 1) / 2;
    const int r_high = std::min(r_low + 2, r_max);
    const int backoff_depth = cqi_per_rank[r_table] - cqi_min;

    TuneTelemetry tel;
    double se_max = -1.0;
    int r_sel = r_table;
    int cqi_sel = cqi_per_rank[r_table];
    std::optional<double> winner_pred;

    for (int i = r_low; i <= r_high; ++i) {
        int cqi_test = cqi_per_rank[i];
        const int floor_i = std::max(cqi_min, cqi_test - backoff_depth);
        std::optional<double> last_pred;
        while (cqi_test > floor_i) {
            features.ri = i;
            features.cqi = cqi_test;
            const double p_hat = bler_predict(model, features, classes, scaler, mac);
            ++tel.loop_predictions;
            last_pred = p_hat;
            if (p_hat < tau_bler) break;
            --cqi_test;
        }
        const double se = static_cast<double>(i) * table.se(cqi_test);
        if (se > se_max) {
            se_max = se;
            r_sel = i;
            cqi_sel = cqi_test;
            winner_pred = last_pred;
        }
    }

    features.ri = r_sel;
    features.cqi = cqi_sel;
    tel.rank_out = r_sel;
    tel.cqi_out = cqi_sel;
    tel.total_predictions = tel.loop_predictions;

    const PeriodOutcome fb = period_feedback(r_sel, cqi_sel);
    finish_period(model, state, features, fb, winner_pred, finetune, classes, scaler, tel, mac);
    return tel;
}

}  // namespace lighttune::link
