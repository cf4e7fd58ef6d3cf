#include "lighttune/env_sim.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "lighttune/errors.hpp"

namespace lighttune::sim {

double correlation_penalty_db(Correlation c) {
    switch (c) {
        case Correlation::low: return 0.0;
        case Correlation::medium: return 3.0;
        case Correlation::high: return 6.0;
    }
    return 0.0;
}

namespace {

Correlation correlation_from_string(const std::string& s) {
    if (s == "low") return Correlation::low;
    if (s == "medium") return Correlation::medium;
    if (s == "high") return Correlation::high;
    throw ConfigError("unknown correlation '" + s + "'");
}

std::string correlation_to_string(Correlation c) {
    switch (c) {
        case Correlation::low: return "low";
        case Correlation::medium: return "medium";
        case Correlation::high: return "high";
    }
    return "low";
}

}  // namespace

double SnrTrajectory::at(long period) const {
    switch (kind) {
        case Kind::constant:
            return value_db;
        case Kind::ramp: {
            const long pos = period % cycle_periods;
            return from_db + (to_db - from_db) * static_cast<double>(pos) /
                                 static_cast<double>(cycle_periods);
        }
        case Kind::piecewise: {
            double v = points.empty() ? value_db : points.front().second;
            for (const auto& [p, val] : points) {
                if (p <= period) v = val;
            }
            return v;
        }
    }
    return value_db;
}

void ScenarioSpec::validate() const {
    if (duration < 1) throw ConfigError("scenario duration must be >= 1");
    if (tx_per_period < 1) throw ConfigError("tx_per_period must be >= 1");
    if (!(curve.slope_per_db > 0.0)) throw ConfigError("logistic slope must be > 0");
    if (csi_rs_period_ms != 10 && csi_rs_period_ms != 40 && csi_rs_period_ms != 80)
        throw ConfigError("csi_rs_period_ms must be one of 10, 40, 80");
    if (r_max < 1 || r_max > 8) throw ConfigError("r_max must be in 1..8");
    if (n_rbs < 1) throw ConfigError("n_rbs must be >= 1");
    if (n_dmrs_symbols < 1 || n_dmrs_symbols > 13)
        throw ConfigError("n_dmrs_symbols must be in 1..13");
    if (snr.kind == SnrTrajectory::Kind::ramp && snr.cycle_periods < 1)
        throw ConfigError("snr ramp cycle must be >= 1");
    std::set<long> starts;
    for (const ShiftOverride& s : shifts) {
        if (s.from_period < 0) throw ConfigError("shift period must be >= 0");
        if (!starts.insert(s.from_period).second)
            throw ConfigError("overlapping shift entries at period " +
                              std::to_string(s.from_period));
    }
}

EffectiveParams apply_shift(const ScenarioSpec& spec, long period) {
    EffectiveParams p;
    p.snr = spec.snr;
    p.curve = spec.curve;
    p.correlation = spec.correlation;
    p.doppler_hz = spec.doppler_hz;
    p.delay_spread_ns = spec.delay_spread_ns;

    std::vector<const ShiftOverride*> active;
    for (const ShiftOverride& s : spec.shifts) {
        if (s.from_period <= period) active.push_back(&s);
    }
    std::sort(active.begin(), active.end(),
              [](const ShiftOverride* a, const ShiftOverride* b) {
                  return a->from_period < b->from_period;
              });
    for (const ShiftOverride* s : active) {
        if (s->snr) p.snr = *s->snr;
        if (s->midpoint_base_db) p.curve.midpoint_base_db = *s->midpoint_base_db;
        if (s->slope_per_db) p.curve.slope_per_db = *s->slope_per_db;
        if (s->rank_step_db) p.curve.rank_step_db = *s->rank_step_db;
        if (s->correlation) p.correlation = *s->correlation;
        if (s->doppler_hz) p.doppler_hz = *s->doppler_hz;
        if (s->delay_spread_ns) p.delay_spread_ns = *s->delay_spread_ns;
    }
    return p;
}

ChannelState::ChannelState(const ScenarioSpec& spec)
    : duration_(spec.duration), rng_(spec.seed) {
    spec.validate();
}

void ChannelState::advance() { ++period_; }

void ChannelState::push_history(double pdsch_snr_db) {
    history_.push_back(pdsch_snr_db);
    if (history_.size() > 3) history_.erase(history_.begin());
}

double effective_sinr_db(const EffectiveParams& params, long period) {
    return params.snr.at(period) - correlation_penalty_db(params.correlation) -
           params.curve.doppler_penalty_db_per_hz * params.doppler_hz;
}

link::LinkFeatures gen_features(const ScenarioSpec& spec, ChannelState& state) {
    if (state.done()) throw EndOfStreamError("scenario exhausted");
    const EffectiveParams params = apply_shift(spec, state.period());
    const double snr_true = params.snr.at(state.period());

    link::LinkFeatures f;
    f.csi_rs_snr_db = snr_true + state.rng().normal(0.0, spec.obs_noise_db);
    const double sinr_for_capacity =
        f.csi_rs_snr_db - correlation_penalty_db(params.correlation);
    f.csi_rs_capacity = static_cast<double>(spec.r_max) *
                        std::log2(1.0 + std::pow(10.0, sinr_for_capacity / 10.0));
    f.delay_spread_ns = params.delay_spread_ns + state.rng().normal(0.0, spec.delay_jitter_ns);
    f.doppler_hz = params.doppler_hz + state.rng().normal(0.0, spec.doppler_jitter_hz);
    f.pdsch_snr_db = snr_true + state.rng().normal(0.0, spec.obs_noise_db);

    const std::vector<double>& hist = state.snr_history();
    for (std::size_t k = 0; k < 3; ++k) {
        // newest first; warm-up repeats the current observation
        if (k < hist.size())
            f.pdsch_snr_hist_db[k] = hist[hist.size() - 1 - k];
        else
            f.pdsch_snr_hist_db[k] = f.pdsch_snr_db;
    }
    f.ri = 1;
    f.cqi = 1;
    f.n_rbs = spec.n_rbs;
    f.n_dmrs_symbols = spec.n_dmrs_symbols;
    return f;
}

double true_bler_at(const EffectiveParams& params, long period, int rank, int cqi) {
    const double sinr_eff = effective_sinr_db(params, period);
    const double mid = params.curve.midpoint(cqi, rank);
    // logistic sigma(-slope (sinr - mid)): 0.5 at the midpoint, 0 at high SINR
    const double u = params.curve.slope_per_db * (sinr_eff - mid);
    if (u >= 0.0) {
        const double e = std::exp(-u);
        return e / (1.0 + e);
    }
    return 1.0 / (1.0 + std::exp(u));
}

double true_bler(const ScenarioSpec& spec, const ChannelState& state, int rank, int cqi) {
    if (rank < 1 || rank > spec.r_max) throw InputError("rank out of range");
    if (cqi < 1) throw InputError("cqi out of range");
    return true_bler_at(apply_shift(spec, state.period()), state.period(), rank, cqi);
}

long symbols_per_period(const ScenarioSpec& spec) {
    const long slots = 2L * spec.csi_rs_period_ms;  // 30 kHz SCS
    return slots * (14L - spec.n_dmrs_symbols);
}

link::PeriodOutcome simulate_period(const ScenarioSpec& spec, ChannelState& state, int rank,
                                    int cqi, const link::CqiTable& table) {
    const double bler = true_bler(spec, state, rank, cqi);
    link::PeriodOutcome out;
    for (int t = 0; t < spec.tx_per_period; ++t) {
        if (state.rng().bernoulli(bler))
            ++out.n_nack;
        else
            ++out.n_ack;
    }
    out.empirical_bler = link::empirical_bler(out.n_ack, out.n_nack);
    out.throughput_bits =
        link::throughput(out, rank, cqi, table, spec.n_rbs, symbols_per_period(spec));
    return out;
}

ScenarioSpec ScenarioSpec::canned(const std::string& name) {
    ScenarioSpec s;
    s.name = name;
    s.seed = 1;
    s.snr.kind = SnrTrajectory::Kind::ramp;
    s.snr.from_db = 0.0;
    s.snr.to_db = 12.0;
    s.snr.cycle_periods = 400;
    s.doppler_hz = 10.0;
    s.delay_spread_ns = 30.0;
    s.correlation = Correlation::low;
    s.duration = 20000;

    if (name == "S0") {
        s.duration = 50000;
        return s;
    }
    if (name == "S1") {
        // single shift into a wider, higher SNR range over an unseen,
        // harder channel response
        ShiftOverride shift;
        shift.from_period = 1000;
        SnrTrajectory post;
        post.kind = SnrTrajectory::Kind::ramp;
        post.from_db = 12.0;
        post.to_db = 40.0;
        post.cycle_periods = 400;
        shift.snr = post;
        shift.midpoint_base_db = 6.0;
        shift.doppler_hz = 30.0;
        s.shifts.push_back(shift);
        return s;
    }
    if (name == "S2") {
        // BLER-curve shift only: same SNR range, new channel profile
        ShiftOverride shift;
        shift.from_period = 1000;
        shift.midpoint_base_db = 6.0;
        shift.slope_per_db = 0.6;
        shift.delay_spread_ns = 200.0;
        s.shifts.push_back(shift);
        return s;
    }
    throw ConfigError("unknown canned scenario '" + name + "'");
}

namespace {

SnrTrajectory snr_from_config(const io::ConfigMap& cfg, const std::string& section,
                              const SnrTrajectory& base) {
    SnrTrajectory s = base;
    const std::string kind = cfg.get_or(section, "snr_kind", "");
    if (kind == "constant")
        s.kind = SnrTrajectory::Kind::constant;
    else if (kind == "ramp")
        s.kind = SnrTrajectory::Kind::ramp;
    else if (kind == "piecewise")
        s.kind = SnrTrajectory::Kind::piecewise;
    else if (!kind.empty())
        throw ConfigError("unknown snr_kind '" + kind + "'");
    s.value_db = cfg.get_double(section, "snr_value", s.value_db);
    s.from_db = cfg.get_double(section, "snr_from", s.from_db);
    s.to_db = cfg.get_double(section, "snr_to", s.to_db);
    s.cycle_periods = cfg.get_int(section, "snr_cycle", s.cycle_periods);
    if (cfg.has(section, "snr_points")) {
        s.points.clear();
        std::istringstream in(cfg.get(section, "snr_points"));
        std::string tok;
        while (std::getline(in, tok, ',')) {
            const std::size_t colon = tok.find(':');
            if (colon == std::string::npos)
                throw ConfigError("snr_points entries must be period:value");
            s.points.emplace_back(std::stol(tok.substr(0, colon)),
                                  std::stod(tok.substr(colon + 1)));
        }
    }
    return s;
}

const std::set<std::string> kScenarioKeys = {
    "name",        "duration",     "csi_rs_period_ms", "snr_kind",
    "snr_value",   "snr_from",     "snr_to",           "snr_cycle",
    "snr_points",  "doppler_hz",   "delay_spread_ns",  "correlation",
    "mid_base_db", "cqi_step_db",  "rank_step_db",     "slope_per_db",
    "doppler_penalty_db_per_hz",   "tx_per_period",    "n_rbs",
    "n_dmrs_symbols", "r_max",     "obs_noise_db",     "delay_jitter_ns",
    "doppler_jitter_hz", "seed"};

const std::set<std::string> kShiftKeys = {
    "period",      "snr_kind",  "snr_value",   "snr_from",        "snr_to",
    "snr_cycle",   "snr_points", "mid_base_db", "slope_per_db",   "rank_step_db",
    "correlation", "doppler_hz", "delay_spread_ns"};

}  // namespace

ScenarioSpec ScenarioSpec::from_config(const io::ConfigMap& cfg) {
    ScenarioSpec s;
    if (cfg.has("scenario", "name")) {
        const std::string name = cfg.get("scenario", "name");
        if (name == "S0" || name == "S1" || name == "S2") s = canned(name);
        s.name = name;
    }
    for (const auto& e : cfg.entries()) {
        if (e.section == "scenario") {
            if (kScenarioKeys.count(e.key) == 0)
                throw ConfigError("unknown key '" + e.key + "' in section [scenario]");
        } else if (e.section.rfind("shift.", 0) == 0) {
            if (kShiftKeys.count(e.key) == 0)
                throw ConfigError("unknown key '" + e.key + "' in section [" + e.section + "]");
        }
    }

    s.duration = cfg.get_int("scenario", "duration", s.duration);
    s.csi_rs_period_ms = static_cast<int>(cfg.get_int("scenario", "csi_rs_period_ms",
                                                      s.csi_rs_period_ms));
    s.snr = snr_from_config(cfg, "scenario", s.snr);
    s.doppler_hz = cfg.get_double("scenario", "doppler_hz", s.doppler_hz);
    s.delay_spread_ns = cfg.get_double("scenario", "delay_spread_ns", s.delay_spread_ns);
    if (cfg.has("scenario", "correlation"))
        s.correlation = correlation_from_string(cfg.get("scenario", "correlation"));
    s.curve.midpoint_base_db = cfg.get_double("scenario", "mid_base_db",
                                              s.curve.midpoint_base_db);
    s.curve.cqi_step_db = cfg.get_double("scenario", "cqi_step_db", s.curve.cqi_step_db);
    s.curve.rank_step_db = cfg.get_double("scenario", "rank_step_db", s.curve.rank_step_db);
    s.curve.slope_per_db = cfg.get_double("scenario", "slope_per_db", s.curve.slope_per_db);
    s.curve.doppler_penalty_db_per_hz =
        cfg.get_double("scenario", "doppler_penalty_db_per_hz",
                       s.curve.doppler_penalty_db_per_hz);
    s.tx_per_period = static_cast<int>(cfg.get_int("scenario", "tx_per_period",
                                                   s.tx_per_period));
    s.n_rbs = static_cast<int>(cfg.get_int("scenario", "n_rbs", s.n_rbs));
    s.n_dmrs_symbols = static_cast<int>(cfg.get_int("scenario", "n_dmrs_symbols",
                                                    s.n_dmrs_symbols));
    s.r_max = static_cast<int>(cfg.get_int("scenario", "r_max", s.r_max));
    s.obs_noise_db = cfg.get_double("scenario", "obs_noise_db", s.obs_noise_db);
    s.delay_jitter_ns = cfg.get_double("scenario", "delay_jitter_ns", s.delay_jitter_ns);
    s.doppler_jitter_hz = cfg.get_double("scenario", "doppler_jitter_hz", s.doppler_jitter_hz);
    s.seed = static_cast<std::uint64_t>(cfg.get_int("scenario", "seed",
                                                    static_cast<long long>(s.seed)));

    std::vector<std::string> shift_sections;
    for (const std::string& sec : cfg.sections()) {
        if (sec.rfind("shift.", 0) == 0) shift_sections.push_back(sec);
    }
    if (!shift_sections.empty()) s.shifts.clear();
    for (const std::string& sec : shift_sections) {
        ShiftOverride sh;
        if (!cfg.has(sec, "period"))
            throw ConfigError("section [" + sec + "] needs a period key");
        sh.from_period = cfg.get_int(sec, "period", 0);
        if (cfg.has(sec, "snr_kind") || cfg.has(sec, "snr_value") || cfg.has(sec, "snr_from") ||
            cfg.has(sec, "snr_to") || cfg.has(sec, "snr_cycle") || cfg.has(sec, "snr_points"))
            sh.snr = snr_from_config(cfg, sec, s.snr);
        if (cfg.has(sec, "mid_base_db")) sh.midpoint_base_db = cfg.get_double(sec, "mid_base_db", 0);
        if (cfg.has(sec, "slope_per_db")) sh.slope_per_db = cfg.get_double(sec, "slope_per_db", 0);
        if (cfg.has(sec, "rank_step_db")) sh.rank_step_db = cfg.get_double(sec, "rank_step_db", 0);
        if (cfg.has(sec, "correlation"))
            sh.correlation = correlation_from_string(cfg.get(sec, "correlation"));
        if (cfg.has(sec, "doppler_hz")) sh.doppler_hz = cfg.get_double(sec, "doppler_hz", 0);
        if (cfg.has(sec, "delay_spread_ns"))
            sh.delay_spread_ns = cfg.get_double(sec, "delay_spread_ns", 0);
        s.shifts.push_back(sh);
    }
    s.validate();
    return s;
}

namespace {

void snr_to_text(std::ostringstream& out, const SnrTrajectory& s) {
    switch (s.kind) {
        case SnrTrajectory::Kind::constant:
            out << "snr_kind = constant\n";
            out << "snr_value = " << io::csv_format(s.value_db) << "\n";
            break;
        case SnrTrajectory::Kind::ramp:
            out << "snr_kind = ramp\n";
            out << "snr_from = " << io::csv_format(s.from_db) << "\n";
            out << "snr_to = " << io::csv_format(s.to_db) << "\n";
            out << "snr_cycle = " << s.cycle_periods << "\n";
            break;
        case SnrTrajectory::Kind::piecewise: {
            out << "snr_kind = piecewise\n";
            out << "snr_points = ";
            for (std::size_t i = 0; i < s.points.size(); ++i) {
                if (i) out << ",";
                out << s.points[i].first << ":" << io::csv_format(s.points[i].second);
            }
            out << "\n";
            break;
        }
    }
}

}  // namespace

std::string ScenarioSpec::to_config_text() const {
    std::ostringstream out;
    out << "[scenario]\n";
    out << "name = " << name << "\n";
    out << "duration = " << duration << "\n";
    out << "csi_rs_period_ms = " << csi_rs_period_ms << "\n";
    snr_to_text(out, snr);
    out << "doppler_hz = " << io::csv_format(doppler_hz) << "\n";
    out << "delay_spread_ns = " << io::csv_format(delay_spread_ns) << "\n";
    out << "correlation = " << correlation_to_string(correlation) << "\n";
    out << "mid_base_db = " << io::csv_format(curve.midpoint_base_db) << "\n";
    out << "cqi_step_db = " << io::csv_format(curve.cqi_step_db) << "\n";
    out << "rank_step_db = " << io::csv_format(curve.rank_step_db) << "\n";
    out << "slope_per_db = " << io::csv_format(curve.slope_per_db) << "\n";
    out << "doppler_penalty_db_per_hz = " << io::csv_format(curve.doppler_penalty_db_per_hz)
        << "\n";
    out << "tx_per_period = " << tx_per_period << "\n";
    out << "n_rbs = " << n_rbs << "\n";
    out << "n_dmrs_symbols = " << n_dmrs_symbols << "\n";
    out << "r_max = " << r_max << "\n";
    out << "obs_noise_db = " << io::csv_format(obs_noise_db) << "\n";
    out << "delay_jitter_ns = " << io::csv_format(delay_jitter_ns) << "\n";
    out << "doppler_jitter_hz = " << io::csv_format(doppler_jitter_hz) << "\n";
    out << "seed = " << seed << "\n";
    for (std::size_t i = 0; i < shifts.size(); ++i) {
        const ShiftOverride& sh = shifts[i];
        out << "\n[shift." << i << "]\n";
        out << "period = " << sh.from_period << "\n";
        if (sh.snr) snr_to_text(out, *sh.snr);
        if (sh.midpoint_base_db)
            out << "mid_base_db = " << io::csv_format(*sh.midpoint_base_db) << "\n";
        if (sh.slope_per_db) out << "slope_per_db = " << io::csv_format(*sh.slope_per_db) << "\n";
        if (sh.rank_step_db) out << "rank_step_db = " << io::csv_format(*sh.rank_step_db) << "\n";
        if (sh.correlation) out << "correlation = " << correlation_to_string(*sh.correlation) << "\n";
        if (sh.doppler_hz) out << "doppler_hz = " << io::csv_format(*sh.doppler_hz) << "\n";
        if (sh.delay_spread_ns)
            out << "delay_spread_ns = " << io::csv_format(*sh.delay_spread_ns) << "\n";
    }
    return out.str();
}

}  // namespace lighttune::sim
