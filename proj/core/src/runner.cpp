#include "lighttune/runner.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>

#include "lighttune/errors.hpp"
#include "lighttune/goodness.hpp"

namespace lighttune::run {

std::string to_string(LinkAlgorithm a) {
    switch (a) {
        case LinkAlgorithm::olla: return "olla";
        case LinkAlgorithm::cqi_tune: return "cqi-tune";
        case LinkAlgorithm::ri_cqi_tune: return "ri-cqi-tune";
        case LinkAlgorithm::frozen: return "frozen";
    }
    return "?";
}

LinkAlgorithm algorithm_from_string(const std::string& s) {
    if (s == "olla") return LinkAlgorithm::olla;
    if (s == "cqi-tune") return LinkAlgorithm::cqi_tune;
    if (s == "ri-cqi-tune") return LinkAlgorithm::ri_cqi_tune;
    if (s == "frozen") return LinkAlgorithm::frozen;
    throw ConfigError("unknown algorithm '" + s + "'");
}

std::string to_string(UpdateVariant v) {
    switch (v) {
        case UpdateVariant::standard_adam: return "standard-adam";
        case UpdateVariant::one_step: return "one-step";
        case UpdateVariant::sign_update: return "sign-update";
    }
    return "?";
}

UpdateVariant variant_from_string(const std::string& s) {
    if (s == "standard-adam") return UpdateVariant::standard_adam;
    if (s == "one-step") return UpdateVariant::one_step;
    if (s == "sign-update") return UpdateVariant::sign_update;
    throw ConfigError("unknown variant '" + s + "'");
}

std::string to_string(NegativeSampling s) {
    return s == NegativeSampling::uniform ? "uniform" : "hard";
}

NegativeSampling sampling_from_string(const std::string& s) {
    if (s == "uniform") return NegativeSampling::uniform;
    if (s == "hard") return NegativeSampling::hard;
    throw ConfigError("unknown sampling strategy '" + s + "'");
}

std::string to_string(LossKind k) {
    return k == LossKind::softplus ? "softplus" : "quadratic";
}

LossKind loss_from_string(const std::string& s) {
    if (s == "softplus") return LossKind::softplus;
    if (s == "quadratic") return LossKind::quadratic;
    throw ConfigError("unknown loss '" + s + "'");
}

std::vector<AugmentedSample> make_link_dataset(const TrainRecipe& recipe,
                                               const io::FeatureScaler& scaler,
                                               const LabelSet& classes) {
    sim::ScenarioSpec spec = recipe.scenario;
    spec.duration = std::numeric_limits<long>::max();
    spec.seed = recipe.data_seed;
    sim::ChannelState state(spec);
    Rng decide(recipe.data_seed ^ 0x9e3779b97f4a7c15ull);
    const link::CqiTable table = link::CqiTable::standard();
    // data collection runs under a sane scheduling policy: the table rank,
    // dithered by one, and CQI candidates a few steps around the table choice
    // so the labels cover the whole BLER range
    const BaselineTable baseline = make_baseline_table(recipe.scenario, 0.5);

    // saturated outcomes dominate raw collection; cap each class so the mid
    // classes are represented
    const std::size_t class_cap =
        (recipe.samples * 3) / (2 * classes.size()) + 1;  // 1.5x the uniform share
    std::vector<std::size_t> class_counts(classes.size(), 0);

    std::vector<AugmentedSample> data;
    data.reserve(recipe.samples);
    const std::size_t max_attempts = recipe.samples * 60;
    std::size_t attempts = 0;
    std::vector<int> cqi_per_rank(static_cast<std::size_t>(spec.r_max) + 1, 1);
    while (data.size() < recipe.samples && attempts < max_attempts) {
        ++attempts;
        link::LinkFeatures f = sim::gen_features(spec, state);
        for (int i = 1; i <= spec.r_max; ++i)
            cqi_per_rank[static_cast<std::size_t>(i)] =
                baseline.cqi_for(f.csi_rs_snr_db, i, table.max_cqi());
        const int table_rank = link::se_rank_select(cqi_per_rank, table, spec.r_max);
        const int rank_dither = static_cast<int>(decide.index(3)) - 1;  // -1, 0, +1
        f.ri = std::clamp(table_rank + rank_dither, 1, spec.r_max);
        const int offset = static_cast<int>(decide.index(7)) - 3;  // -3 .. +3
        f.cqi = std::clamp(cqi_per_rank[static_cast<std::size_t>(f.ri)] + offset,
                           table.min_cqi(), table.max_cqi());
        const link::PeriodOutcome outcome =
            sim::simulate_period(spec, state, f.ri, f.cqi, table);
        state.push_history(f.pdsch_snr_db);
        state.advance();

        AugmentedSample s;
        s.label = io::quantize_bler(outcome.empirical_bler, classes);
        const std::size_t cls = classes.index_of(s.label);
        if (class_counts[cls] >= class_cap) continue;
        ++class_counts[cls];
        const auto raw = f.flatten();
        s.features = scaler.apply(raw);
        data.push_back(std::move(s));
    }
    return data;
}

BlerModelBundle train_bler_model(const TrainRecipe& recipe) {
    BlerModelBundle bundle;
    const std::vector<AugmentedSample> data =
        make_link_dataset(recipe, bundle.scaler, bundle.classes);
    MlpModel init = MlpModel::random_init(recipe.dims, recipe.train.seed);
    bundle.model = train_offline(std::move(init), data, bundle.classes, recipe.train);
    return bundle;
}

int BaselineTable::cqi_for(double sinr_db, int rank, int max_cqi) const {
    for (int c = max_cqi; c >= 1; --c) {
        if (curve.midpoint(c, rank) + margin_db + penalty_db <= sinr_db) return c;
    }
    return 1;
}

BaselineTable make_baseline_table(const sim::ScenarioSpec& train_env, double target_bler) {
    if (!(target_bler > 0.0 && target_bler < 1.0))
        throw InputError("target BLER must be in (0, 1)");
    BaselineTable t;
    t.curve = train_env.curve;
    t.penalty_db = sim::correlation_penalty_db(train_env.correlation) +
                   train_env.curve.doppler_penalty_db_per_hz * train_env.doppler_hz;
    t.margin_db = std::log(1.0 / target_bler - 1.0) / train_env.curve.slope_per_db;
    return t;
}

namespace {

void apply_olla_feedback(link::OllaState& olla, const link::PeriodOutcome& outcome) {
    for (long i = 0; i < outcome.n_nack; ++i) link::olla_step(olla, false);
    for (long i = 0; i < outcome.n_ack; ++i) link::olla_step(olla, true);
}

}  // namespace

LinkRunResult run_link_sim(const LinkRunConfig& config) {
    config.finetune.validate();
    const sim::ScenarioSpec& spec = config.scenario;

    BlerModelBundle local_bundle;
    const BlerModelBundle* bundle = config.pretrained;
    const bool needs_model = config.algorithm != LinkAlgorithm::olla;
    if (needs_model && bundle == nullptr) {
        local_bundle = train_bler_model(config.train);
        bundle = &local_bundle;
    }

    MlpModel model;
    FineTuneConfig ft = config.finetune;
    if (config.algorithm == LinkAlgorithm::frozen)
        ft.delta = std::numeric_limits<double>::infinity();  // trigger unreachable
    std::optional<FineTuneState> state;
    if (needs_model) {
        model = bundle->model;
        state.emplace(FineTuneState::make(model, ft));
    }

    const link::CqiTable table = link::CqiTable::standard();
    const BaselineTable baseline = make_baseline_table(config.train.scenario,
                                                       config.olla_target_bler);
    link::OllaState olla = link::OllaState::coupled(config.olla_step_up_db,
                                                    config.olla_target_bler);
    sim::ChannelState cs(spec);

    LinkRunResult result;
    result.rows.reserve(static_cast<std::size_t>(spec.duration));
    double mae_sum = 0.0;
    double tp_sum = 0.0, tp_mid = 0.0, tp_high = 0.0;

    std::vector<int> cqi_base(static_cast<std::size_t>(spec.r_max) + 1, 1);

    for (long period = 0; period < spec.duration; ++period) {
        link::LinkFeatures features = sim::gen_features(spec, cs);
        const double true_snr = sim::apply_shift(spec, period).snr.at(period);

        for (int i = 1; i <= spec.r_max; ++i)
            cqi_base[static_cast<std::size_t>(i)] =
                baseline.cqi_for(features.csi_rs_snr_db - olla.offset_db, i, table.max_cqi());
        const int r = link::se_rank_select(cqi_base, table, spec.r_max);

        MacCounter mac;
        PeriodRow row;
        row.period = period;
        row.algorithm = to_string(config.algorithm);
        row.snr_db = true_snr;

        link::PeriodOutcome outcome;
        if (config.algorithm == LinkAlgorithm::olla) {
            outcome = sim::simulate_period(spec, cs, r, cqi_base[r], table);
            row.rank = r;
            row.cqi = cqi_base[r];
        } else {
            features.ri = r;
            const int cqi_min = std::max(cqi_base[r] - config.cqi_min_delta, 1);
            bool captured = false;
            const link::FeedbackFn feedback = [&](int rank, int cqi) {
                outcome = sim::simulate_period(spec, cs, rank, cqi, table);
                captured = true;
                return outcome;
            };
            link::TuneTelemetry tel;
            if (config.algorithm == LinkAlgorithm::ri_cqi_tune) {
                tel = link::ri_cqi_tune(model, *state, r, cqi_base, features, cqi_min,
                                        config.tau_bler, spec.r_max, table, ft, bundle->classes,
                                        bundle->scaler, feedback, &mac);
            } else {
                tel = link::cqi_tune(model, *state, cqi_base[r], features, cqi_min,
                                     config.tau_bler, ft, bundle->classes, bundle->scaler,
                                     feedback, &mac);
            }
            if (!captured) throw NumericalError("period feedback was not requested");
            row.rank = tel.rank_out;
            row.cqi = tel.cqi_out;
            if (tel.p_hat.has_value()) {
                row.p_hat = *tel.p_hat;
                row.have_p_hat = true;
            }
            if (!tel.empty_period) {
                row.error = tel.error;
                row.have_error = tel.p_hat.has_value();
                row.triggered = tel.triggered;
            }
            if (!model.all_finite())
                throw NumericalError("model became non-finite at period " +
                                     std::to_string(period));
        }
        apply_olla_feedback(olla, outcome);

        row.p_empirical = outcome.empirical_bler;
        row.throughput_bits = outcome.throughput_bits;
        row.mac_count = mac.macs;

        result.trigger_log.push_back(row.triggered ? 1 : 0);
        if (row.have_p_hat) {
            result.prediction_log.emplace_back(row.p_hat, row.p_empirical);
            mae_sum += std::abs(row.p_hat - row.p_empirical);
            ++result.summary.mae_periods;
        }
        tp_sum += row.throughput_bits;
        if (true_snr >= config.mid_snr_lo_db && true_snr <= config.mid_snr_hi_db) {
            tp_mid += row.throughput_bits;
            ++result.summary.mid_snr_periods;
        }
        if (true_snr >= config.high_snr_db) {
            tp_high += row.throughput_bits;
            ++result.summary.high_snr_periods;
        }
        if (row.triggered) ++result.summary.triggers;
        result.summary.total_macs += mac.macs;
        result.summary.max_period_macs = std::max(result.summary.max_period_macs, mac.macs);

        result.rows.push_back(std::move(row));
        cs.push_history(features.pdsch_snr_db);
        cs.advance();
    }

    result.summary.periods = spec.duration;
    result.summary.mae = result.summary.mae_periods > 0
                             ? mae_sum / static_cast<double>(result.summary.mae_periods)
                             : std::numeric_limits<double>::quiet_NaN();
    result.summary.mean_throughput_bits =
        spec.duration > 0 ? tp_sum / static_cast<double>(spec.duration) : 0.0;
    result.summary.mean_throughput_mid_snr =
        result.summary.mid_snr_periods > 0
            ? tp_mid / static_cast<double>(result.summary.mid_snr_periods)
            : 0.0;
    result.summary.mean_throughput_high_snr =
        result.summary.high_snr_periods > 0
            ? tp_high / static_cast<double>(result.summary.high_snr_periods)
            : 0.0;
    if (!result.prediction_log.empty()) {
        const link::FaMdRates rates = link::fa_md_rates(result.prediction_log, config.tau_bler);
        result.summary.p_fa = rates.p_fa;
        result.summary.p_md = rates.p_md;
    }
    return result;
}

ConvergenceResult run_convergence(const ConvergenceConfig& config) {
    config.finetune.validate();
    const sim::ScenarioSpec& spec = config.scenario;

    BlerModelBundle local_bundle;
    const BlerModelBundle* bundle = config.pretrained;
    if (bundle == nullptr) {
        local_bundle = train_bler_model(config.train);
        bundle = &local_bundle;
    }

    MlpModel model = bundle->model;
    FineTuneState state = FineTuneState::make(model, config.finetune);
    const link::CqiTable table = link::CqiTable::standard();
    sim::ChannelState cs(spec);
    Rng explore(config.explore_seed);

    ConvergenceResult result;
    result.trigger_log.reserve(static_cast<std::size_t>(spec.duration));
    double err_sum = 0.0;

    for (long period = 0; period < spec.duration; ++period) {
        link::LinkFeatures f = sim::gen_features(spec, cs);
        f.ri = 1 + static_cast<int>(explore.index(static_cast<std::size_t>(spec.r_max)));
        f.cqi = 1 + static_cast<int>(explore.index(15));
        const link::PeriodOutcome outcome = sim::simulate_period(spec, cs, f.ri, f.cqi, table);

        const std::vector<double> x = bundle->scaler.apply(f.flatten());
        const StepOutcome out = lighttune_step(model, x, outcome.empirical_bler,
                                               bundle->classes, config.finetune, state);
        result.trigger_log.push_back(out.triggered ? 1 : 0);
        result.errors.push_back(out.error);
        err_sum += out.error;

        cs.push_history(f.pdsch_snr_db);
        cs.advance();
    }
    result.decay = verify::decay_monitor(result.trigger_log, 100);
    result.mae = spec.duration > 0 ? err_sum / static_cast<double>(spec.duration) : 0.0;
    return result;
}

namespace {

class IdxSource final : public SampleSource {
public:
    IdxSource(const io::IdxDataset& ds, const LabelSet& labels, std::size_t limit)
        : ds_(ds), labels_(labels), n_(limit == 0 ? ds.count : std::min(limit, ds.count)) {}

    std::size_t size() const override { return n_; }
    void get(std::size_t i, std::vector<double>& features, double& label) const override {
        features.resize(ds_.feature_dim());
        ds_.features(i, features);
        label = labels_.value(ds_.labels[i]);
    }

private:
    const io::IdxDataset& ds_;
    const LabelSet& labels_;
    std::size_t n_;
};

}  // namespace

MnistResult run_mnist(const MnistRecipe& recipe) {
    const io::IdxDataset train_ds = io::load_mnist(recipe.train_images, recipe.train_labels);
    const io::IdxDataset test_ds = io::load_mnist(recipe.test_images, recipe.test_labels);
    const LabelSet labels = LabelSet::mnist_classes();

    std::vector<std::size_t> dims;
    dims.push_back(train_ds.feature_dim() + 1);
    for (std::size_t h : recipe.hidden) dims.push_back(h);

    TrainConfig cfg;
    cfg.epochs = recipe.epochs;
    cfg.alpha = recipe.alpha;
    cfg.threshold_T = recipe.threshold_T;
    cfg.loss = recipe.loss;
    cfg.seed = recipe.seed;

    const IdxSource source(train_ds, labels, recipe.train_limit);
    MlpModel model =
        train_offline(MlpModel::random_init(dims, recipe.seed), source, labels, cfg);

    const std::size_t n_test =
        recipe.test_limit == 0 ? test_ds.count : std::min(recipe.test_limit, test_ds.count);
    std::vector<double> x(test_ds.feature_dim());
    std::size_t correct = 0;
    for (std::size_t i = 0; i < n_test; ++i) {
        test_ds.features(i, x);
        const Prediction pred = predict_label(model, x, labels);
        if (pred.label_index == test_ds.labels[i]) ++correct;
    }

    MnistResult result;
    result.model = std::move(model);
    result.train_count = source.size();
    result.test_count = n_test;
    result.test_accuracy =
        n_test > 0 ? static_cast<double>(correct) / static_cast<double>(n_test) : 0.0;
    return result;
}

MnistPaths find_mnist(const std::string& dir) {
    namespace fs = std::filesystem;
    MnistPaths p;
    const auto pick = [&dir](const std::string& stem) -> std::string {
        const fs::path plain = fs::path(dir) / stem;
        const fs::path gz = fs::path(dir) / (stem + ".gz");
        if (fs::exists(plain)) return plain.string();
        if (fs::exists(gz)) return gz.string();
        return {};
    };
    p.train_images = pick("train-images-idx3-ubyte");
    p.train_labels = pick("train-labels-idx1-ubyte");
    p.test_images = pick("t10k-images-idx3-ubyte");
    p.test_labels = pick("t10k-labels-idx1-ubyte");
    p.found = !p.train_images.empty() && !p.train_labels.empty() && !p.test_images.empty() &&
              !p.test_labels.empty();
    return p;
}

}  // namespace lighttune::run
