#pragma once

#include <optional>
#include <string>
#include <vector>

#include "lighttune/env_sim.hpp"
#include "lighttune/finetune.hpp"
#include "lighttune/train.hpp"
#include "lighttune/verify.hpp"

namespace lighttune::run {

enum class LinkAlgorithm { olla, cqi_tune, ri_cqi_tune, frozen };

std::string to_string(LinkAlgorithm a);
LinkAlgorithm algorithm_from_string(const std::string& s);
std::string to_string(UpdateVariant v);
UpdateVariant variant_from_string(const std::string& s);
std::string to_string(NegativeSampling s);
NegativeSampling sampling_from_string(const std::string& s);
std::string to_string(LossKind k);
LossKind loss_from_string(const std::string& s);

/// Offline BLER-model training recipe: exploratory (rank, cqi) decisions on
/// a training scenario, empirical-BLER labels quantized to the class grid.
struct TrainRecipe {
    sim::ScenarioSpec scenario = sim::ScenarioSpec::canned("S0");
    std::size_t samples = 8000;
    std::uint64_t data_seed = 7;
    std::vector<std::size_t> dims = {13, 32, 32};
    TrainConfig train;

    TrainRecipe() {
        scenario.duration = 1000000000L;  // the generator cycles, never exhausts
        train.epochs = 30;
        train.alpha = 0.03;
        train.threshold_T = 9.0;
        train.loss = LossKind::quadratic;
        train.seed = 1;
    }
};

struct BlerModelBundle {
    MlpModel model;
    io::FeatureScaler scaler = io::FeatureScaler::standard_link();
    LabelSet classes = LabelSet::bler_classes();
};

/// Generates the exploratory dataset and trains the predictor.
BlerModelBundle train_bler_model(const TrainRecipe& recipe);

/// Builds the exploratory dataset only (features flattened and scaled).
std::vector<AugmentedSample> make_link_dataset(const TrainRecipe& recipe,
                                               const io::FeatureScaler& scaler,
                                               const LabelSet& classes);

/// Static SINR->CQI mapping calibrated on the training environment; the OLLA
/// offset shifts its input.
struct BaselineTable {
    sim::BlerCurve curve;
    double penalty_db = 0.0;  // training-environment correlation+Doppler penalty
    double margin_db = 0.0;   // logistic margin for the target BLER

    int cqi_for(double sinr_db, int rank, int max_cqi = 15) const;
};

BaselineTable make_baseline_table(const sim::ScenarioSpec& train_env, double target_bler);

struct LinkRunConfig {
    sim::ScenarioSpec scenario = sim::ScenarioSpec::canned("S1");
    LinkAlgorithm algorithm = LinkAlgorithm::cqi_tune;
    FineTuneConfig finetune;
    TrainRecipe train;
    double tau_bler = 0.9;
    int cqi_min_delta = 1;  // cqi_min = max(cqi_base - delta, 1)
    double olla_step_up_db = 0.5;
    double olla_target_bler = 0.1;
    double mid_snr_lo_db = 16.0;
    double mid_snr_hi_db = 24.0;
    double high_snr_db = 28.0;
    const BlerModelBundle* pretrained = nullptr;  // optional shared model
};

struct PeriodRow {
    long period = 0;
    std::string algorithm;
    double snr_db = 0.0;
    int rank = 1;
    int cqi = 1;
    double p_hat = 0.0;
    bool have_p_hat = false;
    double p_empirical = 0.0;
    double error = 0.0;
    bool have_error = false;
    bool triggered = false;
    double throughput_bits = 0.0;
    long long mac_count = 0;
};

struct LinkRunSummary {
    double mae = 0.0;
    long mae_periods = 0;
    std::optional<double> p_fa;
    std::optional<double> p_md;
    double mean_throughput_bits = 0.0;
    double mean_throughput_mid_snr = 0.0;
    long mid_snr_periods = 0;
    double mean_throughput_high_snr = 0.0;
    long high_snr_periods = 0;
    long periods = 0;
    long triggers = 0;
    long long max_period_macs = 0;
    long long total_macs = 0;
};

struct LinkRunResult {
    std::vector<PeriodRow> rows;
    std::vector<std::uint8_t> trigger_log;
    std::vector<std::pair<double, double>> prediction_log;  // (p_hat, p_empirical)
    LinkRunSummary summary;
};

LinkRunResult run_link_sim(const LinkRunConfig& config);

/// Pure prediction stream with exploratory decisions, for trigger-decay
/// studies.
struct ConvergenceConfig {
    sim::ScenarioSpec scenario = sim::ScenarioSpec::canned("S1");
    FineTuneConfig finetune;
    TrainRecipe train;
    std::uint64_t explore_seed = 99;
    const BlerModelBundle* pretrained = nullptr;
};

struct ConvergenceResult {
    std::vector<std::uint8_t> trigger_log;
    std::vector<double> errors;
    verify::DecayReport decay;
    double mae = 0.0;
};

ConvergenceResult run_convergence(const ConvergenceConfig& config);

/// MNIST loss-comparison recipe.
struct MnistRecipe {
    std::string train_images;
    std::string train_labels;
    std::string test_images;
    std::string test_labels;
    std::vector<std::size_t> hidden = {200, 200};
    std::size_t epochs = 2;
    double alpha = 0.001;
    double threshold_T = 2.0;
    LossKind loss = LossKind::quadratic;
    std::uint64_t seed = 1;
    std::size_t train_limit = 0;  // 0 = use all samples
    std::size_t test_limit = 0;
};

struct MnistResult {
    double test_accuracy = 0.0;
    std::size_t train_count = 0;
    std::size_t test_count = 0;
    MlpModel model;
};

MnistResult run_mnist(const MnistRecipe& recipe);

/// Locates the four MNIST IDX files (plain or .gz) under a directory;
/// empty result when absent.
struct MnistPaths {
    std::string train_images, train_labels, test_images, test_labels;
    bool found = false;
};
MnistPaths find_mnist(const std::string& dir);

}  // namespace lighttune::run
