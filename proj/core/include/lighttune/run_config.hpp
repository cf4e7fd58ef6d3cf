#pragma once

#include <string>
#include <vector>

#include "lighttune/runner.hpp"

namespace lighttune::run {

/// Fully resolved run configuration. Defaults mirror the published
/// hyperparameters: network [13, 32, 32], offline and online learning rate
/// 0.03, trigger threshold 0.3, Adam (0.9, 0.999, 1e-8), goodness threshold
/// T = 9, 22000 epochs over 83200 samples, classes {0, 0.1, ..., 0.9}.
/// Command recipes override the desk-scale knobs explicitly; every resolved
/// value lands in the manifest.
struct RunConfig {
    // [model]
    std::vector<std::size_t> dims = {13, 32, 32};
    double threshold_T = 9.0;

    // [train]
    TrainConfig train;
    std::size_t train_samples = 83200;
    std::uint64_t train_data_seed = 7;

    // [finetune]
    FineTuneConfig finetune;

    // [classes]
    LabelSet classes = LabelSet::bler_classes();

    // [link]
    double tau_bler = 0.9;
    int cqi_min_delta = 1;
    double olla_step_up_db = 0.5;
    double olla_target_bler = 0.1;
    std::string model_file;
    double mid_snr_lo_db = 16.0;
    double mid_snr_hi_db = 24.0;
    double high_snr_db = 28.0;

    // [scenario] (+ [shift.*])
    sim::ScenarioSpec scenario = sim::ScenarioSpec::canned("S0");

    // [convergence]
    std::uint64_t explore_seed = 99;

    // [mnist]
    std::string mnist_dir = "data/mnist";
    std::vector<std::size_t> mnist_hidden = {200, 200};
    std::size_t mnist_epochs = 2;
    double mnist_alpha = 0.001;
    double mnist_threshold_T = 2.0;
    std::uint64_t mnist_seed = 1;
    std::size_t mnist_train_limit = 0;
    std::size_t mnist_test_limit = 0;

    // [verify]
    long verify_bound_trials = 10000;
    long verify_fd_points = 10000;
    double verify_fd_step = 1e-5;
    long verify_taylor_points = 20001;
    std::uint64_t verify_seed = 5;

    RunConfig() {
        train.epochs = 22000;
        train.alpha = 0.03;
        train.threshold_T = 9.0;
        train.loss = LossKind::quadratic;
        train.seed = 1;
    }

    static RunConfig defaults() { return RunConfig{}; }
    static RunConfig from_config(const io::ConfigMap& cfg);
    /// Applies a config on top of the current values; unknown keys are
    /// configuration errors.
    void apply(const io::ConfigMap& cfg);

    TrainRecipe train_recipe() const;
    LinkRunConfig link_run(LinkAlgorithm algorithm) const;
    ConvergenceConfig convergence_run() const;

    /// Every tunable's resolved value, one per line.
    std::string manifest_text() const;
};

}  // namespace lighttune::run
