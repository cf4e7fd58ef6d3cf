#include "lighttune/run_config.hpp"

#include <set>
#include <sstream>

#include "lighttune/errors.hpp"

namespace lighttune::run {

namespace {

std::vector<std::size_t> parse_widths(const std::string& s) {
    std::vector<std::size_t> widths;
    std::istringstream in(s);
    std::string tok;
    while (std::getline(in, tok, ',')) {
        const long v = std::stol(tok);
        if (v < 1) throw ConfigError("layer widths must be >= 1");
        widths.push_back(static_cast<std::size_t>(v));
    }
    if (widths.empty()) throw ConfigError("empty width list");
    return widths;
}

std::vector<std::size_t> parse_dims(const std::string& s) {
    std::vector<std::size_t> dims = parse_widths(s);
    if (dims.size() < 2) throw ConfigError("dims needs at least input and one layer width");
    return dims;
}

LabelSet parse_classes(const std::string& s) {
    std::vector<double> v;
    std::istringstream in(s);
    std::string tok;
    while (std::getline(in, tok, ',')) v.push_back(std::stod(tok));
    return LabelSet(v);
}

const std::set<std::pair<std::string, std::string>> kKnownKeys = {
    {"model", "dims"},
    {"model", "threshold_T"},
    {"train", "alpha"},
    {"train", "beta1"},
    {"train", "beta2"},
    {"train", "epsilon"},
    {"train", "epochs"},
    {"train", "samples"},
    {"train", "loss"},
    {"train", "seed"},
    {"train", "shuffle"},
    {"train", "data_seed"},
    {"finetune", "delta"},
    {"finetune", "alpha_f"},
    {"finetune", "variant"},
    {"finetune", "sampling"},
    {"finetune", "beta1"},
    {"finetune", "beta2"},
    {"finetune", "epsilon"},
    {"finetune", "seed"},
    {"classes", "values"},
    {"link", "tau_bler"},
    {"link", "cqi_min_delta"},
    {"link", "olla_step_up"},
    {"link", "olla_target"},
    {"link", "model_file"},
    {"link", "mid_snr_lo_db"},
    {"link", "mid_snr_hi_db"},
    {"link", "high_snr_db"},
    {"convergence", "explore_seed"},
    {"mnist", "dir"},
    {"mnist", "hidden"},
    {"mnist", "epochs"},
    {"mnist", "alpha"},
    {"mnist", "threshold_T"},
    {"mnist", "seed"},
    {"mnist", "train_limit"},
    {"mnist", "test_limit"},
    {"verify", "bound_trials"},
    {"verify", "fd_points"},
    {"verify", "fd_step"},
    {"verify", "taylor_points"},
    {"verify", "seed"},
};

}  // namespace

RunConfig RunConfig::from_config(const io::ConfigMap& cfg) {
    RunConfig rc;
    rc.apply(cfg);
    return rc;
}

void RunConfig::apply(const io::ConfigMap& cfg) {
    for (const auto& e : cfg.entries()) {
        if (e.section == "scenario" || e.section.rfind("shift.", 0) == 0) continue;
        if (kKnownKeys.count({e.section, e.key}) == 0)
            throw ConfigError("unknown key '" + e.key + "' in section [" + e.section +
                              "] (line " + std::to_string(e.line) + ")");
    }

    if (cfg.has("model", "dims")) dims = parse_dims(cfg.get("model", "dims"));
    threshold_T = cfg.get_double("model", "threshold_T", threshold_T);
    train.threshold_T = threshold_T;
    finetune.threshold_T = threshold_T;

    train.alpha = cfg.get_double("train", "alpha", train.alpha);
    train.beta1 = cfg.get_double("train", "beta1", train.beta1);
    train.beta2 = cfg.get_double("train", "beta2", train.beta2);
    train.epsilon = cfg.get_double("train", "epsilon", train.epsilon);
    train.epochs = static_cast<std::size_t>(
        cfg.get_int("train", "epochs", static_cast<long long>(train.epochs)));
    train_samples = static_cast<std::size_t>(
        cfg.get_int("train", "samples", static_cast<long long>(train_samples)));
    if (cfg.has("train", "loss")) train.loss = loss_from_string(cfg.get("train", "loss"));
    train.seed = static_cast<std::uint64_t>(
        cfg.get_int("train", "seed", static_cast<long long>(train.seed)));
    train.shuffle = cfg.get_bool("train", "shuffle", train.shuffle);
    train_data_seed = static_cast<std::uint64_t>(
        cfg.get_int("train", "data_seed", static_cast<long long>(train_data_seed)));

    finetune.delta = cfg.get_double("finetune", "delta", finetune.delta);
    finetune.alpha_f = cfg.get_double("finetune", "alpha_f", finetune.alpha_f);
    if (cfg.has("finetune", "variant"))
        finetune.variant = variant_from_string(cfg.get("finetune", "variant"));
    if (cfg.has("finetune", "sampling"))
        finetune.sampling = sampling_from_string(cfg.get("finetune", "sampling"));
    finetune.beta1 = cfg.get_double("finetune", "beta1", finetune.beta1);
    finetune.beta2 = cfg.get_double("finetune", "beta2", finetune.beta2);
    finetune.epsilon = cfg.get_double("finetune", "epsilon", finetune.epsilon);
    finetune.seed = static_cast<std::uint64_t>(
        cfg.get_int("finetune", "seed", static_cast<long long>(finetune.seed)));

    if (cfg.has("classes", "values")) classes = parse_classes(cfg.get("classes", "values"));

    tau_bler = cfg.get_double("link", "tau_bler", tau_bler);
    cqi_min_delta = static_cast<int>(cfg.get_int("link", "cqi_min_delta", cqi_min_delta));
    olla_step_up_db = cfg.get_double("link", "olla_step_up", olla_step_up_db);
    olla_target_bler = cfg.get_double("link", "olla_target", olla_target_bler);
    model_file = cfg.get_or("link", "model_file", model_file);
    mid_snr_lo_db = cfg.get_double("link", "mid_snr_lo_db", mid_snr_lo_db);
    mid_snr_hi_db = cfg.get_double("link", "mid_snr_hi_db", mid_snr_hi_db);
    high_snr_db = cfg.get_double("link", "high_snr_db", high_snr_db);

    bool scenario_mentioned = false;
    for (const auto& e : cfg.entries()) {
        if (e.section == "scenario" || e.section.rfind("shift.", 0) == 0)
            scenario_mentioned = true;
    }
    if (scenario_mentioned) scenario = sim::ScenarioSpec::from_config(cfg);

    explore_seed = static_cast<std::uint64_t>(
        cfg.get_int("convergence", "explore_seed", static_cast<long long>(explore_seed)));

    mnist_dir = cfg.get_or("mnist", "dir", mnist_dir);
    if (cfg.has("mnist", "hidden")) mnist_hidden = parse_widths(cfg.get("mnist", "hidden"));
    mnist_epochs = static_cast<std::size_t>(
        cfg.get_int("mnist", "epochs", static_cast<long long>(mnist_epochs)));
    mnist_alpha = cfg.get_double("mnist", "alpha", mnist_alpha);
    mnist_threshold_T = cfg.get_double("mnist", "threshold_T", mnist_threshold_T);
    mnist_seed = static_cast<std::uint64_t>(
        cfg.get_int("mnist", "seed", static_cast<long long>(mnist_seed)));
    mnist_train_limit = static_cast<std::size_t>(
        cfg.get_int("mnist", "train_limit", static_cast<long long>(mnist_train_limit)));
    mnist_test_limit = static_cast<std::size_t>(
        cfg.get_int("mnist", "test_limit", static_cast<long long>(mnist_test_limit)));

    verify_bound_trials = cfg.get_int("verify", "bound_trials", verify_bound_trials);
    verify_fd_points = cfg.get_int("verify", "fd_points", verify_fd_points);
    verify_fd_step = cfg.get_double("verify", "fd_step", verify_fd_step);
    verify_taylor_points = cfg.get_int("verify", "taylor_points", verify_taylor_points);
    verify_seed = static_cast<std::uint64_t>(
        cfg.get_int("verify", "seed", static_cast<long long>(verify_seed)));
}

TrainRecipe RunConfig::train_recipe() const {
    TrainRecipe r;
    r.scenario = sim::ScenarioSpec::canned("S0");
    r.scenario.seed = train_data_seed;
    r.samples = train_samples;
    r.data_seed = train_data_seed;
    r.dims = dims;
    r.train = train;
    return r;
}

LinkRunConfig RunConfig::link_run(LinkAlgorithm algorithm) const {
    LinkRunConfig c;
    c.scenario = scenario;
    c.algorithm = algorithm;
    c.finetune = finetune;
    c.train = train_recipe();
    c.tau_bler = tau_bler;
    c.cqi_min_delta = cqi_min_delta;
    c.olla_step_up_db = olla_step_up_db;
    c.olla_target_bler = olla_target_bler;
    c.mid_snr_lo_db = mid_snr_lo_db;
    c.mid_snr_hi_db = mid_snr_hi_db;
    c.high_snr_db = high_snr_db;
    return c;
}

ConvergenceConfig RunConfig::convergence_run() const {
    ConvergenceConfig c;
    c.scenario = scenario;
    c.finetune = finetune;
    c.train = train_recipe();
    c.explore_seed = explore_seed;
    return c;
}

std::string RunConfig::manifest_text() const {
    std::ostringstream out;
    out << "[model]\n";
    out << "dims = ";
    for (std::size_t i = 0; i < dims.size(); ++i) out << (i ? "," : "") << dims[i];
    out << "\nthreshold_T = " << io::csv_format(threshold_T) << "\n";

    out << "[train]\n";
    out << "alpha = " << io::csv_format(train.alpha) << "\n";
    out << "beta1 = " << io::csv_format(train.beta1) << "\n";
    out << "beta2 = " << io::csv_format(train.beta2) << "\n";
    out << "epsilon = " << io::csv_format(train.epsilon) << "\n";
    out << "epochs = " << train.epochs << "\n";
    out << "samples = " << train_samples << "\n";
    out << "loss = " << to_string(train.loss) << "\n";
    out << "seed = " << train.seed << "\n";
    out << "shuffle = " << (train.shuffle ? "true" : "false") << "\n";
    out << "data_seed = " << train_data_seed << "\n";

    out << "[finetune]\n";
    out << "delta = " << io::csv_format(finetune.delta) << "\n";
    out << "alpha_f = " << io::csv_format(finetune.alpha_f) << "\n";
    out << "variant = " << to_string(finetune.variant) << "\n";
    out << "sampling = " << to_string(finetune.sampling) << "\n";
    out << "beta1 = " << io::csv_format(finetune.beta1) << "\n";
    out << "beta2 = " << io::csv_format(finetune.beta2) << "\n";
    out << "epsilon = " << io::csv_format(finetune.epsilon) << "\n";
    out << "seed = " << finetune.seed << "\n";

    out << "[classes]\n";
    out << "values = ";
    for (std::size_t i = 0; i < classes.size(); ++i)
        out << (i ? "," : "") << io::csv_format(classes.value(i));
    out << "\n";

    out << "[link]\n";
    out << "tau_bler = " << io::csv_format(tau_bler) << "\n";
    out << "cqi_min_delta = " << cqi_min_delta << "\n";
    out << "olla_step_up = " << io::csv_format(olla_step_up_db) << "\n";
    out << "olla_target = " << io::csv_format(olla_target_bler) << "\n";
    out << "model_file = " << model_file << "\n";
    out << "mid_snr_lo_db = " << io::csv_format(mid_snr_lo_db) << "\n";
    out << "mid_snr_hi_db = " << io::csv_format(mid_snr_hi_db) << "\n";
    out << "high_snr_db = " << io::csv_format(high_snr_db) << "\n";

    out << scenario.to_config_text();

    out << "[convergence]\n";
    out << "explore_seed = " << explore_seed << "\n";

    out << "[mnist]\n";
    out << "dir = " << mnist_dir << "\n";
    out << "hidden = ";
    for (std::size_t i = 0; i < mnist_hidden.size(); ++i)
        out << (i ? "," : "") << mnist_hidden[i];
    out << "\nepochs = " << mnist_epochs << "\n";
    out << "alpha = " << io::csv_format(mnist_alpha) << "\n";
    out << "threshold_T = " << io::csv_format(mnist_threshold_T) << "\n";
    out << "seed = " << mnist_seed << "\n";
    out << "train_limit = " << mnist_train_limit << "\n";
    out << "test_limit = " << mnist_test_limit << "\n";

    out << "[verify]\n";
    out << "bound_trials = " << verify_bound_trials << "\n";
    out << "fd_points = " << verify_fd_points << "\n";
    out << "fd_step = " << io::csv_format(verify_fd_step) << "\n";
    out << "taylor_points = " << verify_taylor_points << "\n";
    out << "seed = " << verify_seed << "\n";
    return out.str();
}

}  // namespace lighttune::run
