// lighttune: reproducible experiment recipes for the forward-only online
// fine-tuning core and the synthetic link-adaptation simulator.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include "lighttune/data_io.hpp"
#include "lighttune/errors.hpp"
#include "lighttune/run_config.hpp"
#include "lighttune/runner.hpp"
#include "lighttune/verify.hpp"

namespace fs = std::filesystem;
using namespace lighttune;

namespace {

constexpr const char* kVersion = "lighttune 0.1.0";
constexpr const char* kCqiTableVersion = "v1";

/// Desk-scale overrides for the link recipes; the published 83200-sample /
/// 22000-epoch configuration stays the config-file default and can be
/// restored explicitly.
constexpr const char* kDeskLinkRecipe =
    "[train]\n"
    "samples = 8000\n"
    "epochs = 40\n";

struct CommonArgs {
    std::string config_path;
    std::vector<std::uint64_t> seeds;
    std::string out_dir = "out";
    std::string scenario;
    std::string algorithm = "cqi-tune";
    std::string variant;
    std::string sampling;
    int jobs = 1;
};

std::string resolve_out_dir(const std::string& flag_value) {
    const char* env = std::getenv("LIGHTTUNE_OUT");
    return env != nullptr && *env != '\0' ? std::string(env) : flag_value;
}

run::RunConfig load_config(const CommonArgs& args, bool desk_link_defaults) {
    run::RunConfig cfg;
    if (desk_link_defaults) cfg.apply(io::ConfigMap::parse(kDeskLinkRecipe));
    if (!args.scenario.empty()) cfg.scenario = sim::ScenarioSpec::canned(args.scenario);
    if (!args.config_path.empty()) cfg.apply(io::ConfigMap::parse_file(args.config_path));
    if (!args.variant.empty()) cfg.finetune.variant = run::variant_from_string(args.variant);
    if (!args.sampling.empty())
        cfg.finetune.sampling = run::sampling_from_string(args.sampling);
    return cfg;
}

void write_manifest(const std::string& out_dir, const std::string& command,
                    const CommonArgs& args, const run::RunConfig& cfg) {
    std::ostringstream out;
    out << "command = " << command << "\n";
    out << "version = " << kVersion << "\n";
    out << "cqi_table = " << kCqiTableVersion << "\n";
    out << "scaler = " << io::FeatureScaler::standard_link().describe() << "\n";
    out << "seeds = ";
    for (std::size_t i = 0; i < args.seeds.size(); ++i)
        out << (i ? "," : "") << args.seeds[i];
    out << "\n";
    out << "algorithm = " << args.algorithm << "\n";
    out << "jobs = " << args.jobs << "\n";
    out << cfg.manifest_text();
    io::write_text_file((fs::path(out_dir) / "manifest.txt").string(), out.str());
}

std::string cell_tag(const std::string& command, const run::RunConfig& cfg,
                     const std::string& algorithm, std::uint64_t seed) {
    std::ostringstream tag;
    tag << command << "_" << cfg.scenario.name << "_" << algorithm << "_seed" << seed;
    return tag.str();
}

const std::vector<std::string> kTelemetryHeader = {
    "period",    "algorithm",       "snr",       "rank",
    "cqi",       "p_hat",           "p_true_empirical", "error",
    "triggered", "throughput_bits", "mac_count"};

void write_link_outputs(const std::string& out_dir, const std::string& tag,
                        const run::LinkRunResult& result) {
    {
        io::CsvWriter w((fs::path(out_dir) / (tag + "_telemetry.csv")).string(),
                        kTelemetryHeader);
        for (const run::PeriodRow& r : result.rows) {
            const std::vector<std::string> cells = {
                io::csv_format(static_cast<long long>(r.period)),
                r.algorithm,
                io::csv_format(r.snr_db),
                io::csv_format(static_cast<long long>(r.rank)),
                io::csv_format(static_cast<long long>(r.cqi)),
                r.have_p_hat ? io::csv_format(r.p_hat) : "nan",
                io::csv_format(r.p_empirical),
                r.have_error ? io::csv_format(r.error) : "nan",
                io::csv_format(static_cast<long long>(r.triggered ? 1 : 0)),
                io::csv_format(r.throughput_bits),
                io::csv_format(r.mac_count)};
            w.row(cells);
        }
        w.flush();
    }
    {
        const std::vector<std::string> header = {"metric", "value"};
        std::vector<std::vector<std::string>> rows;
        const run::LinkRunSummary& s = result.summary;
        rows.push_back({"periods", io::csv_format(static_cast<long long>(s.periods))});
        rows.push_back({"mae", io::csv_format(s.mae)});
        rows.push_back({"mae_periods", io::csv_format(static_cast<long long>(s.mae_periods))});
        rows.push_back({"p_fa", s.p_fa ? io::csv_format(*s.p_fa) : "nan"});
        rows.push_back({"p_md", s.p_md ? io::csv_format(*s.p_md) : "nan"});
        rows.push_back({"mean_throughput_bits", io::csv_format(s.mean_throughput_bits)});
        rows.push_back(
            {"mean_throughput_mid_snr", io::csv_format(s.mean_throughput_mid_snr)});
        rows.push_back(
            {"mean_throughput_high_snr", io::csv_format(s.mean_throughput_high_snr)});
        rows.push_back({"triggers", io::csv_format(static_cast<long long>(s.triggers))});
        rows.push_back({"max_period_macs", io::csv_format(s.max_period_macs)});
        rows.push_back({"total_macs", io::csv_format(s.total_macs)});
        io::write_csv((fs::path(out_dir) / (tag + "_summary.csv")).string(), header, rows);
    }
    {
        const verify::DecayReport decay = verify::decay_monitor(result.trigger_log, 100);
        const std::vector<std::string> header = {"window_end", "window_rate", "cum_count",
                                                 "prefix_rate"};
        std::vector<std::vector<std::string>> rows;
        for (std::size_t i = 0; i < decay.window_rates.size(); ++i) {
            const long end = static_cast<long>(i + 1) * decay.window;
            rows.push_back({io::csv_format(static_cast<long long>(end)),
                            io::csv_format(decay.window_rates[i]),
                            io::csv_format(static_cast<long long>(decay.cumulative[i])),
                            io::csv_format(static_cast<double>(decay.cumulative[i]) /
                                           static_cast<double>(end))});
        }
        io::write_csv((fs::path(out_dir) / (tag + "_trigger_curve.csv")).string(), header,
                      rows);
    }
}

int cmd_simulate_link(const CommonArgs& args) {
    const std::string out_dir = resolve_out_dir(args.out_dir);
    fs::create_directories(out_dir);
    run::RunConfig cfg = load_config(args, /*desk_link_defaults=*/true);
    const run::LinkAlgorithm algo = run::algorithm_from_string(args.algorithm);
    write_manifest(out_dir, "simulate-link", args, cfg);

    run::BlerModelBundle bundle;
    const bool needs_model = algo != run::LinkAlgorithm::olla;
    if (needs_model) {
        if (!cfg.model_file.empty()) {
            bundle.model = io::load_model(cfg.model_file);
        } else {
            bundle = run::train_bler_model(cfg.train_recipe());
        }
    }

    std::vector<std::uint64_t> seeds = args.seeds;
    if (seeds.empty()) seeds.push_back(cfg.scenario.seed);

    std::mutex io_mutex;
    std::atomic<int> failures{0};
    const auto run_cell = [&](std::uint64_t seed) {
        try {
            run::LinkRunConfig rc = cfg.link_run(algo);
            rc.scenario.seed = seed;
            if (needs_model) rc.pretrained = &bundle;
            const run::LinkRunResult result = run::run_link_sim(rc);
            const std::string tag = cell_tag("link", cfg, args.algorithm, seed);
            std::lock_guard<std::mutex> lock(io_mutex);
            write_link_outputs(out_dir, tag, result);
            std::cout << tag << ": mae=" << io::csv_format(result.summary.mae)
                      << " mean_tp=" << io::csv_format(result.summary.mean_throughput_bits)
                      << " triggers=" << result.summary.triggers << "\n";
        } catch (const std::exception& e) {
            std::lock_guard<std::mutex> lock(io_mutex);
            std::cerr << "cell seed " << seed << " failed: " << e.what() << "\n";
            failures.fetch_add(1);
        }
    };

    if (args.jobs <= 1 || seeds.size() <= 1) {
        for (std::uint64_t s : seeds) run_cell(s);
    } else {
        std::vector<std::thread> pool;
        std::atomic<std::size_t> next{0};
        const int n_threads = std::min<int>(args.jobs, static_cast<int>(seeds.size()));
        for (int t = 0; t < n_threads; ++t) {
            pool.emplace_back([&]() {
                for (std::size_t i = next.fetch_add(1); i < seeds.size();
                     i = next.fetch_add(1))
                    run_cell(seeds[i]);
            });
        }
        for (std::thread& th : pool) th.join();
    }
    return failures.load() == 0 ? 0 : 3;
}

int cmd_convergence(const CommonArgs& args) {
    const std::string out_dir = resolve_out_dir(args.out_dir);
    fs::create_directories(out_dir);
    run::RunConfig cfg = load_config(args, /*desk_link_defaults=*/true);
    write_manifest(out_dir, "convergence-study", args, cfg);

    run::BlerModelBundle bundle = run::train_bler_model(cfg.train_recipe());

    std::vector<std::uint64_t> seeds = args.seeds;
    if (seeds.empty()) seeds.push_back(cfg.scenario.seed);

    for (std::uint64_t seed : seeds) {
        run::ConvergenceConfig cc = cfg.convergence_run();
        cc.scenario.seed = seed;
        cc.pretrained = &bundle;
        const run::ConvergenceResult result = run::run_convergence(cc);
        const std::string tag = cell_tag("convergence", cfg, "stream", seed);

        const std::vector<std::string> header = {"window_end", "window_rate", "cum_count"};
        std::vector<std::vector<std::string>> rows;
        for (std::size_t i = 0; i < result.decay.window_rates.size(); ++i) {
            rows.push_back(
                {io::csv_format(static_cast<long long>((i + 1) * result.decay.window)),
                 io::csv_format(result.decay.window_rates[i]),
                 io::csv_format(static_cast<long long>(result.decay.cumulative[i]))});
        }
        io::write_csv((fs::path(out_dir) / (tag + "_trigger_curve.csv")).string(), header,
                      rows);

        const std::vector<std::string> sum_header = {"metric", "value"};
        std::vector<std::vector<std::string>> sum_rows;
        sum_rows.push_back({"mae", io::csv_format(result.mae)});
        sum_rows.push_back(
            {"triggers", io::csv_format(static_cast<long long>(result.decay.triggered))});
        sum_rows.push_back(
            {"first_window_rate", io::csv_format(result.decay.first_window_rate)});
        sum_rows.push_back(
            {"final_window_rate", io::csv_format(result.decay.final_window_rate)});
        sum_rows.push_back(
            {"sublinearity_ratio", io::csv_format(result.decay.sublinearity_ratio)});
        io::write_csv((fs::path(out_dir) / (tag + "_summary.csv")).string(), sum_header,
                      sum_rows);
        std::cout << tag << ": triggers=" << result.decay.triggered
                  << " first_rate=" << io::csv_format(result.decay.first_window_rate)
                  << " final_rate=" << io::csv_format(result.decay.final_window_rate) << "\n";
    }
    return 0;
}

int cmd_mnist(const CommonArgs& args, bool both_losses) {
    const std::string out_dir = resolve_out_dir(args.out_dir);
    fs::create_directories(out_dir);
    run::RunConfig cfg = load_config(args, /*desk_link_defaults=*/false);
    write_manifest(out_dir, both_losses ? "compare-loss" : "train-mnist", args, cfg);

    const char* env_dir = std::getenv("LIGHTTUNE_MNIST_DIR");
    const std::string dir =
        env_dir != nullptr && *env_dir != '\0' ? std::string(env_dir) : cfg.mnist_dir;
    const run::MnistPaths paths = run::find_mnist(dir);
    if (!paths.found)
        throw ConfigError("MNIST IDX files not found under '" + dir +
                          "' (expected train-images-idx3-ubyte[.gz] etc.)");

    run::MnistRecipe recipe;
    recipe.train_images = paths.train_images;
    recipe.train_labels = paths.train_labels;
    recipe.test_images = paths.test_images;
    recipe.test_labels = paths.test_labels;
    recipe.hidden = cfg.mnist_hidden;
    recipe.epochs = cfg.mnist_epochs;
    recipe.alpha = cfg.mnist_alpha;
    recipe.threshold_T = cfg.mnist_threshold_T;
    recipe.seed = args.seeds.empty() ? cfg.mnist_seed : args.seeds.front();
    recipe.train_limit = cfg.mnist_train_limit;
    recipe.test_limit = cfg.mnist_test_limit;

    const std::vector<std::string> header = {"loss", "test_accuracy", "train_count",
                                             "test_count"};
    std::vector<std::vector<std::string>> rows;
    const auto run_one = [&](LossKind loss) {
        recipe.loss = loss;
        const run::MnistResult r = run::run_mnist(recipe);
        rows.push_back({run::to_string(loss), io::csv_format(r.test_accuracy),
                        io::csv_format(static_cast<long long>(r.train_count)),
                        io::csv_format(static_cast<long long>(r.test_count))});
        io::save_model(r.model, (fs::path(out_dir) /
                                 ("mnist_model_" + run::to_string(loss) + ".txt"))
                                    .string());
        std::cout << "mnist " << run::to_string(loss)
                  << ": test_accuracy=" << io::csv_format(r.test_accuracy) << "\n";
        return r.test_accuracy;
    };

    if (both_losses) {
        const double acc_q = run_one(LossKind::quadratic);
        const double acc_s = run_one(LossKind::softplus);
        rows.push_back({"abs_diff", io::csv_format(std::abs(acc_q - acc_s)), "0", "0"});
    } else {
        run_one(cfg.train.loss);
    }
    io::write_csv((fs::path(out_dir) / "mnist_summary.csv").string(), header, rows);
    return 0;
}

int cmd_verify_bounds(const CommonArgs& args) {
    const std::string out_dir = resolve_out_dir(args.out_dir);
    fs::create_directories(out_dir);
    run::RunConfig cfg = load_config(args, /*desk_link_defaults=*/false);
    write_manifest(out_dir, "verify-bounds", args, cfg);
    const std::uint64_t seed = args.seeds.empty() ? cfg.verify_seed : args.seeds.front();

    const std::vector<std::size_t> dims = {8, 6, 5};
    const double b_z = 2.0, b_theta = 1.0, threshold = 1.5;

    const verify::BoundSweepResult bounds =
        verify::bound_sweep(dims, b_z, b_theta, threshold, cfg.verify_bound_trials, seed);
    const verify::FdSweepResult fd =
        verify::fd_sweep(dims, threshold, cfg.verify_fd_points, cfg.verify_fd_step, seed + 1);
    const verify::TaylorGapReport taylor =
        verify::taylor_gap_sweep(-0.5, 0.5, static_cast<int>(cfg.verify_taylor_points));
    const verify::MacBudget budget =
        verify::mac_budget(cfg.dims, static_cast<int>(cfg.classes.size()));

    const std::vector<std::string> header = {"check", "measured", "bound", "pass"};
    std::vector<std::vector<std::string>> rows;
    const auto add = [&rows](const std::string& name, double measured, double bound,
                             bool pass) {
        rows.push_back({name, io::csv_format(measured), io::csv_format(bound),
                        pass ? "1" : "0"});
    };
    add("activation_ratio", bounds.max_activation_ratio, 1.0,
        bounds.max_activation_ratio <= 1.0);
    add("gradient_ratio", bounds.max_gradient_ratio, 1.0, bounds.max_gradient_ratio <= 1.0);
    add("loss_ratio", bounds.max_loss_ratio, 1.0, bounds.max_loss_ratio <= 1.0);
    add("lipschitz_ratio", bounds.max_lipschitz_ratio, 1.0,
        bounds.max_lipschitz_ratio <= 1.0);
    add("violations", static_cast<double>(bounds.violations), 0.0, bounds.violations == 0);
    add("fd_fraction_within_1e-5", fd.fraction_ok, 1.0, fd.fraction_ok >= 0.99);
    add("fd_max_rel_error", fd.max_rel_error, 1e-5, fd.max_rel_error <= 1e-4);
    add("taylor_max_gap", taylor.max_gap, 0.02, taylor.max_gap <= 0.02);
    add("alpha_f_admissible", cfg.finetune.alpha_f, 1.0 / bounds.rho_terminal,
        cfg.finetune.alpha_f < 1.0 / bounds.rho_terminal);
    rows.push_back({"mac_budget_cqi_tune", io::csv_format(budget.cqi_tune),
                    io::csv_format(budget.cqi_tune), "1"});
    io::write_csv((fs::path(out_dir) / "verify_report.csv").string(), header, rows);

    bool all_pass = true;
    std::cout << "check,measured,bound,pass\n";
    for (const auto& r : rows) {
        std::cout << r[0] << "," << r[1] << "," << r[2] << "," << r[3] << "\n";
        if (r[3] == "0") all_pass = false;
    }
    return all_pass ? 0 : 3;
}

int cmd_mac_budget(const CommonArgs& args) {
    const std::string out_dir = resolve_out_dir(args.out_dir);
    fs::create_directories(out_dir);
    run::RunConfig cfg = load_config(args, /*desk_link_defaults=*/false);
    write_manifest(out_dir, "mac-budget", args, cfg);
    const verify::MacBudget b = verify::mac_budget(cfg.dims, static_cast<int>(cfg.classes.size()));

    const std::vector<std::string> header = {"algorithm", "total_macs", "q", "n_total",
                                             "classes"};
    std::vector<std::vector<std::string>> rows;
    rows.push_back({"bler-predict", io::csv_format(b.bler_predict), io::csv_format(b.q),
                    io::csv_format(b.n_total), io::csv_format(static_cast<long long>(b.classes))});
    rows.push_back({"cqi-tune", io::csv_format(b.cqi_tune), io::csv_format(b.q),
                    io::csv_format(b.n_total), io::csv_format(static_cast<long long>(b.classes))});
    rows.push_back({"ri-cqi-tune", io::csv_format(b.ri_cqi_tune), io::csv_format(b.q),
                    io::csv_format(b.n_total), io::csv_format(static_cast<long long>(b.classes))});
    io::write_csv((fs::path(out_dir) / "mac_budget.csv").string(), header, rows);

    std::cout << "Q = " << b.q << ", N_total = " << b.n_total << ", C = " << b.classes << "\n";
    std::cout << "bler-predict: " << b.bler_predict << " MACs\n";
    std::cout << "cqi-tune:     " << b.cqi_tune << " MACs\n";
    std::cout << "ri-cqi-tune:  " << b.ri_cqi_tune << " MACs\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{kVersion};
    app.require_subcommand(1);

    CommonArgs args;
    const auto add_common = [&args](CLI::App* cmd, bool with_algorithm) {
        cmd->add_option("--config", args.config_path, "configuration file");
        cmd->add_option("--seed", args.seeds, "run seed (repeatable for multi-seed cells)");
        cmd->add_option("--out-dir", args.out_dir,
                        "output directory (LIGHTTUNE_OUT overrides)");
        cmd->add_option("--scenario", args.scenario, "canned scenario")
            ->check(CLI::IsMember({"S0", "S1", "S2"}));
        if (with_algorithm) {
            cmd->add_option("--algorithm", args.algorithm, "link algorithm")
                ->check(CLI::IsMember({"olla", "cqi-tune", "ri-cqi-tune", "frozen"}));
            cmd->add_option("--jobs", args.jobs, "parallel (scenario, seed) cells");
        }
        cmd->add_option("--variant", args.variant, "optimizer variant")
            ->check(CLI::IsMember({"standard-adam", "one-step", "sign-update"}));
        cmd->add_option("--sampling", args.sampling, "negative sampling")
            ->check(CLI::IsMember({"uniform", "hard"}));
    };

    CLI::App* sim_cmd = app.add_subcommand("simulate-link", "run the link-adaptation simulator");
    add_common(sim_cmd, true);
    CLI::App* conv_cmd =
        app.add_subcommand("convergence-study", "trigger-decay study on a scenario stream");
    add_common(conv_cmd, false);
    CLI::App* train_cmd = app.add_subcommand("train-mnist", "offline FF training on MNIST");
    add_common(train_cmd, false);
    CLI::App* cmp_cmd =
        app.add_subcommand("compare-loss", "MNIST accuracy of both loss functions");
    add_common(cmp_cmd, false);
    CLI::App* verify_cmd =
        app.add_subcommand("verify-bounds", "bound, gradient and approximation sweeps");
    add_common(verify_cmd, false);
    CLI::App* mac_cmd = app.add_subcommand("mac-budget", "complexity budgets per algorithm");
    add_common(mac_cmd, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        app.exit(e);
        return 2;
    }

    try {
        if (sim_cmd->parsed()) return cmd_simulate_link(args);
        if (conv_cmd->parsed()) return cmd_convergence(args);
        if (train_cmd->parsed()) return cmd_mnist(args, false);
        if (cmp_cmd->parsed()) return cmd_mnist(args, true);
        if (verify_cmd->parsed()) return cmd_verify_bounds(args);
        if (mac_cmd->parsed()) return cmd_mac_budget(args);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return 2;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
