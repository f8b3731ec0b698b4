// Command-line driver for the spectrum-sensing simulations.
//
// Subcommands: simulate, roc, far-sweep, learn, calibrate,
// validate-convergence. Exit codes: 0 ok, 1 config error, 2 numerical
// failure, 3 assertion-mode violation.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "linbp/errors.hpp"
#include "linbp/experiment.hpp"

namespace {

struct CommonArgs {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<int> slots;
    std::optional<std::string> method;
    std::string out_path;
    bool strict = false;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool with_method = true) {
    cmd->add_option("--config", args.config_path, "JSON config file (defaults built in)");
    cmd->add_option("--seed", args.seed, "Master seed (required here or in the config)");
    cmd->add_option("--slots", args.slots, "Evaluation slots per data point");
    if (with_method)
        cmd->add_option("--method", args.method,
                        "local | bp | utrw | linear_bp_oracle | linear_bp_blind");
    cmd->add_option("--out", args.out_path, "Output file (stdout if omitted)");
    cmd->add_flag("--strict", args.strict,
                  "Reject unknown config keys; on far-sweep also enforce the band check");
}

linbp::ExperimentConfig resolve_config(const CommonArgs& args) {
    linbp::ExperimentConfig config = args.config_path.empty()
                                         ? linbp::default_config()
                                         : linbp::load_config(args.config_path, args.strict);
    for (const auto& warning : config.load_warnings)
        std::cerr << "warning: " << warning << '\n';
    if (args.seed) {
        config.seed = *args.seed;
        config.seed_set = true;
    }
    if (args.slots)
        config.slots = *args.slots;
    if (args.method)
        config.method = *args.method;
    config.validate();
    return config;
}

void emit(const CommonArgs& args, const std::string& contents) {
    if (args.out_path.empty())
        std::cout << contents;
    else
        linbp::write_text_file(args.out_path, contents);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Linear belief-propagation spectrum sensing simulator"};
    app.require_subcommand(1);

    CommonArgs simulate_args, roc_args, far_args, learn_args, calibrate_args, validate_args;
    CLI::App* simulate = app.add_subcommand("simulate", "Emit raw sensing slots as CSV");
    add_common(simulate, simulate_args, false);
    CLI::App* roc = app.add_subcommand("roc", "Empirical (FAR, Pd) per node over the alpha grid");
    add_common(roc, roc_args);
    CLI::App* far = app.add_subcommand("far-sweep",
                                       "False-alarm rate vs constraint for the tau0-thresholded "
                                       "baseline and the calibrated linear detector");
    add_common(far, far_args, false);
    CLI::App* learn = app.add_subcommand("learn", "Run the offline adaptation, dump JSON report");
    add_common(learn, learn_args, false);
    CLI::App* calibrate =
        app.add_subcommand("calibrate", "Calibrated thresholds per alpha, JSON");
    add_common(calibrate, calibrate_args, false);
    CLI::App* validate =
        app.add_subcommand("validate-convergence", "Contraction report for trained weights");
    add_common(validate, validate_args);

    CLI11_PARSE(app, argc, argv);

    try {
        if (simulate->parsed()) {
            const auto config = resolve_config(simulate_args);
            const auto window = linbp::make_window(config.scenario, config.seed, 0, config.slots);
            emit(simulate_args, linbp::slots_csv(config.scenario, window));
        } else if (roc->parsed()) {
            const auto config = resolve_config(roc_args);
            emit(roc_args, linbp::to_csv(linbp::run_roc(config)));
        } else if (far->parsed()) {
            const auto config = resolve_config(far_args);
            const auto rows = linbp::run_far_sweep(config);
            emit(far_args, linbp::to_csv(rows));
            if (far_args.strict) {
                const auto violations = linbp::far_band_violations(rows);
                if (!violations.empty()) {
                    for (const auto& row : violations)
                        std::cerr << "band violation: node " << row.node << " alpha "
                                  << row.alpha << " far " << row.far << '\n';
                    return 3;
                }
            }
        } else if (learn->parsed()) {
            const auto config = resolve_config(learn_args);
            emit(learn_args, linbp::learn_report(config).dump(2) + "\n");
        } else if (calibrate->parsed()) {
            const auto config = resolve_config(calibrate_args);
            emit(calibrate_args, linbp::calibrate_report(config).dump(2) + "\n");
        } else if (validate->parsed()) {
            const auto config = resolve_config(validate_args);
            emit(validate_args, linbp::validate_convergence(config).dump(2) + "\n");
        }
    } catch (const linbp::ConfigError& err) {
        std::cerr << "config error: " << err.what() << '\n';
        return 1;
    } catch (const linbp::NumericalError& err) {
        std::cerr << "numerical failure: " << err.what() << '\n';
        return 2;
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << '\n';
        return 2;
    }
    return 0;
}
