#include "linbp/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <thread>

#include "linbp/errors.hpp"
#include "linbp/fusion_optimizer.hpp"
#include "linbp/math.hpp"

namespace linbp {

namespace {

using nlohmann::json;

void parallel_chunks(int n, const std::function<void(int, int)>& run) {
    int workers = static_cast<int>(std::thread::hardware_concurrency());
    workers = std::clamp(workers, 1, 8);
    if (n < 512 || workers <= 1) {
        run(0, n);
        return;
    }
    std::vector<std::thread> pool;
    const int chunk = (n + workers - 1) / workers;
    for (int w = 0; w < workers; ++w) {
        const int begin = w * chunk;
        const int end = std::min(n, begin + chunk);
        if (begin >= end)
            break;
        pool.emplace_back(run, begin, end);
    }
    for (auto& t : pool)
        t.join();
}

constexpr std::uint64_t kPurposeTrain = 0, kPurposeEval = 1;

std::uint64_t make_salt(std::uint64_t purpose, std::uint64_t alpha_idx, std::uint64_t variant_idx) {
    return (alpha_idx << 24) | (variant_idx << 8) | purpose;
}

std::string format_zeta(double zeta) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", zeta);
    return buf;
}

std::string csv_escape(const std::string& field) {
    if (field.find_first_of(",\"\n") == std::string::npos)
        return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"')
            out += '"';
        out += c;
    }
    out += '"';
    return out;
}

std::string fmt(const char* format, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, format, v);
    return buf;
}

void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where,
                bool strict, std::vector<std::string>& warnings) {
    for (const auto& item : obj.items()) {
        if (allowed.count(item.key()))
            continue;
        const std::string msg = "unknown config key '" + where + item.key() + "'";
        if (strict)
            throw ConfigError(msg);
        warnings.push_back(msg);
    }
}

std::vector<std::vector<std::uint8_t>> window_labels_local(const std::vector<SlotRecord>& window,
                                                           const std::vector<double>& tau) {
    std::vector<std::vector<std::uint8_t>> labels(window.size());
    for (std::size_t t = 0; t < window.size(); ++t) {
        labels[t].resize(tau.size());
        for (std::size_t j = 0; j < tau.size(); ++j)
            labels[t][j] = window[t].gamma[j] > tau[j] ? 1 : 0;
    }
    return labels;
}

std::vector<std::vector<double>> window_gamma(const std::vector<SlotRecord>& window) {
    std::vector<std::vector<double>> gamma(window.size());
    for (std::size_t t = 0; t < window.size(); ++t)
        gamma[t] = window[t].gamma;
    return gamma;
}

}  // namespace

void ExperimentConfig::validate() {
    if (!seed_set)
        throw ConfigError("seed is required (determinism): set 'seed' or pass --seed");
    if (slots < 1)
        throw ConfigError("slots must be >= 1");
    if (!is_known_method(method))
        throw ConfigError("unknown method '" + method + "'");
    if (alpha_grid.empty())
        throw ConfigError("alpha_grid must not be empty");
    for (std::size_t i = 0; i < alpha_grid.size(); ++i) {
        if (!(alpha_grid[i] > 0.0 && alpha_grid[i] < 1.0))
            throw ConfigError("alpha_grid values must lie in (0,1)");
        if (i > 0 && alpha_grid[i] <= alpha_grid[i - 1])
            throw ConfigError("alpha_grid must be strictly increasing");
    }
    if (train.window_T < 2)
        throw ConfigError("train.T must be >= 2");
    if (train.kappa_max < 1)
        throw ConfigError("train.kappa_max must be >= 1");
    if (!(train.eta > 0.0))
        throw ConfigError("train.eta must be positive");
    if (!(train.zeta > 0.0))
        throw ConfigError("train.zeta must be positive");
    if (!(train.tau0_alpha > 0.0 && train.tau0_alpha < 1.0))
        throw ConfigError("train.tau0_alpha must lie in (0,1)");
    if (train.iterations < 1)
        throw ConfigError("train.iterations must be >= 1");
    for (double z : zeta_presets)
        if (!(z > 0.0))
            throw ConfigError("zeta_presets must be positive");
    if (!std::isnan(utrw_rho) && !(utrw_rho > 0.0 && utrw_rho <= 1.0))
        throw ConfigError("rho must lie in (0,1]");
    try {
        scenario.validate();
    } catch (const std::invalid_argument& err) {
        throw ConfigError(std::string("scenario: ") + err.what());
    }
    const int n = scenario.graph.node_count();
    if (!reward.empty() && static_cast<int>(reward.size()) != n)
        throw ConfigError("reward length must match node count");
    if (!cost.empty() && static_cast<int>(cost.size()) != n)
        throw ConfigError("cost length must match node count");
    if (!beta.empty() && static_cast<int>(beta.size()) != n)
        throw ConfigError("beta length must match node count");
    for (double b : beta)
        if (!(b > 0.0 && b < 1.0))
            throw ConfigError("beta values must lie in (0,1)");
}

bool is_known_method(const std::string& method) {
    return method == "local" || method == "bp" || method == "utrw" ||
           method == "linear_bp_oracle" || method == "linear_bp_blind";
}

ExperimentConfig default_config() {
    ExperimentConfig config;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    config.scenario.graph = build_graph(5, {{0, 1}, {1, 2}, {2, 3}, {3, 4}});
    config.scenario.pu_count = 2;
    config.scenario.snr_db = {
        {-5.0, nan}, {-8.0, nan}, {-10.0, -10.0}, {nan, -8.0}, {nan, -5.0}};
    config.scenario.noise_var.assign(5, 1.0);
    config.scenario.samples_per_slot = 100;
    config.scenario.occupancy_chain = make_occupancy_chain(2, 0.5, 0.9, 0.5);
    config.scenario.validate();
    return config;
}

ExperimentConfig parse_config(const json& doc, bool strict) {
    ExperimentConfig config = default_config();
    std::vector<std::string>& warnings = config.load_warnings;
    if (!doc.is_object())
        throw ConfigError("config root must be a JSON object");
    check_keys(doc,
               {"seed", "slots", "method", "alpha_grid", "scenario", "train", "zeta_presets",
                "rho", "reward", "cost", "beta", "interference_cap", "far_sweep_zeta"},
               "", strict, warnings);
    try {
        if (doc.contains("seed")) {
            config.seed = doc.at("seed").get<std::uint64_t>();
            config.seed_set = true;
        }
        if (doc.contains("slots"))
            config.slots = doc.at("slots").get<int>();
        if (doc.contains("method"))
            config.method = doc.at("method").get<std::string>();
        if (doc.contains("alpha_grid"))
            config.alpha_grid = doc.at("alpha_grid").get<std::vector<double>>();
        if (doc.contains("zeta_presets"))
            config.zeta_presets = doc.at("zeta_presets").get<std::vector<double>>();
        if (doc.contains("rho") && !doc.at("rho").is_null())
            config.utrw_rho = doc.at("rho").get<double>();
        if (doc.contains("reward") && !doc.at("reward").is_null())
            config.reward = doc.at("reward").get<std::vector<double>>();
        if (doc.contains("cost") && !doc.at("cost").is_null())
            config.cost = doc.at("cost").get<std::vector<double>>();
        if (doc.contains("beta") && !doc.at("beta").is_null())
            config.beta = doc.at("beta").get<std::vector<double>>();
        if (doc.contains("interference_cap") && !doc.at("interference_cap").is_null())
            config.interference_cap = doc.at("interference_cap").get<double>();
        if (doc.contains("far_sweep_zeta"))
            config.far_sweep_zeta = doc.at("far_sweep_zeta").get<double>();

        if (doc.contains("scenario")) {
            const json& sc = doc.at("scenario");
            check_keys(sc,
                       {"nodes", "edges", "pu_count", "snr_db", "noise_var", "K", "p_on",
                        "p_stay", "corr"},
                       "scenario.", strict, warnings);
            const int nodes = sc.value("nodes", config.scenario.graph.node_count());
            std::vector<std::pair<int, int>> edges = config.scenario.graph.edges();
            if (sc.contains("edges")) {
                edges.clear();
                for (const auto& e : sc.at("edges")) {
                    if (!e.is_array() || e.size() != 2)
                        throw ConfigError("scenario.edges entries must be pairs");
                    edges.emplace_back(e.at(0).get<int>(), e.at(1).get<int>());
                }
            }
            try {
                config.scenario.graph = build_graph(nodes, edges);
            } catch (const std::invalid_argument& err) {
                throw ConfigError(std::string("scenario.edges: ") + err.what());
            }
            if (sc.contains("pu_count"))
                config.scenario.pu_count = sc.at("pu_count").get<int>();
            if (sc.contains("snr_db")) {
                config.scenario.snr_db.clear();
                for (const auto& row : sc.at("snr_db")) {
                    std::vector<double> out;
                    for (const auto& cell : row)
                        out.push_back(cell.is_null()
                                          ? std::numeric_limits<double>::quiet_NaN()
                                          : cell.get<double>());
                    config.scenario.snr_db.push_back(std::move(out));
                }
            }
            if (sc.contains("noise_var")) {
                const json& nv = sc.at("noise_var");
                if (nv.is_number())
                    config.scenario.noise_var.assign(nodes, nv.get<double>());
                else
                    config.scenario.noise_var = nv.get<std::vector<double>>();
            } else if (nodes != static_cast<int>(config.scenario.noise_var.size())) {
                config.scenario.noise_var.assign(nodes, 1.0);
            }
            if (sc.contains("K"))
                config.scenario.samples_per_slot = sc.at("K").get<int>();
            const double p_on = sc.value("p_on", 0.5);
            const double p_stay = sc.value("p_stay", 0.9);
            const double corr = sc.value("corr", 0.5);
            try {
                config.scenario.occupancy_chain =
                    make_occupancy_chain(config.scenario.pu_count, p_on, p_stay, corr);
            } catch (const std::invalid_argument& err) {
                throw ConfigError(std::string("scenario occupancy: ") + err.what());
            }
        }

        if (doc.contains("train")) {
            const json& tr = doc.at("train");
            check_keys(tr,
                       {"T", "kappa_max", "eta", "zeta", "tau0_alpha", "iterations",
                        "normalize", "ridge"},
                       "train.", strict, warnings);
            config.train.window_T = tr.value("T", config.train.window_T);
            config.train.kappa_max = tr.value("kappa_max", config.train.kappa_max);
            config.train.eta = tr.value("eta", config.train.eta);
            config.train.zeta = tr.value("zeta", config.train.zeta);
            config.train.tau0_alpha = tr.value("tau0_alpha", config.train.tau0_alpha);
            config.train.iterations = tr.value("iterations", config.train.iterations);
            config.train.normalize = tr.value("normalize", config.train.normalize);
            config.train.ridge = tr.value("ridge", config.train.ridge);
        }
    } catch (const json::exception& err) {
        throw ConfigError(std::string("config parse: ") + err.what());
    }
    config.validate();
    return config;
}

ExperimentConfig load_config(const std::string& path, bool strict) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open config file: " + path);
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& err) {
        throw ConfigError("config is not valid JSON: " + std::string(err.what()));
    }
    return parse_config(doc, strict);
}

std::vector<SlotRecord> make_window(const Scenario& scenario, std::uint64_t seed,
                                    std::uint64_t salt, int slots) {
    // Occupancy is one sequential substream (Markov), burned in from all-off.
    Rng occupancy_rng(derive_seed(seed, salt * 2, 0));
    std::uint32_t state = 0;
    for (int i = 0; i < 128; ++i)
        state = step_occupancy(state, scenario.occupancy_chain, occupancy_rng);
    std::vector<std::uint32_t> occupancy(slots);
    for (int t = 0; t < slots; ++t) {
        state = step_occupancy(state, scenario.occupancy_chain, occupancy_rng);
        occupancy[t] = state;
    }

    std::vector<SlotRecord> window(slots);
    parallel_chunks(slots, [&](int begin, int end) {
        for (int t = begin; t < end; ++t) {
            Rng slot_rng(derive_seed(seed, salt * 2 + 1, static_cast<std::uint64_t>(t)));
            window[t] = sense_slot(scenario, occupancy[t], slot_rng);
        }
    });
    return window;
}

LocalDetector train_local(const Scenario& scenario, double alpha) {
    LocalDetector d;
    d.tau.resize(scenario.graph.node_count());
    for (int j = 0; j < scenario.graph.node_count(); ++j)
        d.tau[j] = tau0(scenario.noise_var[j], scenario.samples_per_slot, alpha);
    return d;
}

BpDetector train_bp(const Scenario& scenario, const std::vector<SlotRecord>& window,
                    double alpha, double zeta, BpVariant variant, int iterations) {
    const int n = scenario.graph.node_count();
    BpDetector d;
    d.variant = variant;
    d.iterations = iterations;
    d.shift = scenario.noise_var;
    d.threshold.resize(n);
    const std::vector<double> local_tau = train_local(scenario, alpha).tau;
    for (int j = 0; j < n; ++j)
        d.threshold[j] = local_tau[j] - scenario.noise_var[j];

    auto labels = window_labels_local(window, local_tau);
    FactorGraph learned = learn_couplings(labels, zeta, scenario.graph);

    // One relabeling pass with the learned couplings, then re-learn.
    d.graph = learned;
    for (std::size_t t = 0; t < window.size(); ++t)
        labels[t] = decide(d, window[t].gamma);
    d.graph = learn_couplings(labels, zeta, scenario.graph);
    return d;
}

LinearDetector train_linear_oracle(const Scenario& scenario,
                                   const std::vector<SlotRecord>& window, double alpha,
                                   const TrainParams& params) {
    const int n = scenario.graph.node_count();
    LinearDetector d;
    d.graph = scenario.graph;
    d.iterations = params.iterations;
    d.offset.assign(n, 0.0);
    d.scale.assign(n, 1.0);
    if (params.normalize) {
        for (int j = 0; j < n; ++j) {
            d.offset[j] = scenario.noise_var[j];
            d.scale[j] =
                scenario.noise_var[j] * std::sqrt(2.0 / scenario.samples_per_slot);
        }
    }

    std::vector<std::vector<double>> z(window.size(), std::vector<double>(n, 0.0));
    std::vector<std::vector<std::uint8_t>> truth(window.size());
    for (std::size_t t = 0; t < window.size(); ++t) {
        truth[t] = window[t].x;
        for (int j = 0; j < n; ++j)
            z[t][j] = (window[t].gamma[j] - d.offset[j]) / d.scale[j];
    }

    const ConditionalStats stats =
        estimate_conditional_stats(z, truth, scenario.graph, params.ridge);
    OptimizeResult opt = optimize_network(stats, scenario.graph,
                                          std::vector<double>(n, alpha),
                                          OptimizeMode::Decentralized);
    for (int j = 0; j < n; ++j) {
        if (std::isnan(opt.weights.thresholds[j])) {
            const double raw = tau0(scenario.noise_var[j], scenario.samples_per_slot, alpha);
            opt.weights.thresholds[j] = (raw - d.offset[j]) / d.scale[j];
        }
    }
    d.weights = opt.weights;
    return d;
}

LinearDetector train_linear_blind(const Scenario& scenario,
                                  const std::vector<SlotRecord>& window, double alpha,
                                  const TrainParams& params, AdaptationReport* report_out) {
    AdaptationConfig config;
    config.kappa_max = params.kappa_max;
    config.eta = params.eta;
    config.zeta = params.zeta;
    config.window_T = static_cast<int>(window.size());
    config.tau0_alpha = alpha;
    config.bp_iterations = params.iterations;
    config.normalize_inputs = params.normalize;
    config.ridge = params.ridge;

    AdaptationResult adapted = adaptive_linear_bp(
        window_gamma(window), scenario.noise_var, scenario.samples_per_slot, scenario.graph,
        config);

    LinearDetector d;
    d.graph = scenario.graph;
    d.iterations = params.iterations;
    d.offset = adapted.report.input_offset;
    d.scale = adapted.report.input_scale;
    d.weights = adapted.weights;

    // Calibrate the detection thresholds against the local reference at the
    // same false-alarm target, over the same window.
    const int n = scenario.graph.node_count();
    const std::vector<double> reference_tau = train_local(scenario, alpha).tau;
    std::vector<std::vector<double>> lambda(n, std::vector<double>(window.size(), 0.0));
    std::vector<std::vector<std::uint8_t>> reference(n,
                                                     std::vector<std::uint8_t>(window.size(), 0));
    for (std::size_t t = 0; t < window.size(); ++t) {
        std::vector<double> z(n);
        for (int j = 0; j < n; ++j)
            z[j] = (window[t].gamma[j] - d.offset[j]) / d.scale[j];
        const LinearResult out = linear_iterate(scenario.graph, d.weights, z, d.iterations);
        for (int j = 0; j < n; ++j) {
            lambda[j][t] = out.lambda[j];
            reference[j][t] = window[t].gamma[j] > reference_tau[j] ? 1 : 0;
        }
    }
    for (int j = 0; j < n; ++j)
        d.weights.thresholds[j] = calibrate_threshold(reference[j], lambda[j]);

    if (report_out)
        *report_out = std::move(adapted.report);
    return d;
}

std::vector<std::uint8_t> decide(const LocalDetector& d, const std::vector<double>& gamma) {
    std::vector<std::uint8_t> out(gamma.size());
    for (std::size_t j = 0; j < gamma.size(); ++j)
        out[j] = gamma[j] > d.tau[j] ? 1 : 0;
    return out;
}

std::vector<double> statistics(const LocalDetector& d, const std::vector<double>& gamma) {
    (void)d;
    return gamma;
}

std::vector<double> statistics(const BpDetector& d, const std::vector<double>& gamma) {
    std::vector<double> shifted(gamma.size());
    for (std::size_t j = 0; j < gamma.size(); ++j)
        shifted[j] = gamma[j] - d.shift[j];
    return bp_iterate(d.graph, shifted, d.variant, d.iterations).lambda;
}

std::vector<double> statistics(const LinearDetector& d, const std::vector<double>& gamma) {
    std::vector<double> z(gamma.size());
    for (std::size_t j = 0; j < gamma.size(); ++j)
        z[j] = (gamma[j] - d.offset[j]) / d.scale[j];
    return linear_iterate(d.graph, d.weights, z, d.iterations).lambda;
}

std::vector<std::uint8_t> decide(const BpDetector& d, const std::vector<double>& gamma) {
    std::vector<double> shifted(gamma.size());
    for (std::size_t j = 0; j < gamma.size(); ++j)
        shifted[j] = gamma[j] - d.shift[j];
    const BpResult out = bp_iterate(d.graph, shifted, d.variant, d.iterations);
    std::vector<std::uint8_t> bits(gamma.size());
    for (std::size_t j = 0; j < gamma.size(); ++j)
        bits[j] = out.lambda[j] >= d.threshold[j] ? 1 : 0;
    return bits;
}

std::vector<std::uint8_t> decide(const LinearDetector& d, const std::vector<double>& gamma) {
    std::vector<double> z(gamma.size());
    for (std::size_t j = 0; j < gamma.size(); ++j)
        z[j] = (gamma[j] - d.offset[j]) / d.scale[j];
    const LinearResult out = linear_iterate(d.graph, d.weights, z, d.iterations);
    std::vector<std::uint8_t> bits(gamma.size());
    for (std::size_t j = 0; j < gamma.size(); ++j)
        bits[j] = out.lambda[j] >= d.weights.thresholds[j] ? 1 : 0;
    return bits;
}

template <class Detector>
std::vector<NodeRates> evaluate(const Scenario& scenario, const Detector& detector,
                                const std::vector<SlotRecord>& slots) {
    const int n = scenario.graph.node_count();
    const int T = static_cast<int>(slots.size());
    std::vector<std::vector<std::uint8_t>> decisions(T);
    parallel_chunks(T, [&](int begin, int end) {
        for (int t = begin; t < end; ++t)
            decisions[t] = decide(detector, slots[t].gamma);
    });

    std::vector<NodeRates> rates(n);
    for (int t = 0; t < T; ++t) {
        for (int j = 0; j < n; ++j) {
            if (slots[t].x[j]) {
                ++rates[j].h1_slots;
                rates[j].detections += decisions[t][j];
            } else {
                ++rates[j].h0_slots;
                rates[j].false_alarms += decisions[t][j];
            }
        }
    }
    return rates;
}

template std::vector<NodeRates> evaluate<LocalDetector>(const Scenario&, const LocalDetector&,
                                                        const std::vector<SlotRecord>&);
template std::vector<NodeRates> evaluate<BpDetector>(const Scenario&, const BpDetector&,
                                                     const std::vector<SlotRecord>&);
template std::vector<NodeRates> evaluate<LinearDetector>(const Scenario&, const LinearDetector&,
                                                         const std::vector<SlotRecord>&);

namespace {

struct MethodVariant {
    std::string label;
    std::string base;
    double zeta = 0.0;
};

std::vector<MethodVariant> expand_method(const ExperimentConfig& config) {
    std::vector<MethodVariant> variants;
    if (config.method == "bp" || config.method == "utrw") {
        for (double z : config.zeta_presets)
            variants.push_back({config.method + "_z" + format_zeta(z), config.method, z});
    } else {
        variants.push_back({config.method, config.method, config.train.zeta});
    }
    return variants;
}

BpVariant bp_variant_for(const ExperimentConfig& config) {
    if (config.method == "utrw" ) {
        const double rho = std::isnan(config.utrw_rho) ? optimal_eap(config.scenario.graph)
                                                       : config.utrw_rho;
        return BpVariant::utrw(rho);
    }
    return BpVariant::plain();
}

std::vector<NodeRates> run_point(const ExperimentConfig& config, const MethodVariant& variant,
                                 double alpha, std::uint64_t train_salt,
                                 std::uint64_t eval_salt) {
    const std::vector<SlotRecord> eval_window =
        make_window(config.scenario, config.seed, eval_salt, config.slots);
    if (variant.base == "local") {
        return evaluate(config.scenario, train_local(config.scenario, alpha), eval_window);
    }
    const std::vector<SlotRecord> train_window =
        make_window(config.scenario, config.seed, train_salt, config.train.window_T);
    if (variant.base == "bp" || variant.base == "utrw") {
        const BpDetector d =
            train_bp(config.scenario, train_window, alpha, variant.zeta,
                     bp_variant_for(config), config.train.iterations);
        return evaluate(config.scenario, d, eval_window);
    }
    if (variant.base == "linear_bp_oracle") {
        const LinearDetector d =
            train_linear_oracle(config.scenario, train_window, alpha, config.train);
        return evaluate(config.scenario, d, eval_window);
    }
    const LinearDetector d =
        train_linear_blind(config.scenario, train_window, alpha, config.train);
    return evaluate(config.scenario, d, eval_window);
}

}  // namespace

std::vector<RocRow> run_roc(const ExperimentConfig& config) {
    std::vector<RocRow> rows;
    const auto variants = expand_method(config);
    for (std::size_t a = 0; a < config.alpha_grid.size(); ++a) {
        const double alpha = config.alpha_grid[a];
        for (std::size_t v = 0; v < variants.size(); ++v) {
            const auto rates = run_point(config, variants[v], alpha,
                                         make_salt(kPurposeTrain, a, v),
                                         make_salt(kPurposeEval, a, v));
            for (int j = 0; j < config.scenario.graph.node_count(); ++j)
                rows.push_back({variants[v].label, j, alpha, rates[j].far(), rates[j].pd(),
                                config.slots, config.seed});
        }
    }
    return rows;
}

std::vector<FarRow> run_far_sweep(const ExperimentConfig& config) {
    std::vector<FarRow> rows;
    ExperimentConfig bp_config = config;
    bp_config.method = "bp";
    bp_config.zeta_presets = {config.far_sweep_zeta};
    ExperimentConfig blind_config = config;
    blind_config.method = "linear_bp_blind";

    const MethodVariant bp_variant{"bp_tau0", "bp", config.far_sweep_zeta};
    const MethodVariant blind_variant{"linear_bp_calibrated", "linear_bp_blind",
                                      config.train.zeta};
    for (std::size_t a = 0; a < config.alpha_grid.size(); ++a) {
        const double alpha = config.alpha_grid[a];
        const auto bp_rates = run_point(bp_config, bp_variant, alpha,
                                        make_salt(kPurposeTrain, a, 0),
                                        make_salt(kPurposeEval, a, 0));
        const auto blind_rates = run_point(blind_config, blind_variant, alpha,
                                           make_salt(kPurposeTrain, a, 1),
                                           make_salt(kPurposeEval, a, 1));
        for (int j = 0; j < config.scenario.graph.node_count(); ++j) {
            rows.push_back({"bp_tau0", j, alpha, bp_rates[j].far(), config.slots, config.seed});
            rows.push_back({"linear_bp_calibrated", j, alpha, blind_rates[j].far(),
                            config.slots, config.seed});
        }
    }
    return rows;
}

std::vector<FarRow> far_band_violations(const std::vector<FarRow>& rows) {
    std::vector<FarRow> violations;
    for (const auto& row : rows) {
        if (row.method != "linear_bp_calibrated")
            continue;
        const double sigma = std::sqrt(row.alpha * (1.0 - row.alpha) / row.slots);
        if (row.far > row.alpha + 3.0 * sigma)
            violations.push_back(row);
    }
    return violations;
}

nlohmann::json validate_convergence(const ExperimentConfig& config) {
    ExperimentConfig cfg = config;
    if (cfg.method != "linear_bp_blind" && cfg.method != "linear_bp_oracle")
        cfg.method = "linear_bp_blind";
    const double alpha = cfg.train.tau0_alpha;
    const auto train_window =
        make_window(cfg.scenario, cfg.seed, make_salt(kPurposeTrain, 0, 0), cfg.train.window_T);
    const LinearDetector d =
        cfg.method == "linear_bp_oracle"
            ? train_linear_oracle(cfg.scenario, train_window, alpha, cfg.train)
            : train_linear_blind(cfg.scenario, train_window, alpha, cfg.train);

    const ContractionReport report = check_contraction(cfg.scenario.graph, d.weights);
    const double bound = convergence_bound(cfg.scenario.graph);
    const EdgeIndex edges(cfg.scenario.graph);

    json nodes = json::array();
    for (int j = 0; j < cfg.scenario.graph.node_count(); ++j) {
        double worst = 0.0;
        for (int k : cfg.scenario.graph.neighbors(j))
            worst = std::max(worst,
                             std::abs(d.weights.edge_coeffs[edges.index_of(k, j)]));
        nodes.push_back({{"node", j},
                         {"max_abs_coefficient", worst},
                         {"certified", !(worst >= bound)},
                         {"margin", bound - worst}});
    }
    return json{{"method", cfg.method},
                {"alpha", alpha},
                {"seed", cfg.seed},
                {"bound_per_coefficient", std::isinf(bound) ? json() : json(bound)},
                {"infinity_norm", report.infinity_norm},
                {"spectral_radius_estimate", report.spectral_radius},
                {"certified", report.certified},
                {"nodes", nodes}};
}

nlohmann::json learn_report(const ExperimentConfig& config) {
    const auto window = make_window(config.scenario, config.seed, make_salt(kPurposeTrain, 0, 0),
                                    config.train.window_T);
    AdaptationReport report;
    const LinearDetector d = train_linear_blind(config.scenario, window,
                                                config.train.tau0_alpha, config.train, &report);

    // Per-pass window rates against ground truth.
    json passes = json::array();
    for (std::size_t k = 0; k < report.labels_per_kappa.size(); ++k) {
        const auto& labels = report.labels_per_kappa[k];
        const int n = config.scenario.graph.node_count();
        std::vector<NodeRates> rates(n);
        for (std::size_t t = 0; t < labels.size(); ++t)
            for (int j = 0; j < n; ++j) {
                if (window[t].x[j]) {
                    ++rates[j].h1_slots;
                    rates[j].detections += labels[t][j];
                } else {
                    ++rates[j].h0_slots;
                    rates[j].false_alarms += labels[t][j];
                }
            }
        json per_node = json::array();
        for (int j = 0; j < n; ++j)
            per_node.push_back({{"node", j}, {"far", rates[j].far()}, {"pd", rates[j].pd()}});
        passes.push_back({{"pass", k}, {"rates", per_node}});
    }

    json fallback = json::array();
    for (std::size_t j = 0; j < report.fallback_used.size(); ++j) {
        json per_member = json::array();
        for (auto v : report.fallback_used[j])
            per_member.push_back(static_cast<bool>(v));
        fallback.push_back({{"node", j},
                            {"forced", static_cast<bool>(report.node_forced_fallback[j])},
                            {"used_reference", per_member}});
    }

    json diagnostics = json::array();
    for (std::size_t j = 0; j < report.node_diagnostics.size(); ++j) {
        const NodeDiagnostics& d = report.node_diagnostics[j];
        diagnostics.push_back({{"node", j},
                               {"deflection", d.deflection},
                               {"certification_margin", d.margin},
                               {"pattern_fallbacks", d.pattern_fallbacks},
                               {"optimizer_fallback", d.fallback}});
    }

    const ContractionReport contraction = check_contraction(config.scenario.graph, d.weights);
    return json{{"seed", config.seed},
                {"tau0_alpha", config.train.tau0_alpha},
                {"passes_run", report.passes_run},
                {"kappa_deltas", report.kappa_deltas},
                {"window_rates_per_pass", passes},
                {"learned_couplings", report.learned_couplings},
                {"edge_coefficients", d.weights.edge_coeffs},
                {"self_weights", d.weights.self_weights},
                {"calibrated_thresholds", d.weights.thresholds},
                {"fallback", fallback},
                {"optimizer_diagnostics", diagnostics},
                {"contraction", {{"certified", contraction.certified},
                                 {"infinity_norm", contraction.infinity_norm},
                                 {"spectral_radius_estimate", contraction.spectral_radius}}}};
}

nlohmann::json calibrate_report(const ExperimentConfig& config) {
    json points = json::array();
    for (std::size_t a = 0; a < config.alpha_grid.size(); ++a) {
        const double alpha = config.alpha_grid[a];
        const auto window = make_window(config.scenario, config.seed,
                                        make_salt(kPurposeTrain, a, 0), config.train.window_T);
        const LinearDetector d =
            train_linear_blind(config.scenario, window, alpha, config.train);
        json nodes = json::array();
        for (int j = 0; j < config.scenario.graph.node_count(); ++j)
            nodes.push_back({{"node", j}, {"threshold", d.weights.thresholds[j]}});
        points.push_back({{"alpha", alpha}, {"thresholds", nodes}});
    }
    return json{{"seed", config.seed}, {"calibration", points}};
}

std::string to_csv(const std::vector<RocRow>& rows) {
    std::ostringstream out;
    out << "method,node,alpha,far,pd,slots,seed\n";
    for (const auto& row : rows)
        out << csv_escape(row.method) << ',' << row.node << ',' << fmt("%.6g", row.alpha) << ','
            << fmt("%.6f", row.far) << ',' << fmt("%.6f", row.pd) << ',' << row.slots << ','
            << row.seed << '\n';
    return out.str();
}

std::string to_csv(const std::vector<FarRow>& rows) {
    std::ostringstream out;
    out << "method,node,alpha,far,slots,seed\n";
    for (const auto& row : rows)
        out << csv_escape(row.method) << ',' << row.node << ',' << fmt("%.6g", row.alpha) << ','
            << fmt("%.6f", row.far) << ',' << row.slots << ',' << row.seed << '\n';
    return out.str();
}

std::string slots_csv(const Scenario& scenario, const std::vector<SlotRecord>& slots) {
    std::ostringstream out;
    const int n = scenario.graph.node_count();
    out << "slot,u";
    for (int j = 0; j < n; ++j)
        out << ",x" << j;
    for (int j = 0; j < n; ++j)
        out << ",gamma" << j;
    out << '\n';
    for (std::size_t t = 0; t < slots.size(); ++t) {
        out << t << ',' << slots[t].u;
        for (int j = 0; j < n; ++j)
            out << ',' << static_cast<int>(slots[t].x[j]);
        for (int j = 0; j < n; ++j)
            out << ',' << fmt("%.9g", slots[t].gamma[j]);
        out << '\n';
    }
    return out.str();
}

void write_text_file(const std::string& path, const std::string& contents) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw ConfigError("cannot open output file: " + path);
    out << contents;
    if (!out)
        throw ConfigError("failed writing output file: " + path);
}

}  // namespace linbp
