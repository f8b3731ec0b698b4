#include "linbp/blind_adaptation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "linbp/bp_engine.hpp"
#include "linbp/errors.hpp"
#include "linbp/radio_env.hpp"

namespace linbp {

void AdaptationConfig::validate() const {
    if (kappa_max < 1)
        throw std::invalid_argument("AdaptationConfig: kappa_max must be >= 1");
    if (!(eta >= 0.0))
        throw std::invalid_argument("AdaptationConfig: eta must be nonnegative");
    if (!(zeta > 0.0))
        throw std::invalid_argument("AdaptationConfig: zeta must be positive");
    if (!(tau0_alpha > 0.0 && tau0_alpha < 1.0))
        throw std::invalid_argument("AdaptationConfig: tau0_alpha must lie in (0,1)");
    if (bp_iterations < 1)
        throw std::invalid_argument("AdaptationConfig: bp_iterations must be >= 1");
}

bool use_bp_coefficient(double reference, double optimized, double eta) {
    if (eta == 0.0)
        return false;
    if (std::isinf(eta))
        return true;
    if (reference == 0.0 && optimized == 0.0)
        return false;
    if (reference != 0.0 && optimized != 0.0 &&
        std::signbit(reference) != std::signbit(optimized))
        return true;  // a scalar ratio is meaningless across signs
    return std::abs(optimized) < eta * std::abs(reference);
}

namespace {

double max_coefficient_delta(const FusionWeights& a, const FusionWeights& b) {
    double delta = 0.0;
    for (std::size_t i = 0; i < a.edge_coeffs.size(); ++i)
        delta = std::max(delta, std::abs(a.edge_coeffs[i] - b.edge_coeffs[i]));
    for (std::size_t i = 0; i < a.self_weights.size(); ++i)
        delta = std::max(delta, std::abs(a.self_weights[i] - b.self_weights[i]));
    return delta;
}

}  // namespace

AdaptationResult adaptive_linear_bp(const std::vector<std::vector<double>>& gamma_window,
                                    const std::vector<double>& noise_var, int samples_per_slot,
                                    const FactorGraph& graph, const AdaptationConfig& config) {
    config.validate();
    const int n = graph.node_count();
    const int T = static_cast<int>(gamma_window.size());
    if (T < 1)
        throw std::invalid_argument("adaptive_linear_bp: empty window");
    if (static_cast<int>(noise_var.size()) != n)
        throw std::invalid_argument("adaptive_linear_bp: noise_var size mismatch");
    if (samples_per_slot < 1)
        throw std::invalid_argument("adaptive_linear_bp: samples_per_slot must be >= 1");

    AdaptationResult result{FusionWeights::zeros(graph), {}};
    AdaptationReport& report = result.report;

    // Standardize by the known noise-only moments so the engine operates on
    // zero-mean unit-variance inputs; the initial thresholds carry the same
    // affine map, leaving the local decisions unchanged.
    report.input_offset.assign(n, 0.0);
    report.input_scale.assign(n, 1.0);
    if (config.normalize_inputs) {
        for (int j = 0; j < n; ++j) {
            report.input_offset[j] = noise_var[j];
            report.input_scale[j] = noise_var[j] * std::sqrt(2.0 / samples_per_slot);
        }
    }
    std::vector<std::vector<double>> window(T, std::vector<double>(n, 0.0));
    for (int t = 0; t < T; ++t) {
        if (static_cast<int>(gamma_window[t].size()) != n)
            throw std::invalid_argument("adaptive_linear_bp: window row width mismatch");
        for (int j = 0; j < n; ++j)
            window[t][j] =
                (gamma_window[t][j] - report.input_offset[j]) / report.input_scale[j];
    }

    report.tau0_window.resize(n);
    for (int j = 0; j < n; ++j) {
        const double raw = tau0(noise_var[j], samples_per_slot, config.tau0_alpha);
        report.tau0_window[j] = (raw - report.input_offset[j]) / report.input_scale[j];
    }

    std::vector<std::vector<std::uint8_t>> labels(T, std::vector<std::uint8_t>(n, 0));
    for (int t = 0; t < T; ++t)
        for (int j = 0; j < n; ++j)
            labels[t][j] = window[t][j] > report.tau0_window[j] ? 1 : 0;
    report.labels_per_kappa.push_back(labels);

    const std::vector<double> alpha(n, config.tau0_alpha);
    FusionWeights current = FusionWeights::from_couplings(graph);
    current.thresholds = report.tau0_window;
    std::vector<std::uint8_t> insufficient(n, 0);

    // The initial local labels double as the calibration reference: their
    // alarm rate is pinned near tau0_alpha by construction.
    const std::vector<std::vector<std::uint8_t>> reference = labels;
    std::vector<std::uint8_t> reference_column(T);
    std::vector<double> lambda_column(T);

    // Known noise-floor moments of the standardized self statistic under
    // occupancy 0: mean, variance, and cross-covariances with any neighbor.
    std::vector<double> h0_self_mean(n), h0_self_sd(n);
    for (int j = 0; j < n; ++j) {
        h0_self_mean[j] = (noise_var[j] - report.input_offset[j]) / report.input_scale[j];
        h0_self_sd[j] =
            noise_var[j] * std::sqrt(2.0 / samples_per_slot) / report.input_scale[j];
    }

    for (int kappa = 1; kappa <= config.kappa_max; ++kappa) {
        ConditionalStats stats = estimate_conditional_stats(window, labels, graph, config.ridge);
        // The label-conditioned self moments under v=0 are selection-biased
        // (the labels were thresholded from the very same samples). The
        // truth-conditioned values are known from the measured noise floor;
        // substitute them. Under occupancy 0 the self statistic is pure
        // noise, so its cross-covariances vanish as well.
        for (int j = 0; j < n; ++j) {
            NodeConditional& ns = stats.nodes[j];
            if (ns.count[0] < 2)
                continue;
            ns.mean[0](0) = h0_self_mean[j];
            ns.cov[0].row(0).setZero();
            ns.cov[0].col(0).setZero();
            ns.cov[0](0, 0) = h0_self_sd[j] * h0_self_sd[j];
        }
        OptimizeResult opt = optimize_network(stats, graph, alpha, OptimizeMode::Decentralized);
        for (int j = 0; j < n; ++j)
            insufficient[j] = opt.report.nodes[j].insufficient ? 1 : 0;
        report.node_diagnostics = opt.report.nodes;

        // Relabel the window with the new weights. The labeling thresholds
        // come from calibration against the local reference, not from the
        // one-hop model: the model thresholds drift under label noise, and
        // only the labeling uses these values anyway.
        std::vector<std::vector<double>> lambda(T, std::vector<double>(n, 0.0));
        for (int t = 0; t < T; ++t)
            lambda[t] = linear_iterate(graph, opt.weights, window[t], config.bp_iterations).lambda;
        for (int j = 0; j < n; ++j) {
            for (int t = 0; t < T; ++t) {
                reference_column[t] = reference[t][j];
                lambda_column[t] = lambda[t][j];
            }
            opt.weights.thresholds[j] = calibrate_threshold(reference_column, lambda_column);
        }
        for (int t = 0; t < T; ++t)
            for (int j = 0; j < n; ++j)
                labels[t][j] = lambda[t][j] >= opt.weights.thresholds[j] ? 1 : 0;

        const double delta = max_coefficient_delta(opt.weights, current);
        report.kappa_deltas.push_back(delta);
        current = opt.weights;
        report.weights_per_kappa.push_back(current);
        report.passes_run = kappa;
        report.labels_per_kappa.push_back(labels);

        if (config.early_stop && delta < config.early_stop_delta)
            break;
    }

    // Coupling reference from the final window decisions.
    const FactorGraph learned = learn_couplings(labels, config.zeta, graph);
    report.learned_couplings.resize(learned.edge_count());
    for (int e = 0; e < learned.edge_count(); ++e)
        report.learned_couplings[e] = learned.coupling_by_id(e);
    report.reference_weights = FusionWeights::from_couplings(learned);
    report.reference_weights.thresholds = current.thresholds;
    report.optimizer_weights = current;

    result.weights = current;
    report.fallback_used.assign(n, {});
    report.node_forced_fallback.assign(n, 0);
    for (int j = 0; j < n; ++j) {
        const std::vector<double> opt_vec = node_fusion_vector(graph, current, j);
        const std::vector<double> ref_vec =
            node_fusion_vector(graph, report.reference_weights, j);
        std::vector<double> emitted(opt_vec.size());
        report.fallback_used[j].assign(opt_vec.size(), 0);
        report.node_forced_fallback[j] = insufficient[j];
        for (std::size_t p = 0; p < opt_vec.size(); ++p) {
            const bool take_reference =
                insufficient[j] || use_bp_coefficient(ref_vec[p], opt_vec[p], config.eta);
            report.fallback_used[j][p] = take_reference ? 1 : 0;
            emitted[p] = take_reference ? ref_vec[p] : opt_vec[p];
        }
        set_node_fusion_vector(graph, result.weights, j, emitted);
    }
    return result;
}

double calibrate_threshold(const std::vector<std::uint8_t>& reference_decisions,
                           const std::vector<double>& lambda_samples) {
    const std::size_t T = lambda_samples.size();
    if (T == 0 || reference_decisions.size() != T)
        throw std::invalid_argument("calibrate_threshold: empty or mismatched inputs");

    std::size_t fires = 0;
    for (auto d : reference_decisions)
        fires += d ? 1 : 0;
    if (fires == 0)
        return std::numeric_limits<double>::infinity();
    if (fires == T)
        return -std::numeric_limits<double>::infinity();
    const double target = static_cast<double>(fires) / static_cast<double>(T);

    std::vector<double> sorted = lambda_samples;
    std::sort(sorted.begin(), sorted.end());
    // exceedance of sorted[i] = (count of samples strictly greater) / T;
    // walk values in ascending order and take the first that meets target.
    std::size_t i = 0;
    while (i < T) {
        std::size_t upper = i;
        while (upper + 1 < T && sorted[upper + 1] == sorted[i])
            ++upper;
        const double exceed = static_cast<double>(T - upper - 1) / static_cast<double>(T);
        if (exceed <= target)
            return sorted[i];
        i = upper + 1;
    }
    return sorted.back();
}

}  // namespace linbp
