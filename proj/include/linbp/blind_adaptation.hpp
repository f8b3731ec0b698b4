#pragma once
// Offline adaptive learning of the linear fusion weights from a window of
// raw energy statistics, with no ground-truth labels, plus the quantile
// calibration that bounds the false-alarm rate against a reference detector.

#include <cstdint>
#include <vector>

#include "linbp/factor_graph.hpp"
#include "linbp/fusion_optimizer.hpp"
#include "linbp/linear_bp.hpp"

namespace linbp {

struct AdaptationConfig {
    int kappa_max = 4;        // offline estimate/optimize/re-detect passes
    double eta = 0.5;         // fallback ratio; see use_bp_coefficient below
    double zeta = 0.4;        // learning factor for the coupling reference
    int window_T = 2000;      // documented default; the window passed in rules
    double tau0_alpha = 0.1;  // false-alarm target of the initial local labels
    int bp_iterations = 3;    // message iterations of the relabeling engine
    bool normalize_inputs = true;  // standardize gamma by known noise moments
    double ridge = 1e-6;
    bool early_stop = false;        // optional stop on stagnating coefficients
    double early_stop_delta = 1e-4;

    void validate() const;
};

struct AdaptationReport {
    // Standardization applied to gamma before the engine (identity when
    // normalize_inputs is off). Evaluation must apply the same transform.
    std::vector<double> input_offset, input_scale;
    std::vector<double> tau0_window;  // initial labeling thresholds (engine domain)

    // labels_per_kappa[0] is the initial local labeling; entry k the labels
    // after the k-th optimize/re-detect pass.
    std::vector<std::vector<std::vector<std::uint8_t>>> labels_per_kappa;
    std::vector<FusionWeights> weights_per_kappa;

    FusionWeights optimizer_weights;   // final optimizer output
    FusionWeights reference_weights;   // coupling-derived weights (learned couplings)
    std::vector<double> learned_couplings;  // by undirected edge id

    std::vector<std::vector<std::uint8_t>> fallback_used;  // [node][member]
    std::vector<std::uint8_t> node_forced_fallback;        // single-label windows
    std::vector<double> kappa_deltas;  // max |coefficient change| per pass
    std::vector<NodeDiagnostics> node_diagnostics;  // from the final pass
    int passes_run = 0;
};

struct AdaptationResult {
    FusionWeights weights;
    AdaptationReport report;
};

// Per-coefficient choice between the learned-coupling reference and the
// optimizer output. Monotone in eta: eta = +inf always keeps the reference,
// eta = 0 always keeps the optimizer. For finite positive eta the reference
// wins when the optimizer coefficient is smaller than eta times the
// reference magnitude (estimation-starved) or disagrees with it in sign.
bool use_bp_coefficient(double reference, double optimized, double eta);

// The offline loop: initial labels from the noise-only thresholds at
// tau0_alpha, then kappa_max rounds of estimate -> per-node deflection
// optimization -> relabel the window with the linear engine. Afterwards,
// couplings are learned from the final labels at factor zeta and the
// per-coefficient fallback picks between the two weight sets. Thresholds in
// the returned weights are the last window-labeling thresholds; detection
// thresholds are expected to come from calibrate_threshold.
AdaptationResult adaptive_linear_bp(const std::vector<std::vector<double>>& gamma_window,
                                    const std::vector<double>& noise_var, int samples_per_slot,
                                    const FactorGraph& graph, const AdaptationConfig& config);

// Smallest sample value tau with empirical Pr{lambda > tau} <= mean of the
// reference decisions (generalized inverse of the exceedance function).
// Returns +inf when the reference never fires and -inf when it always fires.
double calibrate_threshold(const std::vector<std::uint8_t>& reference_decisions,
                           const std::vector<double>& lambda_samples);

}  // namespace linbp
