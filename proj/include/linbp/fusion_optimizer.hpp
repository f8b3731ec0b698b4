#pragma once
// Conditional statistics of the local energy LLRs, deflection-coefficient
// optimization under the convergence bound, Gaussian-mixture false-alarm /
// detection probabilities, threshold selection, and aggregate network
// metrics.

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "linbp/factor_graph.hpp"
#include "linbp/linear_bp.hpp"

namespace linbp {

// Which label patterns condition the mixture: the node's one-hop neighbors,
// or every other node (feasible only for small networks).
enum class PatternScope : std::uint8_t { Neighborhood, Full };

struct PatternCell {
    double prob = 0.0;
    int count = 0;
    Eigen::VectorXd mean;        // of gamma over the node's fusion members
    Eigen::MatrixXd cov;         // ridged; valid only when moments_valid
    bool moments_valid = false;  // needs >= 2 samples
};

struct NodeConditional {
    std::vector<int> members;        // fusion members: [node, neighbors...]
    std::vector<int> pattern_nodes;  // nodes the pattern bits refer to
    std::array<int, 2> count{0, 0};
    std::array<bool, 2> insufficient{true, true};  // < 2 samples for that label
    std::array<Eigen::VectorXd, 2> mean;
    std::array<Eigen::MatrixXd, 2> cov;  // ridged
    std::array<std::map<std::uint32_t, PatternCell>, 2> patterns;
};

struct ConditionalStats {
    int window_length = 0;
    double ridge = 0.0;
    PatternScope scope = PatternScope::Neighborhood;
    std::vector<NodeConditional> nodes;
};

// Empirical conditional moments over the window, conditioning each node on
// its own label column. ridge is relative: every covariance receives
// + ridge * trace/dim on the diagonal. Nodes with fewer than two samples of
// a label value are flagged insufficient rather than rejected. Full scope
// requires at most 12 nodes.
ConditionalStats estimate_conditional_stats(const std::vector<std::vector<double>>& gamma_window,
                                            const std::vector<std::vector<std::uint8_t>>& labels,
                                            const FactorGraph& graph, double ridge = 1e-6,
                                            PatternScope scope = PatternScope::Neighborhood);

// (E[lambda|1] - E[lambda|0]) / sqrt(Var[lambda|0]) for lambda = c.gamma
// over the node's fusion members. Throws on nonpositive variance.
double deflection(const std::vector<double>& coeffs, const ConditionalStats& stats, int node);

// Closed-form deflection maximizer cov0^{-1} (mean1 - mean0), rescaled so
// the self weight is 1 when the solution's self entry is positive (positive
// scaling only, so the deflection value is preserved), then uniformly shrunk
// until every non-self coefficient respects (1-eps) * bound. bound may be
// +inf (skip). Throws NumericalError on insufficient stats, singular
// covariance, or zero information.
std::vector<double> maximize_deflection(const ConditionalStats& stats, int node, double bound);

// Gaussian-mixture exceedance Pr{lambda > tau | x_node = v} where lambda is
// the truncated fusion c.gamma and the mixture runs over observed label
// patterns. Patterns lacking moment estimates contribute through the global
// conditional moments; each such use increments *pattern_fallbacks.
double detection_prob(double tau, int v, const std::vector<double>& coeffs,
                      const ConditionalStats& stats, int node, PatternScope mode,
                      int* pattern_fallbacks = nullptr);

// Solves detection_prob(tau, 0, ...) = alpha by bisection to 1e-6 in
// probability, bracket grown geometrically from the mixture spread.
double threshold_for_alpha(const std::vector<double>& coeffs, const ConditionalStats& stats,
                           int node, double alpha, PatternScope mode,
                           int* pattern_fallbacks = nullptr);

struct AggregateMetrics {
    double throughput = 0.0;   // r' (1 - Pf)
    double interference = 0.0; // q' (1 - Pd)
    std::vector<double> reward, cost, pf, pd;
};

AggregateMetrics aggregate_metrics(const std::vector<double>& pf, const std::vector<double>& pd,
                                   const std::vector<double>& reward,
                                   const std::vector<double>& cost);

enum class OptimizeMode : std::uint8_t { Centralized, Decentralized };

struct OptimizeOptions {
    std::vector<double> reward;  // defaults to all-ones
    std::vector<double> cost;    // defaults to all-ones
    std::vector<double> beta;    // misdetection targets, reported only
    double interference_cap = std::numeric_limits<double>::infinity();
    PatternScope mode = PatternScope::Neighborhood;
    int max_tighten_rounds = 10;
    double tighten_factor = 0.9;
};

struct NodeDiagnostics {
    bool fallback = false;       // reverted to coupling-derived coefficients
    bool insufficient = false;   // one label value had < 2 window samples
    double deflection = 0.0;
    double margin = 0.0;         // bound - max non-self |c|
    int pattern_fallbacks = 0;
    std::string note;
};

struct OptimizeReport {
    std::vector<NodeDiagnostics> nodes;
    AggregateMetrics aggregate;   // centralized mode only
    bool feasible = true;
    int tighten_rounds = 0;
    std::vector<double> alpha_used;
    // Pd_j >= beta_j per node, filled in centralized mode when beta targets
    // are supplied; informational only.
    std::vector<std::uint8_t> beta_satisfied;
};

struct OptimizeResult {
    FusionWeights weights;
    OptimizeReport report;
};

// Per node: maximize_deflection under the convergence bound, then a
// threshold meeting that node's alpha. Nodes whose optimization fails
// revert to coefficients derived from the current couplings. Centralized
// mode also evaluates aggregate throughput/interference and retries with
// all alphas scaled by tighten_factor while the interference cap is
// exceeded (bounded rounds; reported infeasible if never met).
OptimizeResult optimize_network(const ConditionalStats& stats, const FactorGraph& graph,
                                const std::vector<double>& alpha, OptimizeMode mode,
                                const OptimizeOptions& options = {});

}  // namespace linbp
