#pragma once
// Linearized message passing: the coupling-to-coefficient map, the linear
// iteration, its Jacobian over directed edges, contraction certification,
// and the exact fixed-point fusion matrix.

#include <Eigen/Dense>
#include <vector>

#include "linbp/bp_engine.hpp"
#include "linbp/errors.hpp"
#include "linbp/factor_graph.hpp"

namespace linbp {

// c(J) = (e^{2J} - 1) / (1 + e^J)^2, equal to tanh(J/2). Stable for any J.
double coefficient_from_coupling(double coupling);

// Per-node linear fusion weights. edge_coeffs[id] is the weight the
// receiving node applies to the message arriving over directed edge id
// (EdgeIndex ordering). Beliefs use lambda_j = self_weights[j]*gamma_j +
// sum of incoming messages; self weights are 1 unless an optimizer rescaled
// a node's whole fusion vector. damping multiplies every edge coefficient
// at engine time without touching self weights (the reweighted-series knob).
struct FusionWeights {
    std::vector<double> edge_coeffs;
    std::vector<double> self_weights;
    std::vector<double> thresholds;
    double damping = 1.0;

    static FusionWeights zeros(const FactorGraph& graph);
    // Edge coefficients derived from the graph couplings, self weights 1.
    static FusionWeights from_couplings(const FactorGraph& graph);

    double edge_coefficient(const EdgeIndex& edges, int from, int to) const;
};

// Fusion vector of one node over [self, neighbors in adjacency order].
std::vector<double> node_fusion_vector(const FactorGraph& graph, const FusionWeights& weights,
                                       int node);
void set_node_fusion_vector(const FactorGraph& graph, FusionWeights& weights, int node,
                            const std::vector<double>& coeffs);

struct LinearResult {
    std::vector<double> lambda;
    MessageState messages;
};

// Synchronous linear iteration from all-zero messages:
//   m_{k->j} = d*c_{jk} * (gamma_k + sum_{n in N(k)\{j}} m_{n->k}),  d = damping
//   lambda_j = w_j*gamma_j + sum_{k in N(j)} m_{k->j}
// Weights whose Jacobian row sums reach 1 are rejected up front with a
// DivergenceError (iteration 0); message growth past 1e12 or a non-finite
// intermediate raises DivergenceError at the offending iteration.
LinearResult linear_iterate(const FactorGraph& graph, const FusionWeights& weights,
                            const std::vector<double>& gamma, int iterations);

// m^{(l)} = T m^{(l-1)} + xi over directed edges. T[(k->n)][(p->q)] is the
// damped coefficient of edge (k->n) iff q == k and p is a neighbor of k
// other than n. xi is filled only by the gamma overload.
struct LinearSystem {
    Eigen::MatrixXd T;
    Eigen::VectorXd xi;
    EdgeIndex edges;
};

LinearSystem jacobian(const FactorGraph& graph, const FusionWeights& weights);
LinearSystem jacobian(const FactorGraph& graph, const FusionWeights& weights,
                      const std::vector<double>& gamma);

struct ContractionReport {
    bool certified = false;           // true iff infinity_norm < 1
    double infinity_norm = 0.0;       // max absolute row sum of T
    double spectral_radius = 0.0;     // power-iteration estimate, diagnostic
};

ContractionReport check_contraction(const FactorGraph& graph, const FusionWeights& weights);

// Convergence bound on each edge coefficient, 1/(max degree - 1); +inf when
// the max degree is <= 1 (no multi-neighbor relay exists).
double convergence_bound(const FactorGraph& graph);

// Exact fixed point of the linear iteration as a fusion matrix W with
// lambda = W gamma, W(j,i) = weight of gamma_i in lambda_j. Solves
// (I - T) m = xi column-wise; requires spectral radius < 1.
Eigen::MatrixXd fixed_point_weights(const FactorGraph& graph, const FusionWeights& weights);

// Multiplies every per-node fusion vector (self weight and edge
// coefficients) by rho in (0,1]. Thresholds are left untouched; matching
// threshold rescaling is the optimizer's threshold rule.
FusionWeights scale_weights(const FusionWeights& weights, double rho);

}  // namespace linbp
