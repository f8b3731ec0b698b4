#pragma once
// Belief propagation in LLR form: the box-plus transfer function, the plain
// flood-schedule iteration, its uniformly reweighted variant, and the
// empirical coupling-learning rule.

#include <cstdint>
#include <vector>

#include "linbp/factor_graph.hpp"

namespace linbp {

// S(a,b) = ln[(1+e^{a+b})/(e^a+e^b)], evaluated via shifted log1p terms so it
// saturates instead of overflowing for |a|,|b| up to ~700.
double boxplus(double a, double b);

enum class BpKind : std::uint8_t { Plain, Utrw };

struct BpVariant {
    BpKind kind = BpKind::Plain;
    double rho = 1.0;  // edge appearance probability, in (0,1]; 1 == plain

    static BpVariant plain() { return {BpKind::Plain, 1.0}; }
    static BpVariant utrw(double rho) { return {BpKind::Utrw, rho}; }
};

// One value per directed edge; ids follow EdgeIndex ordering.
struct MessageState {
    explicit MessageState(const FactorGraph& graph)
        : edges(graph), values(edges.size(), 0.0) {}

    double value(int from, int to) const;

    EdgeIndex edges;
    std::vector<double> values;
    int iteration = 0;
};

struct BpResult {
    std::vector<double> lambda;
    MessageState messages;
};

// Synchronous (flood) schedule from all-zero messages. Plain:
//   m_{k->j} = S(J_kj, gamma_k + sum_{n in N(k)\{j}} m_{n->k})
//   lambda_j = gamma_j + sum_{k in N(j)} m_{k->j}
// UTRW: the message argument uses J_kj/rho, adds (rho-1) times the reverse
// message plus rho times the feeder sum, and beliefs damp the incoming sum
// by rho. rho = 1 reduces exactly to plain.
BpResult bp_iterate(const FactorGraph& graph, const std::vector<double>& gamma,
                    BpVariant variant, int iterations);

// Per-edge empirical agreement over T slots of binary decisions:
//   J_kj = (zeta/T) * sum_t [1{x_j(t)==x_k(t)} - 1{x_j(t)!=x_k(t)}]
FactorGraph learn_couplings(const std::vector<std::vector<std::uint8_t>>& decision_history,
                            double zeta, const FactorGraph& graph);

// Optimal uniform edge appearance probability, min{1, 1/(2 n_D)} with n_D the
// mean degree. Graphs without edges get 1.
double optimal_eap(const FactorGraph& graph);

}  // namespace linbp
