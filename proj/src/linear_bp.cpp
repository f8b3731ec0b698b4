#include "linbp/linear_bp.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace linbp {

namespace {

constexpr double kDivergenceBound = 1e12;

// Row sum of |T| for directed edge id: (deg(from)-1) * |damped coefficient|.
double row_sum(const FactorGraph& graph, const EdgeIndex& edges, const FusionWeights& weights,
               int id) {
    const int from = edges.list[id].from;
    const int relays = graph.degree(from) - 1;
    return relays <= 0 ? 0.0
                       : relays * std::abs(weights.damping * weights.edge_coeffs[id]);
}

double infinity_norm(const FactorGraph& graph, const EdgeIndex& edges,
                     const FusionWeights& weights) {
    double norm = 0.0;
    for (int id = 0; id < edges.size(); ++id)
        norm = std::max(norm, row_sum(graph, edges, weights, id));
    return norm;
}

// Power iteration, 200 steps. Geometric mean of the trailing growth ratios
// keeps the estimate stable when the dominant eigenvalue is complex.
double spectral_radius_estimate(const Eigen::MatrixXd& T) {
    const int n = static_cast<int>(T.rows());
    if (n == 0)
        return 0.0;
    Eigen::VectorXd z = Eigen::VectorXd::Constant(n, 1.0 / std::sqrt(double(n)));
    double log_ratio_sum = 0.0;
    int counted = 0;
    const int steps = 200, tail = 20;
    for (int s = 0; s < steps; ++s) {
        Eigen::VectorXd next = T * z;
        const double norm = next.norm();
        if (norm < 1e-300)
            return 0.0;  // (numerically) nilpotent
        if (s >= steps - tail) {
            log_ratio_sum += std::log(norm);
            ++counted;
        }
        z = next / norm;
    }
    return counted > 0 ? std::exp(log_ratio_sum / counted) : 0.0;
}

void check_sizes(const FactorGraph& graph, const EdgeIndex& edges, const FusionWeights& weights) {
    if (static_cast<int>(weights.edge_coeffs.size()) != edges.size())
        throw std::invalid_argument("FusionWeights: edge coefficient count mismatch");
    if (static_cast<int>(weights.self_weights.size()) != graph.node_count())
        throw std::invalid_argument("FusionWeights: self weight count mismatch");
}

}  // namespace

double coefficient_from_coupling(double coupling) {
    if (coupling > 0.0) {
        // divide numerator and denominator by e^{2J}
        const double e = std::exp(-coupling);
        return -std::expm1(-2.0 * coupling) / ((e + 1.0) * (e + 1.0));
    }
    const double e = std::exp(coupling);
    return std::expm1(2.0 * coupling) / ((1.0 + e) * (1.0 + e));
}

FusionWeights FusionWeights::zeros(const FactorGraph& graph) {
    FusionWeights w;
    w.edge_coeffs.assign(2 * graph.edge_count(), 0.0);
    w.self_weights.assign(graph.node_count(), 1.0);
    w.thresholds.assign(graph.node_count(), 0.0);
    return w;
}

FusionWeights FusionWeights::from_couplings(const FactorGraph& graph) {
    FusionWeights w = zeros(graph);
    const EdgeIndex edges(graph);
    for (int id = 0; id < edges.size(); ++id) {
        const auto [from, to] = edges.list[id];
        w.edge_coeffs[id] = coefficient_from_coupling(graph.coupling(from, to));
    }
    return w;
}

double FusionWeights::edge_coefficient(const EdgeIndex& edges, int from, int to) const {
    const int id = edges.index_of(from, to);
    if (id < 0)
        throw std::invalid_argument("FusionWeights: no directed edge (" + std::to_string(from) +
                                    "->" + std::to_string(to) + ")");
    return edge_coeffs[id];
}

std::vector<double> node_fusion_vector(const FactorGraph& graph, const FusionWeights& weights,
                                       int node) {
    const EdgeIndex edges(graph);
    std::vector<double> c;
    c.reserve(1 + graph.degree(node));
    c.push_back(weights.self_weights[node]);
    for (int k : graph.neighbors(node))
        c.push_back(weights.edge_coeffs[edges.index_of(k, node)]);
    return c;
}

void set_node_fusion_vector(const FactorGraph& graph, FusionWeights& weights, int node,
                            const std::vector<double>& coeffs) {
    if (coeffs.size() != static_cast<std::size_t>(graph.degree(node)) + 1)
        throw std::invalid_argument("set_node_fusion_vector: size mismatch");
    const EdgeIndex edges(graph);
    weights.self_weights[node] = coeffs[0];
    const auto& nb = graph.neighbors(node);
    for (std::size_t p = 0; p < nb.size(); ++p)
        weights.edge_coeffs[edges.index_of(nb[p], node)] = coeffs[p + 1];
}

LinearResult linear_iterate(const FactorGraph& graph, const FusionWeights& weights,
                            const std::vector<double>& gamma, int iterations) {
    const int n = graph.node_count();
    if (static_cast<int>(gamma.size()) != n)
        throw std::invalid_argument("linear_iterate: gamma size mismatch");
    for (double g : gamma)
        if (!std::isfinite(g))
            throw std::invalid_argument("linear_iterate: non-finite gamma");
    if (iterations < 1)
        throw std::invalid_argument("linear_iterate: iterations must be >= 1");

    LinearResult result{std::vector<double>(n, 0.0), MessageState(graph)};
    MessageState& state = result.messages;
    const EdgeIndex& edges = state.edges;
    check_sizes(graph, edges, weights);

    const double norm = infinity_norm(graph, edges, weights);
    if (norm >= 1.0)
        throw DivergenceError(0, "linear_iterate: contraction violated, |T|_inf = " +
                                     std::to_string(norm));

    std::vector<double> next(edges.size(), 0.0);
    for (int iter = 1; iter <= iterations; ++iter) {
        for (int id = 0; id < edges.size(); ++id) {
            const int from = edges.list[id].from;
            double sum = gamma[from];
            for (int up : edges.feeders[id])
                sum += state.values[up];
            next[id] = weights.damping * weights.edge_coeffs[id] * sum;
            if (!std::isfinite(next[id]) || std::abs(next[id]) > kDivergenceBound)
                throw DivergenceError(iter, "linear_iterate: message diverged at iteration " +
                                               std::to_string(iter));
        }
        state.values.swap(next);
        ++state.iteration;
    }

    for (int j = 0; j < n; ++j) {
        double sum = weights.self_weights[j] * gamma[j];
        for (int id : edges.incoming[j])
            sum += state.values[id];
        result.lambda[j] = sum;
    }
    return result;
}

LinearSystem jacobian(const FactorGraph& graph, const FusionWeights& weights) {
    EdgeIndex edges(graph);
    check_sizes(graph, edges, weights);
    const int m = edges.size();
    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m, m);
    for (int id = 0; id < m; ++id) {
        const double coeff = weights.damping * weights.edge_coeffs[id];
        for (int up : edges.feeders[id])
            T(id, up) = coeff;
    }
    return LinearSystem{std::move(T), Eigen::VectorXd(), std::move(edges)};
}

LinearSystem jacobian(const FactorGraph& graph, const FusionWeights& weights,
                      const std::vector<double>& gamma) {
    LinearSystem system = jacobian(graph, weights);
    if (static_cast<int>(gamma.size()) != graph.node_count())
        throw std::invalid_argument("jacobian: gamma size mismatch");
    system.xi.resize(system.edges.size());
    for (int id = 0; id < system.edges.size(); ++id)
        system.xi(id) =
            weights.damping * weights.edge_coeffs[id] * gamma[system.edges.list[id].from];
    return system;
}

ContractionReport check_contraction(const FactorGraph& graph, const FusionWeights& weights) {
    const LinearSystem system = jacobian(graph, weights);
    ContractionReport report;
    report.infinity_norm = infinity_norm(graph, system.edges, weights);
    report.certified = report.infinity_norm < 1.0;
    report.spectral_radius = spectral_radius_estimate(system.T);
    return report;
}

double convergence_bound(const FactorGraph& graph) {
    const int max_degree = degree_stats(graph).max_degree;
    if (max_degree <= 1)
        return std::numeric_limits<double>::infinity();
    return 1.0 / (max_degree - 1);
}

Eigen::MatrixXd fixed_point_weights(const FactorGraph& graph, const FusionWeights& weights) {
    const LinearSystem system = jacobian(graph, weights);
    const double radius = spectral_radius_estimate(system.T);
    if (radius >= 1.0)
        throw NumericalError("fixed_point_weights: no fixed point, spectral radius estimate " +
                             std::to_string(radius));

    const int m = system.edges.size();
    const int n = graph.node_count();

    // Basis offsets: column i holds xi for gamma = e_i.
    Eigen::MatrixXd offsets = Eigen::MatrixXd::Zero(m, n);
    for (int id = 0; id < m; ++id)
        offsets(id, system.edges.list[id].from) = weights.damping * weights.edge_coeffs[id];

    Eigen::MatrixXd fixed;
    if (m <= 2000) {
        fixed = (Eigen::MatrixXd::Identity(m, m) - system.T).partialPivLu().solve(offsets);
    } else {
        // Large edge sets: iterate the affine map instead of factorizing.
        fixed = offsets;
        for (int step = 0; step < 100000; ++step) {
            Eigen::MatrixXd next = system.T * fixed + offsets;
            const double delta = (next - fixed).cwiseAbs().maxCoeff();
            fixed.swap(next);
            if (delta < 1e-12)
                break;
        }
    }

    Eigen::MatrixXd fusion = Eigen::MatrixXd::Zero(n, n);
    for (int j = 0; j < n; ++j) {
        fusion(j, j) += weights.self_weights[j];
        for (int id : system.edges.incoming[j])
            fusion.row(j) += fixed.row(id);
    }
    return fusion;
}

FusionWeights scale_weights(const FusionWeights& weights, double rho) {
    if (!(rho > 0.0 && rho <= 1.0))
        throw std::invalid_argument("scale_weights: rho must lie in (0,1]");
    FusionWeights out = weights;
    for (double& c : out.edge_coeffs)
        c *= rho;
    for (double& w : out.self_weights)
        w *= rho;
    return out;
}

}  // namespace linbp
