#include "linbp/bp_engine.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace linbp {

namespace {

// ln(1 + e^x) without overflow.
double log1p_exp(double x) {
    if (x > 0.0)
        return x + std::log1p(std::exp(-x));
    return std::log1p(std::exp(x));
}

}  // namespace

double boxplus(double a, double b) {
    // ln(1+e^{a+b}) - ln(e^a+e^b), the second term as max + log1p(e^{-|a-b|}).
    const double num = log1p_exp(a + b);
    const double den = std::max(a, b) + log1p_exp(-std::abs(a - b));
    return num - den;
}

double MessageState::value(int from, int to) const {
    const int id = edges.index_of(from, to);
    if (id < 0)
        throw std::invalid_argument("MessageState: no directed edge (" + std::to_string(from) +
                                    "->" + std::to_string(to) + ")");
    return values[id];
}

BpResult bp_iterate(const FactorGraph& graph, const std::vector<double>& gamma,
                    BpVariant variant, int iterations) {
    const int n = graph.node_count();
    if (static_cast<int>(gamma.size()) != n)
        throw std::invalid_argument("bp_iterate: gamma size mismatch");
    for (double g : gamma)
        if (!std::isfinite(g))
            throw std::invalid_argument("bp_iterate: non-finite gamma");
    if (iterations < 1)
        throw std::invalid_argument("bp_iterate: iterations must be >= 1");
    const double rho = variant.kind == BpKind::Plain ? 1.0 : variant.rho;
    if (!(rho > 0.0 && rho <= 1.0))
        throw std::invalid_argument("bp_iterate: rho must lie in (0,1]");

    BpResult result{std::vector<double>(n, 0.0), MessageState(graph)};
    MessageState& state = result.messages;
    const EdgeIndex& edges = state.edges;
    std::vector<double> next(edges.size(), 0.0);

    for (int iter = 0; iter < iterations; ++iter) {
        for (int id = 0; id < edges.size(); ++id) {
            const auto [k, j] = edges.list[id];
            double sum = 0.0;
            for (int up : edges.feeders[id])
                sum += state.values[up];
            const double coupling = graph.coupling(k, j);
            double argument;
            if (variant.kind == BpKind::Plain) {
                argument = gamma[k] + sum;
                next[id] = boxplus(coupling, argument);
            } else {
                argument = gamma[k] + (rho - 1.0) * state.values[EdgeIndex::reverse(id)] +
                           rho * sum;
                next[id] = boxplus(coupling / rho, argument);
            }
        }
        state.values.swap(next);
        ++state.iteration;
    }

    for (int j = 0; j < n; ++j) {
        double sum = 0.0;
        for (int id : edges.incoming[j])
            sum += state.values[id];
        result.lambda[j] = gamma[j] + rho * sum;
    }
    return result;
}

FactorGraph learn_couplings(const std::vector<std::vector<std::uint8_t>>& decision_history,
                            double zeta, const FactorGraph& graph) {
    const std::size_t T = decision_history.size();
    if (T == 0)
        throw std::invalid_argument("learn_couplings: empty decision history");
    const int n = graph.node_count();
    for (const auto& row : decision_history) {
        if (static_cast<int>(row.size()) != n)
            throw std::invalid_argument("learn_couplings: decision row size mismatch");
        for (auto d : row)
            if (d > 1)
                throw std::invalid_argument("learn_couplings: decisions must be 0/1");
    }

    FactorGraph out = graph;
    for (const auto& [i, j] : graph.edges()) {
        long agreement = 0;
        for (const auto& row : decision_history)
            agreement += (row[i] == row[j]) ? 1 : -1;
        out = out.with_coupling(i, j, zeta * static_cast<double>(agreement) /
                                          static_cast<double>(T));
    }
    return out;
}

double optimal_eap(const FactorGraph& graph) {
    const double mean_degree = degree_stats(graph).mean_degree;
    if (mean_degree <= 0.0)
        return 1.0;
    return std::min(1.0, 1.0 / (2.0 * mean_degree));
}

}  // namespace linbp
