#include "linbp/factor_graph.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace linbp {

FactorGraph::FactorGraph(int node_count, const std::vector<std::pair<int, int>>& edges)
    : node_count_(node_count) {
    if (node_count <= 0)
        throw std::invalid_argument("FactorGraph: node_count must be positive");
    adjacency_.resize(node_count);
    adjacency_edge_.resize(node_count);
    biases_.assign(node_count, 0.0);
    edges_.reserve(edges.size());
    for (const auto& [a, b] : edges) {
        if (a < 0 || a >= node_count || b < 0 || b >= node_count)
            throw std::invalid_argument("FactorGraph: edge index out of range: (" +
                                        std::to_string(a) + "," + std::to_string(b) + ")");
        if (a == b)
            throw std::invalid_argument("FactorGraph: self-loop at node " + std::to_string(a));
        const int i = std::min(a, b), j = std::max(a, b);
        if (edge_id(i, j) >= 0)
            throw std::invalid_argument("FactorGraph: duplicate edge (" + std::to_string(i) +
                                        "," + std::to_string(j) + ")");
        const int id = static_cast<int>(edges_.size());
        edges_.emplace_back(i, j);
        adjacency_[i].push_back(j);
        adjacency_edge_[i].push_back(id);
        adjacency_[j].push_back(i);
        adjacency_edge_[j].push_back(id);
    }
    couplings_.assign(edges_.size(), 0.0);
}

const std::vector<int>& FactorGraph::neighbors(int node) const {
    return adjacency_.at(node);
}

int FactorGraph::edge_id(int i, int j) const {
    if (i < 0 || i >= node_count_ || j < 0 || j >= node_count_)
        return -1;
    const auto& nb = adjacency_[i];
    for (std::size_t p = 0; p < nb.size(); ++p)
        if (nb[p] == j)
            return adjacency_edge_[i][p];
    return -1;
}

double FactorGraph::coupling(int i, int j) const {
    const int id = edge_id(i, j);
    if (id < 0)
        throw std::invalid_argument("FactorGraph: no edge (" + std::to_string(i) + "," +
                                    std::to_string(j) + ")");
    return couplings_[id];
}

double FactorGraph::bias(int node) const { return biases_.at(node); }

FactorGraph FactorGraph::with_coupling(int i, int j, double value) const {
    const int id = edge_id(i, j);
    if (id < 0)
        throw std::invalid_argument("FactorGraph: cannot set coupling on missing edge (" +
                                    std::to_string(i) + "," + std::to_string(j) + ")");
    FactorGraph out = *this;
    out.couplings_[id] = value;
    return out;
}

FactorGraph FactorGraph::with_bias(int node, double value) const {
    if (node < 0 || node >= node_count_)
        throw std::invalid_argument("FactorGraph: bias index out of range");
    FactorGraph out = *this;
    out.biases_[node] = value;
    return out;
}

FactorGraph build_graph(int node_count, const std::vector<std::pair<int, int>>& edges) {
    return FactorGraph(node_count, edges);
}

FactorGraph set_coupling(const FactorGraph& graph, int i, int j, double value) {
    return graph.with_coupling(i, j, value);
}

DegreeStats degree_stats(const FactorGraph& graph) {
    DegreeStats stats;
    for (int n = 0; n < graph.node_count(); ++n)
        stats.max_degree = std::max(stats.max_degree, graph.degree(n));
    stats.mean_degree = 2.0 * graph.edge_count() / graph.node_count();
    return stats;
}

EdgeIndex::EdgeIndex(const FactorGraph& graph) {
    const int n = graph.node_count();
    list.reserve(2 * graph.edge_count());
    incoming.resize(n);
    for (int e = 0; e < graph.edge_count(); ++e) {
        const auto [i, j] = graph.edges()[e];
        list.push_back({i, j});
        incoming[j].push_back(2 * e);
        list.push_back({j, i});
        incoming[i].push_back(2 * e + 1);
    }
    feeders.resize(list.size());
    for (int id = 0; id < size(); ++id) {
        const int from = list[id].from;
        for (int up : incoming[from])
            if (up != reverse(id))
                feeders[id].push_back(up);
    }
}

int EdgeIndex::index_of(int from, int to) const {
    if (to < 0 || to >= static_cast<int>(incoming.size()))
        return -1;
    for (int id : incoming[to])
        if (list[id].from == from)
            return id;
    return -1;
}

}  // namespace linbp
