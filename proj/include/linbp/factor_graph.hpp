#pragma once
// Network topology plus pairwise-MRF parameters (per-node bias, per-edge
// coupling). Value type: mutating operations return updated copies, so a
// graph can be shared read-only across worker threads.

#include <cstdint>
#include <utility>
#include <vector>

namespace linbp {

class FactorGraph {
public:
    // Validates indices, rejects self-loops and duplicate edges (in either
    // orientation). Couplings and biases start at zero.
    FactorGraph(int node_count, const std::vector<std::pair<int, int>>& edges);

    int node_count() const { return node_count_; }
    int edge_count() const { return static_cast<int>(edges_.size()); }

    // Undirected edges, normalized (i < j), in insertion order.
    const std::vector<std::pair<int, int>>& edges() const { return edges_; }

    // Neighbor indices of node j, in the order their edges were inserted.
    const std::vector<int>& neighbors(int node) const;
    int degree(int node) const { return static_cast<int>(neighbors(node).size()); }

    bool has_edge(int i, int j) const { return edge_id(i, j) >= 0; }

    // Coupling lookup is symmetric in orientation. Throws on missing edge.
    double coupling(int i, int j) const;
    double bias(int node) const;

    [[nodiscard]] FactorGraph with_coupling(int i, int j, double value) const;
    [[nodiscard]] FactorGraph with_bias(int node, double value) const;

    // Index of the undirected edge (i,j) in edges(), -1 if absent.
    int edge_id(int i, int j) const;
    double coupling_by_id(int edge) const { return couplings_[edge]; }

private:
    int node_count_ = 0;
    std::vector<std::pair<int, int>> edges_;
    std::vector<double> couplings_;
    std::vector<double> biases_;
    std::vector<std::vector<int>> adjacency_;
    std::vector<std::vector<int>> adjacency_edge_;  // edge id parallel to adjacency_
};

FactorGraph build_graph(int node_count, const std::vector<std::pair<int, int>>& edges);
FactorGraph set_coupling(const FactorGraph& graph, int i, int j, double value);

struct DegreeStats {
    int max_degree = 0;
    double mean_degree = 0.0;
};
DegreeStats degree_stats(const FactorGraph& graph);

// Directed-edge bookkeeping used by the message-passing engines. Each
// undirected edge (i,j) yields directed ids 2e (i->j) and 2e+1 (j->i), so
// reverse(id) == id ^ 1. "Feeders" of (k->j) are the directed edges (n->k)
// with n a neighbor of k other than j.
struct EdgeIndex {
    struct Directed {
        int from = 0;
        int to = 0;
    };

    explicit EdgeIndex(const FactorGraph& graph);

    int size() const { return static_cast<int>(list.size()); }
    static int reverse(int id) { return id ^ 1; }

    // -1 if (from,to) is not an edge.
    int index_of(int from, int to) const;

    std::vector<Directed> list;
    std::vector<std::vector<int>> incoming;  // per node: directed ids ending there
    std::vector<std::vector<int>> feeders;   // per directed id: upstream ids
};

}  // namespace linbp
