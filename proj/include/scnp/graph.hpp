#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "scnp/sparse.hpp"

namespace scnp {

struct Edge {
    std::size_t u = 0;
    std::size_t v = 0;
    double weight = 1.0;
};

// Undirected weighted simple graph over dense node ids [0, n).
//
// The stored edge list is canonical: u < v, sorted, one entry per node
// pair, weights strictly positive, no self-loops.
class Graph {
public:
    Graph() = default;

    // Validates invariants; edges must already be simple (no duplicates in
    // either direction, no self-loops).
    Graph(std::size_t node_count, std::vector<Edge> edges);

    // Ingestion helper for raw input edges. Treats (u,v) and (v,u) as the
    // two directions of one undirected edge: repeats of the same direction
    // are collapsed by summing their weights, the two directions are then
    // merged by taking the larger weight, and self-loops are dropped.
    // Each irregularity appends a message to `warnings` when given.
    static Graph from_raw_edges(std::size_t node_count, const std::vector<Edge>& raw,
                                std::vector<std::string>* warnings = nullptr);

    std::size_t node_count() const { return n_; }
    std::size_t edge_count() const { return edges_.size(); }
    const std::vector<Edge>& edges() const { return edges_; }

private:
    std::size_t n_ = 0;
    std::vector<Edge> edges_;
};

// Ã = A + I: adjacency with unit self-loops, as a symmetric sparse matrix.
SparseMatrix add_self_loops(const Graph& g);

// Â = D̃^{-1/2} Ã D̃^{-1/2}. Raises ZeroDegree if any row sum is zero.
SparseMatrix normalize_symmetric(const SparseMatrix& a_tilde);

// Connected-component label per node; labels are assigned in increasing
// order of each component's lowest node index.
std::vector<std::size_t> component_labels(const Graph& g);

}  // namespace scnp
