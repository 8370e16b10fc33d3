#include "scnp/graph.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <queue>
#include <string>

#include "scnp/error.hpp"

namespace scnp {

Graph::Graph(std::size_t node_count, std::vector<Edge> edges)
    : n_(node_count), edges_(std::move(edges)) {
    const Edge* prev = nullptr;
    for (const auto& e : edges_) {
        if (e.u >= e.v) throw InvalidGraph("edge endpoints must satisfy u < v");
        if (e.v >= n_) throw InvalidGraph("edge endpoint out of range");
        if (!(e.weight > 0.0) || !std::isfinite(e.weight)) {
            throw InvalidGraph("edge weight must be positive and finite");
        }
        if (prev) {
            if (prev->u > e.u || (prev->u == e.u && prev->v >= e.v)) {
                throw InvalidGraph("edge list must be sorted and free of duplicates");
            }
        }
        prev = &e;
    }
}

Graph Graph::from_raw_edges(std::size_t node_count, const std::vector<Edge>& raw,
                            std::vector<std::string>* warnings) {
    auto warn = [&](const std::string& msg) {
        if (warnings) warnings->push_back(msg);
    };

    // Pass 1: validate, drop self-loops, sum exact same-direction duplicates.
    std::map<std::pair<std::size_t, std::size_t>, double> directed;
    for (const auto& e : raw) {
        if (e.u >= node_count || e.v >= node_count) {
            throw InvalidGraph("edge endpoint out of range");
        }
        if (!(e.weight > 0.0) || !std::isfinite(e.weight)) {
            throw InvalidGraph("edge weight must be positive and finite");
        }
        if (e.u == e.v) {
            warn("dropped self-loop at node " + std::to_string(e.u));
            continue;
        }
        auto [it, inserted] = directed.try_emplace({e.u, e.v}, e.weight);
        if (!inserted) {
            it->second += e.weight;
            warn("summed duplicate edge " + std::to_string(e.u) + " -> " +
                 std::to_string(e.v));
        }
    }

    // Pass 2: merge the two directions of each pair by max weight.
    std::map<std::pair<std::size_t, std::size_t>, double> undirected;
    for (const auto& [key, w] : directed) {
        auto canon = key.first < key.second ? key : std::pair{key.second, key.first};
        auto [it, inserted] = undirected.try_emplace(canon, w);
        if (!inserted) it->second = std::max(it->second, w);
    }

    std::vector<Edge> edges;
    edges.reserve(undirected.size());
    for (const auto& [key, w] : undirected) edges.push_back({key.first, key.second, w});
    return Graph(node_count, std::move(edges));
}

SparseMatrix add_self_loops(const Graph& g) {
    const std::size_t n = g.node_count();
    std::vector<Triplet> trips;
    trips.reserve(2 * g.edge_count() + n);
    for (const auto& e : g.edges()) {
        trips.push_back({e.u, e.v, e.weight});
        trips.push_back({e.v, e.u, e.weight});
    }
    for (std::size_t i = 0; i < n; ++i) trips.push_back({i, i, 1.0});
    return SparseMatrix::from_triplets(n, n, std::move(trips));
}

SparseMatrix normalize_symmetric(const SparseMatrix& a_tilde) {
    if (a_tilde.rows() != a_tilde.cols()) {
        throw ShapeMismatch("normalize_symmetric: matrix must be square");
    }
    const std::size_t n = a_tilde.rows();
    std::vector<double> inv_sqrt(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double d = a_tilde.row_sum(i);
        if (!(d > 0.0)) throw ZeroDegree("zero row sum at node " + std::to_string(i));
        inv_sqrt[i] = 1.0 / std::sqrt(d);
    }
    std::vector<Triplet> trips;
    trips.reserve(a_tilde.values().size());
    const auto row_ptr = a_tilde.row_ptr();
    const auto col_idx = a_tilde.col_idx();
    const auto values = a_tilde.values();
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t p = row_ptr[i]; p < row_ptr[i + 1]; ++p) {
            const std::size_t j = col_idx[p];
            trips.push_back({i, j, inv_sqrt[i] * values[p] * inv_sqrt[j]});
        }
    }
    return SparseMatrix::from_triplets(n, n, std::move(trips));
}

std::vector<std::size_t> component_labels(const Graph& g) {
    const std::size_t n = g.node_count();
    std::vector<std::vector<std::size_t>> adj(n);
    for (const auto& e : g.edges()) {
        adj[e.u].push_back(e.v);
        adj[e.v].push_back(e.u);
    }
    constexpr auto unassigned = static_cast<std::size_t>(-1);
    std::vector<std::size_t> label(n, unassigned);
    std::size_t next = 0;
    for (std::size_t s = 0; s < n; ++s) {
        if (label[s] != unassigned) continue;
        label[s] = next;
        std::queue<std::size_t> q;
        q.push(s);
        while (!q.empty()) {
            const std::size_t u = q.front();
            q.pop();
            for (const std::size_t v : adj[u]) {
                if (label[v] == unassigned) {
                    label[v] = next;
                    q.push(v);
                }
            }
        }
        ++next;
    }
    return label;
}

}  // namespace scnp
