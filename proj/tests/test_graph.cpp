#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "oracle.hpp"
#include "scnp/error.hpp"
#include "scnp/graph.hpp"

using namespace scnp;

TEST_CASE("graph constructor enforces the canonical edge list") {
    CHECK_NOTHROW(Graph(3, {{0, 1, 1.0}, {1, 2, 2.0}}));
    CHECK_THROWS_AS(Graph(3, {{1, 0, 1.0}}), InvalidGraph);          // u >= v
    CHECK_THROWS_AS(Graph(3, {{0, 0, 1.0}}), InvalidGraph);          // self-loop
    CHECK_THROWS_AS(Graph(3, {{0, 3, 1.0}}), InvalidGraph);          // out of range
    CHECK_THROWS_AS(Graph(3, {{0, 1, 0.0}}), InvalidGraph);          // zero weight
    CHECK_THROWS_AS(Graph(3, {{0, 1, -1.0}}), InvalidGraph);         // negative weight
    CHECK_THROWS_AS(Graph(3, {{1, 2, 1.0}, {0, 1, 1.0}}), InvalidGraph);  // unsorted
    CHECK_THROWS_AS(Graph(3, {{0, 1, 1.0}, {0, 1, 2.0}}), InvalidGraph);  // duplicate
}

TEST_CASE("raw edge ingestion sums repeats, merges directions by max, drops loops") {
    std::vector<std::string> warnings;
    std::vector<Edge> raw = {
        {0, 1, 1.0}, {0, 1, 2.0},  // same direction twice: sums to 3
        {1, 0, 5.0},               // reverse direction: max(3, 5) = 5
        {2, 2, 1.0},               // self-loop: dropped
        {2, 1, 0.5},
    };
    auto g = Graph::from_raw_edges(3, raw, &warnings);
    REQUIRE(g.edge_count() == 2);
    CHECK(g.edges()[0].u == 0);
    CHECK(g.edges()[0].v == 1);
    CHECK(g.edges()[0].weight == 5.0);
    CHECK(g.edges()[1].u == 1);
    CHECK(g.edges()[1].v == 2);
    CHECK(g.edges()[1].weight == 0.5);
    CHECK(warnings.size() == 2);
}

TEST_CASE("raw edge ingestion validates endpoints and weights") {
    CHECK_THROWS_AS(Graph::from_raw_edges(2, {{0, 2, 1.0}}), InvalidGraph);
    CHECK_THROWS_AS(Graph::from_raw_edges(2, {{0, 1, -1.0}}), InvalidGraph);
    CHECK_THROWS_AS(Graph::from_raw_edges(2, {{0, 1, std::nan("")}}), InvalidGraph);
}

TEST_CASE("self-loop augmentation symmetrizes and adds a unit diagonal") {
    auto g = fixtures::two_triangles_bridge();
    auto at = add_self_loops(g);
    REQUIRE(at.rows() == 6);
    REQUIRE(at.cols() == 6);
    CHECK(at.is_symmetric());
    auto d = at.to_dense();
    for (std::size_t i = 0; i < 6; ++i) CHECK(d(i, i) == 1.0);
    CHECK(d(0, 1) == 1.0);
    CHECK(d(2, 3) == 1.0);
    CHECK(d(0, 3) == 0.0);
    // nnz: 2 per edge plus the diagonal
    CHECK(at.values().size() == 2 * g.edge_count() + 6);
}

TEST_CASE("symmetric normalization matches hand-computed values on a path") {
    auto g = fixtures::path3();
    auto ah = normalize_symmetric(add_self_loops(g));
    auto d = ah.to_dense();
    // degrees of A+I rows: 2, 3, 2
    CHECK(d(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(d(0, 1) == doctest::Approx(1.0 / std::sqrt(6.0)).epsilon(1e-12));
    CHECK(d(1, 1) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(d(2, 2) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(d(0, 2) == 0.0);
}

TEST_CASE("symmetric normalization agrees with the dense reference") {
    auto g = fixtures::two_triangles_bridge();
    auto got = normalize_symmetric(add_self_loops(g)).to_dense();
    auto want = oracle::dense_a_hat(g);
    CHECK(max_abs_diff(got, want) < 1e-12);
    CHECK(normalize_symmetric(add_self_loops(g)).is_symmetric(1e-15));
}

TEST_CASE("symmetric normalization rejects empty rows") {
    auto m = SparseMatrix::from_triplets(2, 2, {{0, 0, 1.0}});  // row 1 empty
    CHECK_THROWS_AS(normalize_symmetric(m), ZeroDegree);
    auto rect = SparseMatrix::from_triplets(2, 3, {});
    CHECK_THROWS_AS(normalize_symmetric(rect), ShapeMismatch);
}

TEST_CASE("weighted graphs normalize by weighted degree") {
    Graph g(2, {{0, 1, 4.0}});
    auto d = normalize_symmetric(add_self_loops(g)).to_dense();
    // row sums of A+I: 5 and 5
    CHECK(d(0, 0) == doctest::Approx(0.2).epsilon(1e-12));
    CHECK(d(0, 1) == doctest::Approx(0.8).epsilon(1e-12));
}

TEST_CASE("component labels follow the lowest node index of each component") {
    // components: {0}, {1,2}, {3,4}, {5}
    Graph g(6, {{1, 2, 1.0}, {3, 4, 1.0}});
    auto labels = component_labels(g);
    CHECK(labels == std::vector<std::size_t>{0, 1, 1, 2, 2, 3});

    auto connected = component_labels(fixtures::two_triangles_bridge());
    CHECK(connected == std::vector<std::size_t>(6, 0));
}
