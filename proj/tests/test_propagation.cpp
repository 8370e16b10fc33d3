#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <limits>
#include <vector>

#include "fixtures.hpp"
#include "oracle.hpp"
#include "scnp/error.hpp"
#include "scnp/graph.hpp"
#include "scnp/matrix_io.hpp"
#include "scnp/propagation.hpp"
#include "scnp/rng.hpp"

using namespace scnp;
namespace fs = std::filesystem;

namespace {

SparseMatrix a_hat_of(const Graph& g) { return normalize_symmetric(add_self_loops(g)); }

std::vector<double> column(const DenseMatrix& m, std::size_t j) {
    std::vector<double> c(m.rows());
    for (std::size_t i = 0; i < m.rows(); ++i) c[i] = m(i, j);
    return c;
}

bool bitwise_equal(const DenseMatrix& a, const DenseMatrix& b) {
    return a.same_shape(b) &&
           std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

Graph random_graph(std::size_t n, double p, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<Edge> edges;
    for (std::size_t u = 0; u < n; ++u)
        for (std::size_t v = u + 1; v < n; ++v)
            if (rng.uniform01() < p) edges.push_back({u, v, 1.0});
    return Graph(n, std::move(edges));
}

DenseMatrix random_dense(std::size_t r, std::size_t c, std::uint64_t seed) {
    Rng rng(seed);
    DenseMatrix m(r, c);
    for (double& x : m.values()) x = rng.uniform(-1.0, 1.0);
    return m;
}

}  // namespace

TEST_CASE("teleport parameter accepts (0,1] only") {
    CHECK_NOTHROW(TeleportParam(1.0));
    CHECK_NOTHROW(TeleportParam(1e-9));
    CHECK_THROWS_AS(TeleportParam(0.0), ConfigError);
    CHECK_THROWS_AS(TeleportParam(-0.1), ConfigError);
    CHECK_THROWS_AS(TeleportParam(1.0 + 1e-12), ConfigError);
    CHECK_THROWS_AS(TeleportParam(std::nan("")), ConfigError);
}

TEST_CASE("prune threshold accepts finite nonnegative values only") {
    CHECK_NOTHROW(PruneThreshold(0.0));
    CHECK_NOTHROW(PruneThreshold(2.5));
    CHECK_THROWS_AS(PruneThreshold(-1e-12), ConfigError);
    CHECK_THROWS_AS(PruneThreshold(std::nan("")), ConfigError);
    const double inf = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(PruneThreshold{inf}, ConfigError);
}

TEST_CASE("full teleport yields the identity influence matrix") {
    auto pi = ppr_direct(a_hat_of(fixtures::cycle4()), TeleportParam(1.0));
    CHECK(max_abs_diff(pi.values, DenseMatrix::identity(4)) < 1e-12);
}

TEST_CASE("two-node influence matrix matches the closed form") {
    auto a = SparseMatrix::from_triplets(
        2, 2, {{0, 0, 0.5}, {0, 1, 0.5}, {1, 0, 0.5}, {1, 1, 0.5}});
    auto pi = ppr_direct(a, TeleportParam(0.1));
    CHECK(pi.values(0, 0) == doctest::Approx(0.55).epsilon(1e-12));
    CHECK(pi.values(0, 1) == doctest::Approx(0.45).epsilon(1e-12));
    CHECK(pi.values(1, 0) == doctest::Approx(0.45).epsilon(1e-12));
    CHECK(pi.values(1, 1) == doctest::Approx(0.55).epsilon(1e-12));
}

TEST_CASE("direct solve agrees with the truncated series") {
    auto g = fixtures::cycle4();
    auto pi = ppr_direct(a_hat_of(g), TeleportParam(0.1));
    auto want = oracle::neumann_ppr(oracle::dense_a_hat(g), 0.1, 10000);
    CHECK(max_abs_diff(pi.values, want) < 1e-10);
}

TEST_CASE("influence matrix is symmetric nonnegative with unit column sums on regular graphs") {
    auto pi = ppr_direct(a_hat_of(fixtures::cycle4()), TeleportParam(0.1));
    for (std::size_t j = 0; j < 4; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < 4; ++i) {
            CHECK(pi.values(i, j) >= 0.0);
            CHECK(pi.values(i, j) <= 1.0);
            s += pi.values(i, j);
        }
        CHECK(s == doctest::Approx(1.0).epsilon(1e-10));
    }
    CHECK(max_abs_diff(pi.values, transpose(pi.values)) < 1e-10);
}

TEST_CASE("column sums stay within (0, n] on irregular graphs") {
    auto g = fixtures::two_triangles_bridge();
    auto pi = ppr_direct(a_hat_of(g), TeleportParam(0.15));
    for (std::size_t j = 0; j < 6; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < 6; ++i) s += pi.values(i, j);
        CHECK(s > 0.0);
        CHECK(s <= 6.0 + 1e-10);
    }
}

TEST_CASE("direct solve validates its input operator") {
    auto asym = SparseMatrix::from_triplets(2, 2, {{0, 0, 1.0}, {0, 1, 0.5}, {1, 1, 1.0}});
    CHECK_THROWS_AS(ppr_direct(asym, TeleportParam(0.1)), InvalidGraph);
    auto rect = SparseMatrix::from_triplets(2, 3, {});
    CHECK_THROWS_AS(ppr_direct(rect, TeleportParam(0.1)), ShapeMismatch);
}

TEST_CASE("power step with full teleport returns the anchor") {
    auto a = a_hat_of(fixtures::cycle4());
    auto h = random_dense(4, 3, 1);
    auto z = ppr_power_step(a, h, h, TeleportParam(1.0));
    CHECK(max_abs_diff(z, h) == 0.0);
}

TEST_CASE("power step matches the hand-computed two-node case") {
    auto a = SparseMatrix::from_triplets(
        2, 2, {{0, 0, 0.5}, {0, 1, 0.5}, {1, 0, 0.5}, {1, 1, 0.5}});
    auto h = DenseMatrix::identity(2);
    auto z = ppr_power_step(a, h, h, TeleportParam(0.1));
    CHECK(z(0, 0) == doctest::Approx(0.55).epsilon(1e-12));
    CHECK(z(0, 1) == doctest::Approx(0.45).epsilon(1e-12));
    CHECK(z(1, 0) == doctest::Approx(0.45).epsilon(1e-12));
    CHECK(z(1, 1) == doctest::Approx(0.55).epsilon(1e-12));
}

TEST_CASE("iterating the power step converges to the direct solve") {
    auto a = a_hat_of(fixtures::cycle4());
    auto pi = ppr_direct(a, TeleportParam(0.1));
    auto h = random_dense(4, 3, 2);
    auto want = matmul(pi.values, h);
    auto z = h;
    for (int k = 0; k < 200; ++k) z = ppr_power_step(a, z, h, TeleportParam(0.1));
    CHECK(max_abs_diff(z, want) < 1e-6);
}

TEST_CASE("power step error contracts geometrically") {
    auto a = a_hat_of(fixtures::cycle4());
    auto pi = ppr_direct(a, TeleportParam(0.1));
    auto h = random_dense(4, 3, 3);
    auto fixed = matmul(pi.values, h);
    auto z = h;
    const double e0 = max_abs_diff(z, fixed);
    double bound = e0;
    for (int k = 1; k <= 40; ++k) {
        z = ppr_power_step(a, z, h, TeleportParam(0.1));
        bound *= 0.9;
        CHECK(max_abs_diff(z, fixed) <= bound * (1.0 + 1e-10) + 1e-15);
    }
}

TEST_CASE("power step rejects nonconforming shapes") {
    auto a = a_hat_of(fixtures::cycle4());
    DenseMatrix z(3, 2), h(4, 2);
    CHECK_THROWS_AS(ppr_power_step(a, z, h, TeleportParam(0.5)), ShapeMismatch);
    DenseMatrix z2(4, 2), h2(4, 3);
    CHECK_THROWS_AS(ppr_power_step(a, z2, h2, TeleportParam(0.5)), ShapeMismatch);
}

TEST_CASE("self correlation of a nonconstant vector is one") {
    std::vector<double> u = {0.5, 0.1, 0.9, 0.3};
    CHECK(sparse_correlation(u, u, PruneThreshold(0.0)) ==
          doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("pruning both-below rows flips a weak correlation to exactly opposite") {
    std::vector<double> u = {0.5, 0.3, 0.001};
    std::vector<double> v = {0.2, 0.6, 0.002};
    CHECK(sparse_correlation(u, v, PruneThreshold(0.01)) ==
          doctest::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("zero threshold reproduces the textbook correlation") {
    Rng rng(17);
    std::vector<double> u(50), v(50);
    for (auto& x : u) x = rng.uniform01();
    for (auto& x : v) x = rng.uniform01();
    const double got = sparse_correlation(u, v, PruneThreshold(0.0));
    const double want = oracle::pruned_pearson(u, v, 0.0);
    CHECK(got == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("rows tied at the threshold are kept") {
    std::vector<double> u = {0.3, 0.01};
    std::vector<double> v = {0.5, 0.0};
    CHECK(sparse_correlation(u, v, PruneThreshold(0.01)) ==
          doctest::Approx(1.0).epsilon(1e-12));
    CHECK(retained_rows(u, v, 0.01).size() == 2);
}

TEST_CASE("degenerate correlations are zero") {
    std::vector<double> tiny = {1e-5, 2e-5};
    CHECK(sparse_correlation(tiny, tiny, PruneThreshold(0.1)) == 0.0);  // nothing kept

    std::vector<double> u = {0.5, 1e-6, 1e-6};
    std::vector<double> v = {1e-6, 1e-6, 1e-6};
    CHECK(sparse_correlation(u, v, PruneThreshold(0.01)) == 0.0);  // one row kept

    std::vector<double> flat = {0.5, 0.5, 0.5};
    std::vector<double> vary = {0.1, 0.9, 0.4};
    CHECK(sparse_correlation(flat, vary, PruneThreshold(0.0)) == 0.0);  // zero variance
    CHECK(sparse_correlation(vary, flat, PruneThreshold(0.0)) == 0.0);
}

TEST_CASE("correlation inputs must have equal length") {
    std::vector<double> u = {1.0, 2.0};
    std::vector<double> v = {1.0};
    CHECK_THROWS_AS(sparse_correlation(u, v, PruneThreshold(0.0)), LengthMismatch);
    CHECK_THROWS_AS(retained_rows(u, v, 0.0), LengthMismatch);
}

TEST_CASE("correlation always lands in [-1, 1]") {
    Rng rng(23);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> u(10), v(10);
        for (auto& x : u) x = rng.uniform01();
        for (auto& x : v) x = rng.uniform01();
        const double eps = rng.uniform01() * 0.8;
        const double r = sparse_correlation(u, v, PruneThreshold(eps));
        CHECK(r >= -1.0);
        CHECK(r <= 1.0);
    }
}

TEST_CASE("raising the threshold only shrinks the retained set") {
    Rng rng(29);
    std::vector<double> u(100), v(100);
    for (auto& x : u) x = rng.uniform01();
    for (auto& x : v) x = rng.uniform01();
    const double grid[] = {0.0, 1e-4, 0.01, 0.1, 0.5, 1.0};
    auto prev = retained_rows(u, v, grid[0]);
    CHECK(prev.size() == 100);  // nonnegative entries all pass a zero threshold
    for (std::size_t k = 1; k < 6; ++k) {
        auto cur = retained_rows(u, v, grid[k]);
        CHECK(std::includes(prev.begin(), prev.end(), cur.begin(), cur.end()));
        prev = std::move(cur);
    }
}

TEST_CASE("single-node correlation matrix is [[1]]") {
    PprMatrix pi;
    pi.alpha = 0.1;
    pi.values = DenseMatrix(1, 1, 1.0);
    auto sigma = build_sigma(pi, PruneThreshold(0.0));
    REQUIRE(sigma.values.rows() == 1);
    CHECK(sigma.values(0, 0) == 1.0);
}

TEST_CASE("identical nonconstant columns correlate to one") {
    PprMatrix pi;
    pi.alpha = 0.1;
    pi.values = DenseMatrix(3, 3);
    const double m[3][3] = {{0.5, 0.5, 0.2}, {0.5, 0.5, 0.2}, {0.2, 0.2, 0.9}};
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j) pi.values(i, j) = m[i][j];
    auto sigma = build_sigma(pi, PruneThreshold(0.0));
    CHECK(sigma.values(0, 1) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("zero threshold reproduces the full correlation matrix of the columns") {
    Graph g(5, {{0, 1, 1.0}, {1, 2, 1.0}, {2, 3, 1.0}, {3, 4, 1.0}});
    auto pi = ppr_direct(a_hat_of(g), TeleportParam(0.1));
    auto sigma = build_sigma(pi, PruneThreshold(0.0));
    std::vector<std::size_t> all = {0, 1, 2, 3, 4};
    for (std::size_t i = 0; i < 5; ++i) {
        for (std::size_t j = 0; j < 5; ++j) {
            const double want =
                i == j ? 1.0
                       : oracle::pearson_subset(column(pi.values, i), column(pi.values, j), all);
            CHECK(sigma.values(i, j) == doctest::Approx(want).epsilon(1e-10));
        }
    }
}

TEST_CASE("correlation matrix entries match the pairwise routine bit for bit") {
    auto g = random_graph(20, 0.25, 5);
    auto pi = ppr_direct(a_hat_of(g), TeleportParam(0.2));
    for (double eps : {0.0, 0.005, 0.02, 0.05, 0.2}) {
        auto sigma = build_sigma(pi, PruneThreshold(eps));
        CHECK(sigma.epsilon == eps);
        CHECK(sigma.alpha == 0.2);
        for (std::size_t i = 0; i < 20; ++i) {
            for (std::size_t j = 0; j < i; ++j) {
                const double want =
                    sparse_correlation(column(pi.values, i), column(pi.values, j),
                                       PruneThreshold(eps));
                CHECK(sigma.values(i, j) == want);
                CHECK(sigma.values(j, i) == want);
            }
            CHECK(sigma.values(i, i) == 1.0);
        }
    }
}

TEST_CASE("correlation matrix is identical for every worker count") {
    auto g = random_graph(70, 0.1, 7);
    auto pi = ppr_direct(a_hat_of(g), TeleportParam(0.1));
    SigmaOptions one;
    one.threads = 1;
    SigmaOptions four;
    four.threads = 4;
    SigmaOptions seven;
    seven.threads = 7;
    for (double eps : {0.0, 0.01}) {
        auto a = build_sigma(pi, PruneThreshold(eps), one);
        auto b = build_sigma(pi, PruneThreshold(eps), four);
        auto c = build_sigma(pi, PruneThreshold(eps), seven);
        CHECK(bitwise_equal(a.values, b.values));
        CHECK(bitwise_equal(a.values, c.values));
    }
}

TEST_CASE("batched thresholds equal one-at-a-time construction") {
    auto g = random_graph(15, 0.3, 11);
    auto pi = ppr_direct(a_hat_of(g), TeleportParam(0.1));
    const std::vector<double> grid = {0.0, 0.01, 0.05};
    auto batch = build_sigma_batch(pi, grid);
    REQUIRE(batch.size() == 3);
    for (std::size_t k = 0; k < 3; ++k) {
        auto single = build_sigma(pi, PruneThreshold(grid[k]));
        CHECK(bitwise_equal(batch[k].values, single.values));
        CHECK(batch[k].epsilon == grid[k]);
    }
}

TEST_CASE("literal diagonal mode doubles the self pair and leaves the rest alone") {
    auto g = fixtures::two_triangles_bridge();
    auto pi = ppr_direct(a_hat_of(g), TeleportParam(0.1));
    SigmaOptions literal;
    literal.literal_diagonal = true;
    auto lit = build_sigma(pi, PruneThreshold(0.0), literal);
    auto def = build_sigma(pi, PruneThreshold(0.0));
    for (std::size_t i = 0; i < 6; ++i) {
        CHECK(lit.values(i, i) == doctest::Approx(2.0).epsilon(1e-12));
        CHECK(def.values(i, i) == 1.0);
        for (std::size_t j = 0; j < 6; ++j) {
            if (i != j) CHECK(lit.values(i, j) == def.values(i, j));
        }
    }
}

TEST_CASE("entry dropping matches zeroing the influence matrix by hand") {
    Graph g(5, {{0, 1, 1.0}, {1, 2, 1.0}, {2, 3, 1.0}, {3, 4, 1.0}});
    auto pi = ppr_direct(a_hat_of(g), TeleportParam(0.2));
    PprMatrix manual = pi;
    for (double& v : manual.values.values()) {
        if (v < 0.05) v = 0.0;
    }
    SigmaOptions drop;
    drop.entry_drop = 0.05;
    auto got = build_sigma(pi, PruneThreshold(0.01), drop);
    auto want = build_sigma(manual, PruneThreshold(0.01));
    CHECK(bitwise_equal(got.values, want.values));
}

TEST_CASE("off-diagonal entries always land in [-1, 1]") {
    auto g = random_graph(25, 0.15, 13);
    auto pi = ppr_direct(a_hat_of(g), TeleportParam(0.1));
    for (double eps : {0.0, 0.02, 0.3}) {
        auto sigma = build_sigma(pi, PruneThreshold(eps));
        for (double v : sigma.values.values()) {
            CHECK(v >= -1.0);
            CHECK(v <= 1.0);
        }
    }
}

TEST_CASE("influence and correlation artifacts round-trip through disk") {
    auto dir = fs::temp_directory_path();
    auto ppr_path = dir / "scnp_test_roundtrip.pi.mat";
    auto sigma_path = dir / "scnp_test_roundtrip.sigma.mat";
    auto g = fixtures::two_triangles_bridge();
    auto pi = ppr_direct(a_hat_of(g), TeleportParam(0.1));
    auto sigma = build_sigma(pi, PruneThreshold(0.01));

    save_ppr(pi, ppr_path);
    auto pi2 = load_ppr(ppr_path);
    CHECK(bitwise_equal(pi.values, pi2.values));
    CHECK(pi2.alpha == 0.1);

    save_sigma(sigma, sigma_path);
    auto sigma2 = load_sigma(sigma_path);
    CHECK(bitwise_equal(sigma.values, sigma2.values));
    CHECK(sigma2.epsilon == 0.01);
    CHECK(sigma2.alpha == 0.1);

    // each loader refuses the other artifact kind
    CHECK_THROWS_AS(load_sigma(ppr_path), CorruptFile);
    CHECK_THROWS_AS(load_ppr(sigma_path), CorruptFile);

    fs::remove(ppr_path);
    fs::remove(sigma_path);
}
