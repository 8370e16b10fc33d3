#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "scnp/dense.hpp"
#include "scnp/sparse.hpp"

namespace scnp {

// Teleport probability of the personalized-PageRank walk.
struct TeleportParam {
    double alpha;
    explicit TeleportParam(double a);
};

// Pruning threshold for the sparse correlation; rows where both profile
// entries fall below it are discarded.
struct PruneThreshold {
    double epsilon;
    explicit PruneThreshold(double e);
};

// Pi = alpha (I - (1-alpha) A_hat)^{-1}. Column x holds the influence
// profile of node x. Symmetric (to tolerance) when A_hat is symmetric;
// entries in [0, 1].
struct PprMatrix {
    DenseMatrix values;
    double alpha = 0.0;
};

// Pairwise pruned-correlation matrix of Pi's columns. Exactly symmetric by
// construction; diagonal 1 unless built with literal_diagonal.
struct SigmaMatrix {
    DenseMatrix values;
    double epsilon = 0.0;
    double alpha = 0.0;
};

struct SigmaOptions {
    // Double-count the self pair the way the offline pseudocode's
    // "compute the lower triangle including the diagonal, then add the
    // transpose" does, yielding diagonal 2 instead of 1.
    bool literal_diagonal = false;
    // Zero out profile entries below this value before correlating
    // (0 = keep everything).
    double entry_drop = 0.0;
    // Worker threads; 0 = hardware concurrency. Results are identical for
    // every thread count.
    std::size_t threads = 1;
};

// Dense factorize-and-solve against alpha*I. Validates the result: residual
// of the defining linear system <= 1e-8 (else SingularSystem), symmetry and
// entry bounds within numeric tolerance.
PprMatrix ppr_direct(const SparseMatrix& a_hat, TeleportParam alpha);

// One application of the iterated propagation operator:
// (1-alpha) A_hat z + alpha h. The fixed point over z is ppr_direct's
// matrix applied to h.
DenseMatrix ppr_power_step(const SparseMatrix& a_hat, const DenseMatrix& z,
                           const DenseMatrix& h, TeleportParam alpha);

// Pearson correlation of u and v restricted to rows where at least one of
// the two entries is >= epsilon. Returns 0 when fewer than 2 rows survive
// or a restricted vector is constant.
double sparse_correlation(std::span<const double> u, std::span<const double> v,
                          PruneThreshold epsilon);

// The surviving row indices for the given pair, ascending.
std::vector<std::size_t> retained_rows(std::span<const double> u,
                                       std::span<const double> v, double epsilon);

// All-pairs sparse correlation of Pi's columns. Off-diagonal entries equal
// sparse_correlation on the corresponding column pair bit for bit.
SigmaMatrix build_sigma(const PprMatrix& pi, PruneThreshold epsilon,
                        const SigmaOptions& opt = {});

// Shares the column-profile setup across several thresholds.
std::vector<SigmaMatrix> build_sigma_batch(const PprMatrix& pi,
                                           std::span<const double> epsilons,
                                           const SigmaOptions& opt = {});

// Containers on disk carry (alpha, epsilon) metadata; loading the wrong
// artifact kind raises CorruptFile.
void save_ppr(const PprMatrix& m, const std::filesystem::path& path);
PprMatrix load_ppr(const std::filesystem::path& path);
void save_sigma(const SigmaMatrix& m, const std::filesystem::path& path);
SigmaMatrix load_sigma(const std::filesystem::path& path);

}  // namespace scnp
