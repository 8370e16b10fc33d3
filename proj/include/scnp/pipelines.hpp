#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "scnp/dataset.hpp"
#include "scnp/dense.hpp"
#include "scnp/nn.hpp"
#include "scnp/propagation.hpp"
#include "scnp/rng.hpp"
#include "scnp/sparse.hpp"

namespace scnp {

enum class ModelKind { Gcn, Ppnp, Appnp, Scnp };

// Accepts "gcn", "ppnp", "appnp", "scnp"; anything else raises ConfigError.
ModelKind parse_model_kind(const std::string& name);
std::string to_string(ModelKind kind);

// Precomputed propagation inputs. Each pipeline needs only some of these:
// Gcn/Appnp the normalized adjacency, Ppnp the teleport matrix, Scnp the
// correlation matrix. A missing required pointer raises MissingArtifact.
// `alpha` and `power_steps` parameterize the iterative scheme only.
struct PropagationArtifacts {
    const SparseMatrix* a_hat = nullptr;
    const PprMatrix* ppr = nullptr;
    const SigmaMatrix* sigma = nullptr;
    double alpha = 0.1;
    std::size_t power_steps = 10;
};

// Buffers recorded by the two-layer convolution forward pass. The dropped
// value arrays are empty in eval mode (the stored matrix values apply).
struct GcnCache {
    bool training = false;
    std::vector<double> xd_vals;
    std::vector<double> a1_vals;
    std::vector<double> a2_vals;
    DenseMatrix z1;
    DenseMatrix rd;
    DenseMatrix hidden_mult;
};

// Buffers for the dense-propagation pipelines (teleport or correlation
// matrix applied after the feature network). `prop_dropped` is populated
// only when training with adjacency dropout enabled.
struct DensePropCache {
    MlpCache mlp;
    bool dropped = false;
    DenseMatrix prop_dropped;
};

// Buffers for the iterative pipeline: one dropped value array per power
// step, in application order. Empty arrays in eval mode.
struct AppnpCache {
    MlpCache mlp;
    std::vector<std::vector<double>> step_vals;
};

// Two-layer graph convolution: renormalized adjacency is applied to the
// activations inside both layers. Dropout (feature, adjacency, hidden) is
// active only when `training`; random draws occur in computation order
// (feature multipliers, first adjacency mask, hidden multipliers, second
// adjacency mask). Returns row-stochastic class probabilities.
DenseMatrix gcn_forward(const SparseMatrix& a_hat, const SparseMatrix& x,
                        const MlpParams& p, const TrainConfig& cfg, bool training,
                        Rng& rng, GcnCache* cache = nullptr);

MlpGrads gcn_backward(const SparseMatrix& a_hat, const SparseMatrix& x,
                      const MlpParams& p, const GcnCache& cache,
                      const DenseMatrix& d_logits, double lambda_l2);

// Feature network followed by one dense propagation (exact teleport
// matrix). Draw order: feature multipliers, hidden multipliers, dense
// matrix mask (row-major).
DenseMatrix ppnp_forward(const PprMatrix& pi, const SparseMatrix& x,
                         const MlpParams& p, const TrainConfig& cfg, bool training,
                         Rng& rng, DensePropCache* cache = nullptr);

// Same shape as ppnp_forward with the correlation matrix in place of the
// teleport matrix.
DenseMatrix scnp_forward(const SigmaMatrix& sigma, const SparseMatrix& x,
                         const MlpParams& p, const TrainConfig& cfg, bool training,
                         Rng& rng, DensePropCache* cache = nullptr);

// Shared backward for the two dense-propagation pipelines. `prop` must be
// the matrix given to the forward pass; the dropped copy in the cache takes
// precedence when present.
MlpGrads dense_prop_backward(const DenseMatrix& prop, const SparseMatrix& x,
                             const MlpParams& p, const DensePropCache& cache,
                             const DenseMatrix& d_logits, double lambda_l2);

// Iterative approximation: steps-1 plain power steps from the network
// output, then a final step feeding the softmax. Each step draws a fresh
// adjacency mask when training. Draw order: feature multipliers, hidden
// multipliers, per-step adjacency masks.
DenseMatrix appnp_forward(const SparseMatrix& a_hat, const SparseMatrix& x,
                          const MlpParams& p, const TrainConfig& cfg,
                          double alpha, std::size_t steps, bool training,
                          Rng& rng, AppnpCache* cache = nullptr);

MlpGrads appnp_backward(const SparseMatrix& a_hat, const SparseMatrix& x,
                        const MlpParams& p, const TrainConfig& cfg,
                        double alpha, std::size_t steps, const AppnpCache& cache,
                        const DenseMatrix& d_logits, double lambda_l2);

struct EpochStats {
    double train_loss = 0.0;
    double train_acc = 0.0;
    double val_acc = 0.0;
};

struct TrainResult {
    MlpParams params;
    std::vector<EpochStats> history;
    std::uint64_t seed = 0;
    double wall_seconds = 0.0;
};

// Full-batch training driver: Glorot init, one optimizer step per epoch on
// the training-mask cross-entropy (plus the first-layer L2 penalty), then
// an eval-mode pass for the epoch's accuracy numbers. Identical seeds give
// identical results; the propagation artifacts are read-only throughout.
TrainResult train(ModelKind kind, const Dataset& data, const Split& split,
                  const TrainConfig& cfg, const PropagationArtifacts& art,
                  std::size_t hidden_size = 64);

// One JSON object per line: each epoch record, then a summary record. The
// summary repeats the final metrics and omits wall time, so reruns with the
// same seed emit byte-identical files.
void write_history_jsonl(const TrainResult& result, std::ostream& os);
void write_history_jsonl(const TrainResult& result, const std::filesystem::path& path);

}  // namespace scnp
