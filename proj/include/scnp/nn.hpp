#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "scnp/dense.hpp"
#include "scnp/rng.hpp"
#include "scnp/sparse.hpp"

namespace scnp {

// Two-layer perceptron over node features: ReLU(X W0 + b0) W1 + b1.
struct MlpParams {
    DenseMatrix w0;          // f x h
    std::vector<double> b0;  // h
    DenseMatrix w1;          // h x c
    std::vector<double> b1;  // c

    std::size_t feature_count() const { return w0.rows(); }
    std::size_t hidden_size() const { return w0.cols(); }
    std::size_t class_count() const { return w1.cols(); }
};

struct TrainConfig {
    double lambda_l2 = 0.005;
    double dropout_rate = 0.5;  // in [0, 1)
    double learning_rate = 0.01;
    std::size_t max_epochs = 80;
    std::uint64_t seed = 0;
    bool adjacency_dropout = true;

    void validate() const;  // ConfigError on out-of-range values
};

// Glorot-uniform weights, zero biases. Draw order is fixed: every W0 entry
// row by row with limit sqrt(6/(f+h)), then every W1 entry with limit
// sqrt(6/(h+c)).
MlpParams glorot_init(std::size_t features, std::size_t hidden, std::size_t classes,
                      Rng& rng);

struct MlpGrads {
    DenseMatrix w0;
    std::vector<double> b0;
    DenseMatrix w1;
    std::vector<double> b1;
};

// Everything the backward pass needs from a forward pass. Dropout is
// recorded as multipliers (0 or 1/(1-rate)); the vectors stay empty in
// evaluation mode, meaning "multiply by one".
struct MlpCache {
    bool training = false;
    std::vector<double> xd_vals;  // feature values after dropout, one per nnz
    DenseMatrix z1;               // first-layer pre-activation, n x h
    DenseMatrix rd;               // ReLU output after dropout, n x h
    DenseMatrix hidden_mult;      // n x h dropout multipliers
};

// Inverted dropout: with probability rate an element is zeroed, otherwise
// scaled by 1/(1-rate), so evaluation needs no rescale. Consumes exactly
// `count` uniform draws (also at rate 0, keeping the stream layout
// independent of the rate).
void dropout_multipliers(std::size_t count, double rate, Rng& rng,
                         std::span<double> mult);

// Forward pass. Training mode draws feature-dropout multipliers, then
// hidden-dropout multipliers, in that order. Evaluation mode consumes no
// randomness and applies no dropout.
DenseMatrix mlp_forward(const SparseMatrix& x, const MlpParams& p,
                        const TrainConfig& cfg, bool training, Rng& rng,
                        MlpCache* cache = nullptr);

// Gradients of a scalar loss with upstream derivative d_h on the MLP
// output. Adds the 2*lambda*W0 term of the first-layer L2 penalty.
MlpGrads mlp_backward(const SparseMatrix& x, const MlpParams& p, const MlpCache& cache,
                      const DenseMatrix& d_h, double lambda_l2);

// Row-wise softmax with max subtraction; rows sum to 1 within 1e-12.
DenseMatrix softmax_rows(const DenseMatrix& m);

// d loss / d logits given d loss / d probs, row by row:
// d_j = p_j (u_j - sum_k u_k p_k).
DenseMatrix softmax_backward(const DenseMatrix& probs, const DenseMatrix& upstream);

// Mean negative log-likelihood over the mask (probabilities clamped below
// at 1e-12) plus lambda * ||W0||_F^2.
double masked_cross_entropy(const DenseMatrix& probs, std::span<const int> labels,
                            std::span<const std::size_t> mask, const MlpParams& p,
                            double lambda_l2);

// d loss / d logits of masked_cross_entropy composed with softmax:
// (probs - onehot) / |mask| on masked rows, zero elsewhere.
DenseMatrix loss_logits_gradient(const DenseMatrix& probs, std::span<const int> labels,
                                 std::span<const std::size_t> mask);

// Bias-corrected Adam; one call = one step for all four tensors.
struct AdamState {
    static constexpr double beta1 = 0.9;
    static constexpr double beta2 = 0.999;
    static constexpr double eps = 1e-8;

    DenseMatrix m_w0, v_w0, m_w1, v_w1;
    std::vector<double> m_b0, v_b0, m_b1, v_b1;
    std::size_t step = 0;

    static AdamState for_params(const MlpParams& p);
};

void adam_step(MlpParams& p, const MlpGrads& g, AdamState& s, double lr);

// Checkpoint: magic "SCNPCKP1", a length-prefixed JSON record echoing the
// training configuration, then w0, b0, w1, b1 each in the matrix container
// format (biases as 1 x len matrices).
struct Checkpoint {
    MlpParams params;
    TrainConfig config;
};

void save_checkpoint(const MlpParams& p, const TrainConfig& cfg,
                     const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace scnp
