#include "scnp/pipelines.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <json.hpp>
#include <ostream>

#include "scnp/error.hpp"
#include "scnp/evaluation.hpp"

namespace scnp {

ModelKind parse_model_kind(const std::string& name) {
    if (name == "gcn") return ModelKind::Gcn;
    if (name == "ppnp") return ModelKind::Ppnp;
    if (name == "appnp") return ModelKind::Appnp;
    if (name == "scnp") return ModelKind::Scnp;
    throw ConfigError("unknown model: " + name);
}

std::string to_string(ModelKind kind) {
    switch (kind) {
        case ModelKind::Gcn: return "gcn";
        case ModelKind::Ppnp: return "ppnp";
        case ModelKind::Appnp: return "appnp";
        case ModelKind::Scnp: return "scnp";
    }
    throw ConfigError("unknown model kind");
}

namespace {

void add_row_vector(DenseMatrix& m, std::span<const double> bias) {
    if (bias.size() != m.cols()) throw ShapeMismatch("bias length mismatch");
    for (std::size_t i = 0; i < m.rows(); ++i) {
        double* row = m.data() + i * m.cols();
        for (std::size_t j = 0; j < m.cols(); ++j) row[j] += bias[j];
    }
}

std::vector<double> column_sums(const DenseMatrix& m) {
    std::vector<double> s(m.cols(), 0.0);
    for (std::size_t i = 0; i < m.rows(); ++i) {
        const double* row = m.data() + i * m.cols();
        for (std::size_t j = 0; j < m.cols(); ++j) s[j] += row[j];
    }
    return s;
}

// Dropped copy of a value array: multiplier drawn per entry, then scaled.
void drop_values(std::span<const double> src, double rate, Rng& rng,
                 std::vector<double>& out) {
    out.resize(src.size());
    dropout_multipliers(src.size(), rate, rng, out);
    for (std::size_t i = 0; i < src.size(); ++i) out[i] *= src[i];
}

void check_square_prop(const SparseMatrix& a, const SparseMatrix& x) {
    if (a.rows() != a.cols()) throw ShapeMismatch("propagation matrix must be square");
    if (a.rows() != x.rows()) {
        throw ShapeMismatch("propagation and feature row counts disagree");
    }
}

}  // namespace

DenseMatrix gcn_forward(const SparseMatrix& a_hat, const SparseMatrix& x,
                        const MlpParams& p, const TrainConfig& cfg, bool training,
                        Rng& rng, GcnCache* cache) {
    cfg.validate();
    check_square_prop(a_hat, x);
    if (x.cols() != p.feature_count()) throw ShapeMismatch("feature width mismatch");
    const std::size_t n = x.rows();
    const std::size_t h = p.hidden_size();
    const bool drop_adj = training && cfg.adjacency_dropout;

    GcnCache local;
    GcnCache& cc = cache ? *cache : local;
    cc.training = training;
    cc.xd_vals.clear();
    cc.a1_vals.clear();
    cc.a2_vals.clear();

    if (training) drop_values(x.values(), cfg.dropout_rate, rng, cc.xd_vals);
    DenseMatrix xw;
    x.spmm(p.w0, xw, cc.xd_vals);

    if (drop_adj) drop_values(a_hat.values(), cfg.dropout_rate, rng, cc.a1_vals);
    a_hat.spmm(xw, cc.z1, cc.a1_vals);
    add_row_vector(cc.z1, p.b0);

    cc.rd = DenseMatrix(n, h);
    for (std::size_t i = 0; i < cc.z1.size(); ++i) {
        cc.rd.values()[i] = std::max(0.0, cc.z1.values()[i]);
    }
    if (training) {
        cc.hidden_mult = DenseMatrix(n, h);
        dropout_multipliers(n * h, cfg.dropout_rate, rng, cc.hidden_mult.values());
        for (std::size_t i = 0; i < cc.rd.size(); ++i) {
            cc.rd.values()[i] *= cc.hidden_mult.values()[i];
        }
    } else {
        cc.hidden_mult = DenseMatrix();
    }

    DenseMatrix rw = matmul(cc.rd, p.w1);
    if (drop_adj) drop_values(a_hat.values(), cfg.dropout_rate, rng, cc.a2_vals);
    DenseMatrix logits;
    a_hat.spmm(rw, logits, cc.a2_vals);
    add_row_vector(logits, p.b1);
    return softmax_rows(logits);
}

MlpGrads gcn_backward(const SparseMatrix& a_hat, const SparseMatrix& x,
                      const MlpParams& p, const GcnCache& cache,
                      const DenseMatrix& d_logits, double lambda_l2) {
    const std::size_t n = x.rows();
    if (cache.z1.rows() != n || cache.z1.cols() != p.hidden_size() ||
        !cache.rd.same_shape(cache.z1)) {
        throw StaleCache("cache does not match this network");
    }
    if (d_logits.rows() != n || d_logits.cols() != p.class_count()) {
        throw StaleCache("upstream gradient shape mismatch");
    }
    if (cache.training &&
        (cache.xd_vals.size() != x.nnz() || !cache.hidden_mult.same_shape(cache.z1))) {
        throw StaleCache("cache does not match this input");
    }

    MlpGrads g;
    g.b1 = column_sums(d_logits);
    DenseMatrix d_rw;
    a_hat.spmm_transposed(d_logits, d_rw, cache.a2_vals);
    g.w1 = matmul_ta(cache.rd, d_rw);

    DenseMatrix d_rd = matmul(d_rw, transpose(p.w1));
    if (cache.training) {
        for (std::size_t i = 0; i < d_rd.size(); ++i) {
            d_rd.values()[i] *= cache.hidden_mult.values()[i];
        }
    }
    for (std::size_t i = 0; i < d_rd.size(); ++i) {
        if (cache.z1.values()[i] <= 0.0) d_rd.values()[i] = 0.0;
    }

    g.b0 = column_sums(d_rd);
    DenseMatrix d_xw;
    a_hat.spmm_transposed(d_rd, d_xw, cache.a1_vals);
    x.spmm_transposed(d_xw, g.w0, cache.xd_vals);
    for (std::size_t i = 0; i < g.w0.size(); ++i) {
        g.w0.values()[i] += 2.0 * lambda_l2 * p.w0.values()[i];
    }
    return g;
}

namespace {

DenseMatrix dense_prop_forward(const DenseMatrix& prop, const SparseMatrix& x,
                               const MlpParams& p, const TrainConfig& cfg,
                               bool training, Rng& rng, DensePropCache* cache) {
    cfg.validate();
    if (prop.rows() != prop.cols()) throw ShapeMismatch("propagation matrix must be square");
    if (prop.rows() != x.rows()) {
        throw ShapeMismatch("propagation and feature row counts disagree");
    }

    DensePropCache local;
    DensePropCache& cc = cache ? *cache : local;
    DenseMatrix h = mlp_forward(x, p, cfg, training, rng, &cc.mlp);

    const DenseMatrix* pm = &prop;
    cc.dropped = training && cfg.adjacency_dropout;
    if (cc.dropped) {
        cc.prop_dropped = DenseMatrix(prop.rows(), prop.cols());
        dropout_multipliers(prop.size(), cfg.dropout_rate, rng, cc.prop_dropped.values());
        for (std::size_t i = 0; i < prop.size(); ++i) {
            cc.prop_dropped.values()[i] *= prop.values()[i];
        }
        pm = &cc.prop_dropped;
    } else {
        cc.prop_dropped = DenseMatrix();
    }
    return softmax_rows(matmul(*pm, h));
}

}  // namespace

DenseMatrix ppnp_forward(const PprMatrix& pi, const SparseMatrix& x,
                         const MlpParams& p, const TrainConfig& cfg, bool training,
                         Rng& rng, DensePropCache* cache) {
    return dense_prop_forward(pi.values, x, p, cfg, training, rng, cache);
}

DenseMatrix scnp_forward(const SigmaMatrix& sigma, const SparseMatrix& x,
                         const MlpParams& p, const TrainConfig& cfg, bool training,
                         Rng& rng, DensePropCache* cache) {
    return dense_prop_forward(sigma.values, x, p, cfg, training, rng, cache);
}

MlpGrads dense_prop_backward(const DenseMatrix& prop, const SparseMatrix& x,
                             const MlpParams& p, const DensePropCache& cache,
                             const DenseMatrix& d_logits, double lambda_l2) {
    const DenseMatrix& pm = cache.dropped ? cache.prop_dropped : prop;
    if (pm.rows() != x.rows() || pm.rows() != pm.cols()) {
        throw StaleCache("propagation matrix does not match this input");
    }
    if (d_logits.rows() != x.rows() || d_logits.cols() != p.class_count()) {
        throw StaleCache("upstream gradient shape mismatch");
    }
    // Propagation is linear, so the output gradient flows through the
    // transpose of whatever matrix the forward pass actually used.
    DenseMatrix d_h = matmul_ta(pm, d_logits);
    return mlp_backward(x, p, cache.mlp, d_h, lambda_l2);
}

DenseMatrix appnp_forward(const SparseMatrix& a_hat, const SparseMatrix& x,
                          const MlpParams& p, const TrainConfig& cfg,
                          double alpha, std::size_t steps, bool training,
                          Rng& rng, AppnpCache* cache) {
    cfg.validate();
    TeleportParam checked_alpha{alpha};
    if (steps == 0) throw ConfigError("power step count must be positive");
    check_square_prop(a_hat, x);

    AppnpCache local;
    AppnpCache& cc = cache ? *cache : local;
    cc.step_vals.clear();

    DenseMatrix h = mlp_forward(x, p, cfg, training, rng, &cc.mlp);
    const bool drop_adj = training && cfg.adjacency_dropout;
    DenseMatrix z = h;
    DenseMatrix az;
    for (std::size_t k = 0; k < steps; ++k) {
        std::span<const double> vals;
        if (drop_adj) {
            cc.step_vals.emplace_back();
            drop_values(a_hat.values(), cfg.dropout_rate, rng, cc.step_vals.back());
            vals = cc.step_vals.back();
        }
        a_hat.spmm(z, az, vals);
        for (std::size_t i = 0; i < z.size(); ++i) {
            z.values()[i] = (1.0 - checked_alpha.alpha) * az.values()[i] +
                            checked_alpha.alpha * h.values()[i];
        }
    }
    return softmax_rows(z);
}

MlpGrads appnp_backward(const SparseMatrix& a_hat, const SparseMatrix& x,
                        const MlpParams& p, const TrainConfig& cfg,
                        double alpha, std::size_t steps, const AppnpCache& cache,
                        const DenseMatrix& d_logits, double lambda_l2) {
    (void)cfg;
    TeleportParam checked_alpha{alpha};
    if (steps == 0) throw ConfigError("power step count must be positive");
    check_square_prop(a_hat, x);
    if (!cache.step_vals.empty() && cache.step_vals.size() != steps) {
        throw StaleCache("per-step dropout record does not match step count");
    }
    if (d_logits.rows() != x.rows() || d_logits.cols() != p.class_count()) {
        throw StaleCache("upstream gradient shape mismatch");
    }

    // Each step z' = (1-a) A z + a h contributes a*g to dH and passes
    // (1-a) A^T g down to the previous iterate; the initial iterate is h
    // itself, so the fully propagated g lands on dH at the end.
    DenseMatrix g = d_logits;
    DenseMatrix d_h(d_logits.rows(), d_logits.cols());
    DenseMatrix tmp;
    for (std::size_t k = steps; k-- > 0;) {
        for (std::size_t i = 0; i < g.size(); ++i) {
            d_h.values()[i] += checked_alpha.alpha * g.values()[i];
        }
        std::span<const double> vals;
        if (!cache.step_vals.empty()) vals = cache.step_vals[k];
        a_hat.spmm_transposed(g, tmp, vals);
        for (std::size_t i = 0; i < g.size(); ++i) {
            g.values()[i] = (1.0 - checked_alpha.alpha) * tmp.values()[i];
        }
    }
    for (std::size_t i = 0; i < g.size(); ++i) {
        d_h.values()[i] += g.values()[i];
    }
    return mlp_backward(x, p, cache.mlp, d_h, lambda_l2);
}

namespace {

void check_artifacts(ModelKind kind, const PropagationArtifacts& art,
                     std::size_t node_count) {
    switch (kind) {
        case ModelKind::Gcn:
        case ModelKind::Appnp:
            if (!art.a_hat) {
                throw MissingArtifact("normalized adjacency required for " +
                                      to_string(kind));
            }
            if (art.a_hat->rows() != node_count) {
                throw ShapeMismatch("normalized adjacency size does not match dataset");
            }
            break;
        case ModelKind::Ppnp:
            if (!art.ppr) throw MissingArtifact("teleport matrix required for ppnp");
            if (art.ppr->values.rows() != node_count) {
                throw ShapeMismatch("teleport matrix size does not match dataset");
            }
            break;
        case ModelKind::Scnp:
            if (!art.sigma) throw MissingArtifact("correlation matrix required for scnp");
            if (art.sigma->values.rows() != node_count) {
                throw ShapeMismatch("correlation matrix size does not match dataset");
            }
            break;
    }
}

}  // namespace

TrainResult train(ModelKind kind, const Dataset& data, const Split& split,
                  const TrainConfig& cfg, const PropagationArtifacts& art,
                  std::size_t hidden_size) {
    cfg.validate();
    if (hidden_size == 0) throw ConfigError("hidden size must be positive");
    check_artifacts(kind, art, data.graph.node_count());

    const auto t0 = std::chrono::steady_clock::now();
    Rng rng(cfg.seed);
    TrainResult res;
    res.seed = cfg.seed;
    res.params = glorot_init(data.feature_count, hidden_size, data.class_count, rng);
    AdamState adam = AdamState::for_params(res.params);

    const SparseMatrix& x = data.features;
    const std::span<const int> labels{data.labels};
    const std::span<const std::size_t> train_mask{split.train};
    const std::span<const std::size_t> val_mask{split.val};

    GcnCache gcn_cache;
    DensePropCache dense_cache;
    AppnpCache appnp_cache;

    auto forward = [&](bool training) {
        switch (kind) {
            case ModelKind::Gcn:
                return gcn_forward(*art.a_hat, x, res.params, cfg, training, rng,
                                   &gcn_cache);
            case ModelKind::Ppnp:
                return ppnp_forward(*art.ppr, x, res.params, cfg, training, rng,
                                    &dense_cache);
            case ModelKind::Appnp:
                return appnp_forward(*art.a_hat, x, res.params, cfg, art.alpha,
                                     art.power_steps, training, rng, &appnp_cache);
            case ModelKind::Scnp:
                return scnp_forward(*art.sigma, x, res.params, cfg, training, rng,
                                    &dense_cache);
        }
        throw ConfigError("unknown model kind");
    };
    auto backward = [&](const DenseMatrix& d_logits) {
        switch (kind) {
            case ModelKind::Gcn:
                return gcn_backward(*art.a_hat, x, res.params, gcn_cache, d_logits,
                                    cfg.lambda_l2);
            case ModelKind::Ppnp:
                return dense_prop_backward(art.ppr->values, x, res.params, dense_cache,
                                           d_logits, cfg.lambda_l2);
            case ModelKind::Appnp:
                return appnp_backward(*art.a_hat, x, res.params, cfg, art.alpha,
                                      art.power_steps, appnp_cache, d_logits,
                                      cfg.lambda_l2);
            case ModelKind::Scnp:
                return dense_prop_backward(art.sigma->values, x, res.params,
                                           dense_cache, d_logits, cfg.lambda_l2);
        }
        throw ConfigError("unknown model kind");
    };

    res.history.reserve(cfg.max_epochs);
    for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        const DenseMatrix probs = forward(true);
        EpochStats st;
        st.train_loss =
            masked_cross_entropy(probs, labels, train_mask, res.params, cfg.lambda_l2);
        const DenseMatrix d_logits = loss_logits_gradient(probs, labels, train_mask);
        const MlpGrads grads = backward(d_logits);
        adam_step(res.params, grads, adam, cfg.learning_rate);

        const DenseMatrix eval_probs = forward(false);
        st.train_acc = accuracy(eval_probs, labels, train_mask);
        st.val_acc = val_mask.empty() ? 0.0 : accuracy(eval_probs, labels, val_mask);
        res.history.push_back(st);
    }

    res.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return res;
}

void write_history_jsonl(const TrainResult& result, std::ostream& os) {
    for (std::size_t i = 0; i < result.history.size(); ++i) {
        const EpochStats& st = result.history[i];
        const nlohmann::json rec = {
            {"epoch", i + 1},
            {"train_loss", st.train_loss},
            {"train_acc", st.train_acc},
            {"val_acc", st.val_acc},
        };
        os << rec.dump() << '\n';
    }
    nlohmann::json summary = {
        {"summary", true},
        {"epochs", result.history.size()},
        {"seed", result.seed},
    };
    if (result.history.empty()) {
        summary["final_train_loss"] = nullptr;
        summary["final_train_acc"] = nullptr;
        summary["final_val_acc"] = nullptr;
    } else {
        summary["final_train_loss"] = result.history.back().train_loss;
        summary["final_train_acc"] = result.history.back().train_acc;
        summary["final_val_acc"] = result.history.back().val_acc;
    }
    os << summary.dump() << '\n';
}

void write_history_jsonl(const TrainResult& result, const std::filesystem::path& path) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw IoError("cannot open for writing: " + path.string());
    write_history_jsonl(result, f);
    if (!f) throw IoError("write failed: " + path.string());
}

}  // namespace scnp
