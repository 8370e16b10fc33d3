#include "scnp/nn.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <json.hpp>
#include <limits>

#include "scnp/error.hpp"
#include "scnp/matrix_io.hpp"

namespace scnp {

void TrainConfig::validate() const {
    if (!std::isfinite(lambda_l2) || lambda_l2 < 0.0) {
        throw ConfigError("l2 weight must be finite and nonnegative");
    }
    if (!std::isfinite(dropout_rate) || dropout_rate < 0.0 || dropout_rate >= 1.0) {
        throw ConfigError("dropout rate must lie in [0, 1)");
    }
    if (!std::isfinite(learning_rate) || learning_rate <= 0.0) {
        throw ConfigError("learning rate must be positive");
    }
}

MlpParams glorot_init(std::size_t features, std::size_t hidden, std::size_t classes,
                      Rng& rng) {
    MlpParams p;
    p.w0 = DenseMatrix(features, hidden);
    const double limit0 = std::sqrt(6.0 / static_cast<double>(features + hidden));
    for (double& v : p.w0.values()) v = rng.uniform(-limit0, limit0);
    p.b0.assign(hidden, 0.0);
    p.w1 = DenseMatrix(hidden, classes);
    const double limit1 = std::sqrt(6.0 / static_cast<double>(hidden + classes));
    for (double& v : p.w1.values()) v = rng.uniform(-limit1, limit1);
    p.b1.assign(classes, 0.0);
    return p;
}

void dropout_multipliers(std::size_t count, double rate, Rng& rng,
                         std::span<double> mult) {
    if (mult.size() != count) throw LengthMismatch("dropout buffer has wrong length");
    const double keep_scale = 1.0 / (1.0 - rate);
    for (std::size_t i = 0; i < count; ++i) {
        mult[i] = rng.uniform01() < rate ? 0.0 : keep_scale;
    }
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

}  // namespace

DenseMatrix mlp_forward(const SparseMatrix& x, const MlpParams& p,
                        const TrainConfig& cfg, bool training, Rng& rng,
                        MlpCache* cache) {
    if (x.cols() != p.w0.rows() || p.w0.cols() != p.w1.rows() ||
        p.b0.size() != p.w0.cols() || p.b1.size() != p.w1.cols()) {
        throw ShapeMismatch("network shapes do not conform");
    }
    const std::size_t n = x.rows();
    const std::size_t h = p.hidden_size();

    std::vector<double> xd_vals;
    if (training) {
        std::vector<double> mult(x.nnz());
        dropout_multipliers(x.nnz(), cfg.dropout_rate, rng, mult);
        xd_vals.resize(x.nnz());
        const auto vals = x.values();
        for (std::size_t i = 0; i < x.nnz(); ++i) xd_vals[i] = vals[i] * mult[i];
    }

    DenseMatrix z1;
    x.spmm(p.w0, z1, xd_vals);
    add_row_vector(z1, p.b0);

    DenseMatrix rd(n, h);
    for (std::size_t i = 0; i < z1.size(); ++i) {
        rd.values()[i] = std::max(0.0, z1.values()[i]);
    }

    DenseMatrix hidden_mult;
    if (training) {
        hidden_mult = DenseMatrix(n, h);
        dropout_multipliers(n * h, cfg.dropout_rate, rng, hidden_mult.values());
        for (std::size_t i = 0; i < rd.size(); ++i) {
            rd.values()[i] *= hidden_mult.values()[i];
        }
    }

    DenseMatrix out = matmul(rd, p.w1);
    add_row_vector(out, p.b1);

    if (cache) {
        cache->training = training;
        cache->xd_vals = std::move(xd_vals);
        cache->z1 = std::move(z1);
        cache->rd = std::move(rd);
        cache->hidden_mult = std::move(hidden_mult);
    }
    return out;
}

MlpGrads mlp_backward(const SparseMatrix& x, const MlpParams& p, const MlpCache& cache,
                      const DenseMatrix& d_h, double lambda_l2) {
    const std::size_t n = x.rows();
    if (cache.z1.rows() != n || cache.z1.cols() != p.hidden_size() ||
        !cache.rd.same_shape(cache.z1)) {
        throw StaleCache("cache does not match this network");
    }
    if (d_h.rows() != n || d_h.cols() != p.class_count()) {
        throw StaleCache("upstream gradient shape mismatch");
    }
    if (cache.training &&
        (cache.xd_vals.size() != x.nnz() || !cache.hidden_mult.same_shape(cache.z1))) {
        throw StaleCache("cache does not match this input");
    }

    MlpGrads g;
    g.w1 = matmul_ta(cache.rd, d_h);
    g.b1 = column_sums(d_h);

    DenseMatrix d_rd = matmul(d_h, transpose(p.w1));
    if (cache.training) {
        for (std::size_t i = 0; i < d_rd.size(); ++i) {
            d_rd.values()[i] *= cache.hidden_mult.values()[i];
        }
    }
    for (std::size_t i = 0; i < d_rd.size(); ++i) {
        if (cache.z1.values()[i] <= 0.0) d_rd.values()[i] = 0.0;
    }

    x.spmm_transposed(d_rd, g.w0, cache.xd_vals);
    for (std::size_t i = 0; i < g.w0.size(); ++i) {
        g.w0.values()[i] += 2.0 * lambda_l2 * p.w0.values()[i];
    }
    g.b0 = column_sums(d_rd);
    return g;
}

DenseMatrix softmax_rows(const DenseMatrix& m) {
    DenseMatrix out(m.rows(), m.cols());
    for (std::size_t i = 0; i < m.rows(); ++i) {
        const double* in = m.data() + i * m.cols();
        double* o = out.data() + i * m.cols();
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < m.cols(); ++j) mx = std::max(mx, in[j]);
        double z = 0.0;
        for (std::size_t j = 0; j < m.cols(); ++j) {
            o[j] = std::exp(in[j] - mx);
            z += o[j];
        }
        for (std::size_t j = 0; j < m.cols(); ++j) o[j] /= z;
    }
    return out;
}

DenseMatrix softmax_backward(const DenseMatrix& probs, const DenseMatrix& upstream) {
    if (!probs.same_shape(upstream)) throw ShapeMismatch("softmax gradient shape mismatch");
    DenseMatrix out(probs.rows(), probs.cols());
    for (std::size_t i = 0; i < probs.rows(); ++i) {
        const double* p = probs.data() + i * probs.cols();
        const double* u = upstream.data() + i * probs.cols();
        double dot = 0.0;
        for (std::size_t j = 0; j < probs.cols(); ++j) dot += u[j] * p[j];
        double* o = out.data() + i * probs.cols();
        for (std::size_t j = 0; j < probs.cols(); ++j) o[j] = p[j] * (u[j] - dot);
    }
    return out;
}

double masked_cross_entropy(const DenseMatrix& probs, std::span<const int> labels,
                            std::span<const std::size_t> mask, const MlpParams& p,
                            double lambda_l2) {
    if (mask.empty()) throw EmptyMask("loss over an empty mask");
    if (labels.size() != probs.rows()) throw LengthMismatch("one label per row required");
    double nll = 0.0;
    for (const std::size_t i : mask) {
        const auto y = static_cast<std::size_t>(labels[i]);
        nll -= std::log(std::max(probs(i, y), 1e-12));
    }
    double w0_sq = 0.0;
    for (const double v : p.w0.values()) w0_sq += v * v;
    return nll / static_cast<double>(mask.size()) + lambda_l2 * w0_sq;
}

DenseMatrix loss_logits_gradient(const DenseMatrix& probs, std::span<const int> labels,
                                 std::span<const std::size_t> mask) {
    if (mask.empty()) throw EmptyMask("loss over an empty mask");
    if (labels.size() != probs.rows()) throw LengthMismatch("one label per row required");
    DenseMatrix g(probs.rows(), probs.cols());
    const double inv = 1.0 / static_cast<double>(mask.size());
    for (const std::size_t i : mask) {
        const double* p = probs.data() + i * probs.cols();
        double* o = g.data() + i * probs.cols();
        for (std::size_t j = 0; j < probs.cols(); ++j) o[j] = p[j] * inv;
        o[static_cast<std::size_t>(labels[i])] -= inv;
    }
    return g;
}

AdamState AdamState::for_params(const MlpParams& p) {
    AdamState s;
    s.m_w0 = DenseMatrix(p.w0.rows(), p.w0.cols());
    s.v_w0 = DenseMatrix(p.w0.rows(), p.w0.cols());
    s.m_w1 = DenseMatrix(p.w1.rows(), p.w1.cols());
    s.v_w1 = DenseMatrix(p.w1.rows(), p.w1.cols());
    s.m_b0.assign(p.b0.size(), 0.0);
    s.v_b0.assign(p.b0.size(), 0.0);
    s.m_b1.assign(p.b1.size(), 0.0);
    s.v_b1.assign(p.b1.size(), 0.0);
    return s;
}

namespace {

void adam_update(std::span<double> param, std::span<const double> grad,
                 std::span<double> m, std::span<double> v, double lr, double bc1,
                 double bc2) {
    if (param.size() != grad.size() || param.size() != m.size() ||
        param.size() != v.size()) {
        throw ShapeMismatch("optimizer state does not match parameters");
    }
    for (std::size_t i = 0; i < param.size(); ++i) {
        m[i] = AdamState::beta1 * m[i] + (1.0 - AdamState::beta1) * grad[i];
        v[i] = AdamState::beta2 * v[i] + (1.0 - AdamState::beta2) * grad[i] * grad[i];
        const double mhat = m[i] / bc1;
        const double vhat = v[i] / bc2;
        param[i] -= lr * mhat / (std::sqrt(vhat) + AdamState::eps);
    }
}

}  // namespace

void adam_step(MlpParams& p, const MlpGrads& g, AdamState& s, double lr) {
    const auto t = static_cast<double>(++s.step);
    const double bc1 = 1.0 - std::pow(AdamState::beta1, t);
    const double bc2 = 1.0 - std::pow(AdamState::beta2, t);
    adam_update(p.w0.values(), g.w0.values(), s.m_w0.values(), s.v_w0.values(), lr, bc1, bc2);
    adam_update(p.b0, g.b0, s.m_b0, s.v_b0, lr, bc1, bc2);
    adam_update(p.w1.values(), g.w1.values(), s.m_w1.values(), s.v_w1.values(), lr, bc1, bc2);
    adam_update(p.b1, g.b1, s.m_b1, s.v_b1, lr, bc1, bc2);
}

namespace {

constexpr char kCkptMagic[8] = {'S', 'C', 'N', 'P', 'C', 'K', 'P', '1'};

std::vector<unsigned char> tensor_bytes(const DenseMatrix& m) {
    StoredMatrix s;
    s.values = m;
    return serialize_matrix(s);
}

DenseMatrix vector_as_matrix(const std::vector<double>& v) {
    DenseMatrix m(1, v.size());
    std::copy(v.begin(), v.end(), m.values().begin());
    return m;
}

}  // namespace

void save_checkpoint(const MlpParams& p, const TrainConfig& cfg,
                     const std::filesystem::path& path) {
    nlohmann::json meta = {
        {"lambda_l2", cfg.lambda_l2},
        {"dropout_rate", cfg.dropout_rate},
        {"learning_rate", cfg.learning_rate},
        {"max_epochs", cfg.max_epochs},
        {"seed", cfg.seed},
        {"adjacency_dropout", cfg.adjacency_dropout},
        {"tensors", {"w0", "b0", "w1", "b1"}},
    };
    const std::string meta_str = meta.dump();

    std::vector<unsigned char> buf(kCkptMagic, kCkptMagic + 8);
    for (int i = 0; i < 8; ++i) {
        buf.push_back(static_cast<unsigned char>(meta_str.size() >> (8 * i)));
    }
    buf.insert(buf.end(), meta_str.begin(), meta_str.end());
    for (const auto& tensor : {tensor_bytes(p.w0), tensor_bytes(vector_as_matrix(p.b0)),
                               tensor_bytes(p.w1), tensor_bytes(vector_as_matrix(p.b1))}) {
        buf.insert(buf.end(), tensor.begin(), tensor.end());
    }

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open for writing: " + path.string());
    f.write(reinterpret_cast<const char*>(buf.data()),
            static_cast<std::streamsize>(buf.size()));
    if (!f) throw IoError("write failed: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open: " + path.string());
    std::vector<unsigned char> buf((std::istreambuf_iterator<char>(f)),
                                   std::istreambuf_iterator<char>());
    if (f.bad()) throw IoError("read failed: " + path.string());

    if (buf.size() < 8 || std::memcmp(buf.data(), kCkptMagic, 8) != 0) {
        throw VersionMismatch("not a checkpoint: " + path.string());
    }
    if (buf.size() < 16) throw CorruptFile("truncated checkpoint: " + path.string());
    std::uint64_t meta_len = 0;
    for (int i = 0; i < 8; ++i) {
        meta_len |= static_cast<std::uint64_t>(buf[8 + static_cast<std::size_t>(i)])
                    << (8 * i);
    }
    if (meta_len > buf.size() - 16) {
        throw CorruptFile("truncated checkpoint: " + path.string());
    }

    Checkpoint c;
    try {
        const nlohmann::json meta = nlohmann::json::parse(
            buf.begin() + 16, buf.begin() + 16 + static_cast<std::ptrdiff_t>(meta_len));
        c.config.lambda_l2 = meta.at("lambda_l2").get<double>();
        c.config.dropout_rate = meta.at("dropout_rate").get<double>();
        c.config.learning_rate = meta.at("learning_rate").get<double>();
        c.config.max_epochs = meta.at("max_epochs").get<std::size_t>();
        c.config.seed = meta.at("seed").get<std::uint64_t>();
        c.config.adjacency_dropout = meta.at("adjacency_dropout").get<bool>();
    } catch (const nlohmann::json::exception&) {
        throw CorruptFile("bad checkpoint metadata: " + path.string());
    }

    std::size_t offset = 16 + meta_len;
    auto next_tensor = [&]() {
        std::size_t used = 0;
        auto m = deserialize_matrix(
            std::span(buf.data() + offset, buf.size() - offset), &used);
        offset += used;
        return std::move(m.values);
    };
    auto as_vector = [](DenseMatrix m) {
        if (m.rows() != 1) throw CorruptFile("checkpoint bias tensor is not a row");
        return std::move(m.values());
    };
    try {
        c.params.w0 = next_tensor();
        c.params.b0 = as_vector(next_tensor());
        c.params.w1 = next_tensor();
        c.params.b1 = as_vector(next_tensor());
    } catch (const VersionMismatch&) {
        throw CorruptFile("truncated checkpoint: " + path.string());
    }
    if (offset != buf.size()) throw CorruptFile("trailing bytes: " + path.string());
    if (c.params.w0.cols() != c.params.b0.size() ||
        c.params.w1.rows() != c.params.w0.cols() ||
        c.params.w1.cols() != c.params.b1.size()) {
        throw CorruptFile("inconsistent checkpoint shapes: " + path.string());
    }
    return c;
}

}  // namespace scnp
