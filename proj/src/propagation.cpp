#include "scnp/propagation.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <limits>
#include <thread>

#include "scnp/error.hpp"
#include "scnp/matrix_io.hpp"

namespace scnp {

TeleportParam::TeleportParam(double a) : alpha(a) {
    if (!std::isfinite(a) || !(a > 0.0) || !(a <= 1.0)) {
        throw ConfigError("teleport probability must lie in (0, 1]");
    }
}

PruneThreshold::PruneThreshold(double e) : epsilon(e) {
    if (!std::isfinite(e) || e < 0.0) {
        throw ConfigError("prune threshold must be finite and nonnegative");
    }
}

namespace {

using EigenDense = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Accumulated raw moments over the retained rows of one column pair.
// Every code path that feeds this visits rows in ascending index order, so
// identical inputs give bitwise identical sums no matter which path ran.
struct Moments {
    std::size_t m = 0;
    double su = 0.0, sv = 0.0;
    double suu = 0.0, svv = 0.0, suv = 0.0;
    double minu = std::numeric_limits<double>::infinity();
    double maxu = -std::numeric_limits<double>::infinity();
    double minv = std::numeric_limits<double>::infinity();
    double maxv = -std::numeric_limits<double>::infinity();

    void add(double a, double b) {
        ++m;
        su += a;
        sv += b;
        suu += a * a;
        svv += b * b;
        suv += a * b;
        minu = std::min(minu, a);
        maxu = std::max(maxu, a);
        minv = std::min(minv, b);
        maxv = std::max(maxv, b);
    }
};

double pearson_from_moments(const Moments& mo) {
    if (mo.m < 2) return 0.0;
    if (mo.minu == mo.maxu || mo.minv == mo.maxv) return 0.0;
    const double m = static_cast<double>(mo.m);
    const double cov = mo.suv - mo.su * mo.sv / m;
    const double varu = mo.suu - mo.su * mo.su / m;
    const double varv = mo.svv - mo.sv * mo.sv / m;
    if (!(varu > 0.0) || !(varv > 0.0)) return 0.0;
    const double r = cov / std::sqrt(varu * varv);
    return std::clamp(r, -1.0, 1.0);
}

// Correlation of two profile rows. `au`/`av` list the indices with entry
// >= eps, ascending. When those lists are short their merge walk visits
// exactly the retained rows; otherwise a full masked scan is cheaper.
double pair_correlation(const double* pu, const double* pv, std::size_t n, double eps,
                        std::span<const std::uint32_t> au,
                        std::span<const std::uint32_t> av) {
    Moments mo;
    if (au.size() + av.size() <= n / 2) {
        std::size_t x = 0, y = 0;
        while (x < au.size() || y < av.size()) {
            std::uint32_t i;
            if (y == av.size() || (x < au.size() && au[x] < av[y])) {
                i = au[x++];
            } else if (x == au.size() || av[y] < au[x]) {
                i = av[y++];
            } else {
                i = au[x];
                ++x;
                ++y;
            }
            mo.add(pu[i], pv[i]);
        }
    } else {
        for (std::size_t i = 0; i < n; ++i) {
            if (pu[i] >= eps || pv[i] >= eps) mo.add(pu[i], pv[i]);
        }
    }
    return pearson_from_moments(mo);
}

std::size_t resolve_threads(std::size_t requested) {
    if (requested != 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

}  // namespace

PprMatrix ppr_direct(const SparseMatrix& a_hat, TeleportParam alpha) {
    if (a_hat.rows() != a_hat.cols()) {
        throw ShapeMismatch("propagation matrix must be square");
    }
    if (!a_hat.is_symmetric(1e-10)) {
        throw InvalidGraph("propagation matrix must be symmetric");
    }
    const std::size_t n = a_hat.rows();
    const double a = alpha.alpha;

    EigenDense sys = EigenDense::Zero(n, n);
    {
        const auto row_ptr = a_hat.row_ptr();
        const auto col_idx = a_hat.col_idx();
        const auto values = a_hat.values();
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t p = row_ptr[i]; p < row_ptr[i + 1]; ++p) {
                sys(i, col_idx[p]) = -(1.0 - a) * values[p];
            }
        }
        sys.diagonal().array() += 1.0;
    }

    Eigen::PartialPivLU<EigenDense> lu(std::move(sys));
    EigenDense solved = lu.solve(EigenDense::Identity(n, n) * a);

    PprMatrix pi;
    pi.alpha = a;
    pi.values = DenseMatrix(n, n);
    Eigen::Map<EigenDense>(pi.values.data(), n, n) = solved;
    if (!pi.values.all_finite()) throw SingularSystem("linear solve produced non-finite values");

    // Residual of the defining system, checked with the sparse operator so
    // the verification route does not share the dense factorization.
    DenseMatrix t;
    a_hat.spmm(pi.values, t);
    double resid = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double r = pi.values(i, j) - (1.0 - a) * t(i, j);
            if (i == j) r -= a;
            resid = std::max(resid, std::fabs(r));
        }
    }
    if (resid > 1e-8) throw SingularSystem("linear solve residual too large");

    double max_asym = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            max_asym = std::max(max_asym, std::fabs(pi.values(i, j) - pi.values(j, i)));
        }
    }
    if (max_asym > 1e-10) throw NumericError("influence matrix came out asymmetric");

    for (double& v : pi.values.values()) {
        if (v < -1e-12 || v > 1.0 + 1e-12) {
            throw NumericError("influence entry outside [0, 1]");
        }
        v = std::clamp(v, 0.0, 1.0);
    }
    return pi;
}

DenseMatrix ppr_power_step(const SparseMatrix& a_hat, const DenseMatrix& z,
                           const DenseMatrix& h, TeleportParam alpha) {
    if (a_hat.rows() != a_hat.cols()) {
        throw ShapeMismatch("propagation matrix must be square");
    }
    if (z.rows() != a_hat.cols() || !z.same_shape(h)) {
        throw ShapeMismatch("power step shapes disagree");
    }
    DenseMatrix out;
    a_hat.spmm(z, out);
    const double a = alpha.alpha;
    for (std::size_t i = 0; i < out.size(); ++i) {
        out.values()[i] = (1.0 - a) * out.values()[i] + a * h.values()[i];
    }
    return out;
}

double sparse_correlation(std::span<const double> u, std::span<const double> v,
                          PruneThreshold epsilon) {
    if (u.size() != v.size()) throw LengthMismatch("correlation inputs differ in length");
    Moments mo;
    for (std::size_t i = 0; i < u.size(); ++i) {
        if (u[i] >= epsilon.epsilon || v[i] >= epsilon.epsilon) mo.add(u[i], v[i]);
    }
    return pearson_from_moments(mo);
}

std::vector<std::size_t> retained_rows(std::span<const double> u,
                                       std::span<const double> v, double epsilon) {
    if (u.size() != v.size()) throw LengthMismatch("correlation inputs differ in length");
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < u.size(); ++i) {
        if (u[i] >= epsilon || v[i] >= epsilon) idx.push_back(i);
    }
    return idx;
}

namespace {

// Column profiles stored contiguously: row j of `profile` is column j of Pi.
struct SigmaWorkspace {
    DenseMatrix profile;

    SigmaWorkspace(const PprMatrix& pi, double entry_drop) {
        profile = transpose(pi.values);
        if (entry_drop > 0.0) {
            for (double& v : profile.values()) {
                if (v < entry_drop) v = 0.0;
            }
        }
    }
};

SigmaMatrix sigma_for_epsilon(const SigmaWorkspace& ws, double alpha, double eps,
                              const SigmaOptions& opt) {
    const std::size_t n = ws.profile.rows();
    SigmaMatrix sigma;
    sigma.alpha = alpha;
    sigma.epsilon = eps;
    sigma.values = DenseMatrix(n, n);

    // Per-column indices with entry >= eps, ascending (scan order keeps
    // them sorted without an explicit sort).
    std::vector<std::vector<std::uint32_t>> strong(n);
    for (std::size_t j = 0; j < n; ++j) {
        const double* p = ws.profile.data() + j * n;
        for (std::size_t i = 0; i < n; ++i) {
            if (p[i] >= eps) strong[j].push_back(static_cast<std::uint32_t>(i));
        }
    }

    const std::size_t workers =
        std::min(resolve_threads(opt.threads), std::max<std::size_t>(n, 1));

    // Strict lower triangle, rows split so each worker gets a similar pair
    // count. Workers write disjoint entries, so the result cannot depend on
    // scheduling.
    auto run_rows = [&](std::size_t row_begin, std::size_t row_end) {
        for (std::size_t i = row_begin; i < row_end; ++i) {
            const double* pu = ws.profile.data() + i * n;
            for (std::size_t j = 0; j < i; ++j) {
                sigma.values(i, j) = pair_correlation(pu, ws.profile.data() + j * n, n,
                                                      eps, strong[i], strong[j]);
            }
        }
    };

    if (workers <= 1 || n < 64) {
        run_rows(0, n);
    } else {
        const double total = 0.5 * static_cast<double>(n) * static_cast<double>(n - 1);
        std::vector<std::size_t> bounds{0};
        for (std::size_t w = 1; w < workers; ++w) {
            // row r has r pairs below the diagonal; cumulative r(r-1)/2
            const double target = total * static_cast<double>(w) / static_cast<double>(workers);
            const auto r = static_cast<std::size_t>(0.5 + std::sqrt(0.25 + 2.0 * target));
            bounds.push_back(std::clamp(r, bounds.back(), n));
        }
        bounds.push_back(n);
        std::vector<std::thread> pool;
        std::vector<std::exception_ptr> errors(workers);
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                try {
                    run_rows(bounds[w], bounds[w + 1]);
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
        }
        for (auto& t : pool) t.join();
        for (auto& e : errors) {
            if (e) std::rethrow_exception(e);
        }
    }

    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < i; ++j) sigma.values(j, i) = sigma.values(i, j);
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (opt.literal_diagonal) {
            const double* p = ws.profile.data() + i * n;
            sigma.values(i, i) =
                2.0 * pair_correlation(p, p, n, eps, strong[i], strong[i]);
        } else {
            sigma.values(i, i) = 1.0;
        }
    }
    return sigma;
}

}  // namespace

SigmaMatrix build_sigma(const PprMatrix& pi, PruneThreshold epsilon,
                        const SigmaOptions& opt) {
    SigmaWorkspace ws(pi, opt.entry_drop);
    return sigma_for_epsilon(ws, pi.alpha, epsilon.epsilon, opt);
}

std::vector<SigmaMatrix> build_sigma_batch(const PprMatrix& pi,
                                           std::span<const double> epsilons,
                                           const SigmaOptions& opt) {
    SigmaWorkspace ws(pi, opt.entry_drop);
    std::vector<SigmaMatrix> out;
    out.reserve(epsilons.size());
    for (double eps : epsilons) {
        out.push_back(sigma_for_epsilon(ws, pi.alpha, PruneThreshold(eps).epsilon, opt));
    }
    return out;
}

void save_ppr(const PprMatrix& m, const std::filesystem::path& path) {
    save_matrix(m.values, m.alpha, std::numeric_limits<double>::quiet_NaN(), path);
}

PprMatrix load_ppr(const std::filesystem::path& path) {
    StoredMatrix s = load_matrix(path);
    if (!std::isfinite(s.alpha) || std::isfinite(s.epsilon)) {
        throw CorruptFile("not an influence-matrix artifact: " + path.string());
    }
    PprMatrix pi;
    pi.alpha = TeleportParam(s.alpha).alpha;
    pi.values = std::move(s.values);
    if (!pi.values.all_finite()) throw CorruptFile("non-finite entries: " + path.string());
    return pi;
}

void save_sigma(const SigmaMatrix& m, const std::filesystem::path& path) {
    save_matrix(m.values, m.alpha, m.epsilon, path);
}

SigmaMatrix load_sigma(const std::filesystem::path& path) {
    StoredMatrix s = load_matrix(path);
    if (!std::isfinite(s.alpha) || !std::isfinite(s.epsilon)) {
        throw CorruptFile("not a correlation-matrix artifact: " + path.string());
    }
    SigmaMatrix sigma;
    sigma.alpha = TeleportParam(s.alpha).alpha;
    sigma.epsilon = PruneThreshold(s.epsilon).epsilon;
    sigma.values = std::move(s.values);
    if (!sigma.values.all_finite()) {
        throw CorruptFile("non-finite entries: " + path.string());
    }
    return sigma;
}

}  // namespace scnp
