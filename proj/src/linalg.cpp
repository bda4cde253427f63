#include "specden/linalg.hpp"

#include "specden/common.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace specden::linalg {

double dot(std::span<const double> v, std::span<const double> w) {
    if (v.size() != w.size()) {
        throw InvalidInputError("dot: length mismatch (" + std::to_string(v.size()) + " vs " +
                                std::to_string(w.size()) + ")");
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) acc += v[i] * w[i];
    return acc;
}

double norm(std::span<const double> v) { return std::sqrt(dot(v, v)); }

void axpy(double a, std::span<const double> x, std::span<double> y) {
    if (x.size() != y.size()) {
        throw InvalidInputError("axpy: length mismatch (" + std::to_string(x.size()) + " vs " +
                                std::to_string(y.size()) + ")");
    }
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

void scal(double a, std::span<double> v) {
    for (double& x : v) x *= a;
}

// ---------------------------------------------------------------------------
// DenseSymMatrix
// ---------------------------------------------------------------------------

DenseSymMatrix::DenseSymMatrix(int n_, std::vector<double> raw) : n(n_), entries(std::move(raw)) {
    if (n < 1) throw InvalidInputError("DenseSymMatrix: dimension must be >= 1");
    if (entries.size() != static_cast<std::size_t>(n) * n) {
        throw InvalidInputError("DenseSymMatrix: expected " + std::to_string(n) + "x" +
                                std::to_string(n) + " entries");
    }
    for (double x : entries) {
        if (!std::isfinite(x)) throw InvalidInputError("DenseSymMatrix: non-finite entry");
    }
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < i; ++j) {
            double s = 0.5 * (at(i, j) + at(j, i));
            at(i, j) = s;
            at(j, i) = s;
        }
    }
}

double DenseSymMatrix::max_abs() const {
    double m = 0.0;
    for (double x : entries) m = std::max(m, std::abs(x));
    return m;
}

double DenseSymMatrix::trace() const {
    double t = 0.0;
    for (int i = 0; i < n; ++i) t += (*this)(i, i);
    return t;
}

DenseSymMatrix DenseSymMatrix::identity(int n) {
    std::vector<double> e(static_cast<std::size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i) e[static_cast<std::size_t>(i) * n + i] = 1.0;
    return DenseSymMatrix(n, std::move(e));
}

DenseSymMatrix DenseSymMatrix::diagonal(std::span<const double> d) {
    int n = static_cast<int>(d.size());
    std::vector<double> e(static_cast<std::size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i) e[static_cast<std::size_t>(i) * n + i] = d[i];
    return DenseSymMatrix(n, std::move(e));
}

DenseSymMatrix TridiagonalMatrix::dense() const {
    int m = order();
    if (m < 1) throw InvalidInputError("TridiagonalMatrix: order must be >= 1");
    if (offdiag.size() + 1 != diag.size()) {
        throw InvalidInputError("TridiagonalMatrix: offdiag must have order-1 entries");
    }
    std::vector<double> e(static_cast<std::size_t>(m) * m, 0.0);
    for (int i = 0; i < m; ++i) e[static_cast<std::size_t>(i) * m + i] = diag[i];
    for (int i = 0; i + 1 < m; ++i) {
        e[static_cast<std::size_t>(i) * m + i + 1] = offdiag[i];
        e[static_cast<std::size_t>(i + 1) * m + i] = offdiag[i];
    }
    return DenseSymMatrix(m, std::move(e));
}

// ---------------------------------------------------------------------------
// Householder tridiagonalization
// ---------------------------------------------------------------------------

namespace {

// Reduces the symmetric matrix held in `a` (row-major, destroyed) to
// tridiagonal form: d receives the diagonal, e the n-1 subdiagonal entries.
// If q is non-null it receives the orthogonal factor with a = Q T Q^T.
void householder_tridiag(std::vector<double>& a, int n, std::vector<double>& d,
                         std::vector<double>& e, std::vector<double>* q) {
    const auto idx = [n](int i, int j) { return static_cast<std::size_t>(i) * n + j; };
    d.assign(n, 0.0);
    e.assign(std::max(n - 1, 0), 0.0);
    std::vector<double> tau(std::max(n - 2, 0), 0.0);
    std::vector<double> p, w;

    for (int k = 0; k + 2 < n; ++k) {
        const int len = n - k - 1; // column below the diagonal, rows k+1..n-1
        double sigma2 = 0.0;
        for (int r = 0; r < len; ++r) {
            double x = a[idx(k + 1 + r, k)];
            sigma2 += x * x;
        }
        double sigma = std::sqrt(sigma2);
        double alpha = a[idx(k + 1, k)];
        if (sigma == 0.0 || sigma2 == alpha * alpha) {
            // Column already tridiagonal-shaped; nothing to annihilate.
            e[k] = alpha;
            continue;
        }
        double s = (alpha >= 0.0) ? sigma : -sigma;
        double v0 = alpha + s; // same sign as s, |v0| = |alpha| + sigma
        // Householder vector normalized so v[0] = 1, stored below the subdiagonal.
        for (int r = 1; r < len; ++r) a[idx(k + 1 + r, k)] /= v0;
        a[idx(k + 1, k)] = 1.0;
        tau[k] = v0 / s;

        // Symmetric rank-2 update of the trailing block B = a[k+1.., k+1..]:
        // B <- B - v w^T - w v^T with p = tau B v, w = p - (tau/2)(p.v) v.
        p.assign(len, 0.0);
        for (int i = 0; i < len; ++i) {
            double acc = 0.0;
            const double* row = &a[idx(k + 1 + i, k + 1)];
            for (int j = 0; j < len; ++j) acc += row[j] * a[idx(k + 1 + j, k)];
            p[i] = tau[k] * acc;
        }
        double pv = 0.0;
        for (int i = 0; i < len; ++i) pv += p[i] * a[idx(k + 1 + i, k)];
        w.assign(len, 0.0);
        for (int i = 0; i < len; ++i) w[i] = p[i] - 0.5 * tau[k] * pv * a[idx(k + 1 + i, k)];
        for (int i = 0; i < len; ++i) {
            double vi = a[idx(k + 1 + i, k)];
            double wi = w[i];
            double* row = &a[idx(k + 1 + i, k + 1)];
            for (int j = 0; j < len; ++j) {
                row[j] -= vi * w[j] + wi * a[idx(k + 1 + j, k)];
            }
        }
        e[k] = -s;
    }
    if (n >= 2) e[n - 2] = a[idx(n - 1, n - 2)];
    for (int i = 0; i < n; ++i) d[i] = a[idx(i, i)];

    if (q != nullptr) {
        q->assign(static_cast<std::size_t>(n) * n, 0.0);
        for (int i = 0; i < n; ++i) (*q)[idx(i, i)] = 1.0;
        // Q = H_0 H_1 ... H_{n-3}, built by applying the reflectors in reverse.
        for (int k = n - 3; k >= 0; --k) {
            if (tau[k] == 0.0) continue;
            const int len = n - k - 1;
            for (int j = k + 1; j < n; ++j) { // columns left of k+1 stay e_j
                double g = 0.0;
                for (int r = 0; r < len; ++r) g += a[idx(k + 1 + r, k)] * (*q)[idx(k + 1 + r, j)];
                g *= tau[k];
                for (int r = 0; r < len; ++r) (*q)[idx(k + 1 + r, j)] -= g * a[idx(k + 1 + r, k)];
            }
        }
    }
}

// Implicit-shift QL on a symmetric tridiagonal matrix. `rotate(i, c, s)` is
// invoked for each Givens rotation acting on columns i and i+1 of the
// eigenvector accumulator, whatever shape the caller keeps it in.
template <typename RotateFn>
void ql_implicit_shift(std::vector<double>& d, std::vector<double>& e, RotateFn&& rotate) {
    const int n = static_cast<int>(d.size());
    if (n <= 1) return;
    e.resize(n, 0.0); // e[n-1] is scratch
    const double eps = std::numeric_limits<double>::epsilon();
    const int max_iter = 50;

    for (int l = 0; l < n; ++l) {
        int iter = 0;
        int m;
        do {
            for (m = l; m < n - 1; ++m) {
                double dd = std::abs(d[m]) + std::abs(d[m + 1]);
                if (std::abs(e[m]) <= eps * dd) break;
            }
            if (m != l) {
                if (iter++ == max_iter) {
                    throw NumericFailureError("tridiagonal QL failed to converge");
                }
                double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
                double r = std::hypot(g, 1.0);
                g = d[m] - d[l] + e[l] / (g + std::copysign(r, g));
                double s = 1.0, c = 1.0, p = 0.0;
                bool underflow = false;
                for (int i = m - 1; i >= l; --i) {
                    double f = s * e[i];
                    double b = c * e[i];
                    r = std::hypot(f, g);
                    e[i + 1] = r;
                    if (r == 0.0) {
                        d[i + 1] -= p;
                        e[m] = 0.0;
                        underflow = true;
                        break;
                    }
                    s = f / r;
                    c = g / r;
                    g = d[i + 1] - p;
                    r = (d[i] - g) * s + 2.0 * c * b;
                    p = s * r;
                    d[i + 1] = g + p;
                    g = c * r - b;
                    rotate(i, c, s);
                }
                if (underflow) continue;
                d[l] -= p;
                e[l] = g;
                e[m] = 0.0;
            }
        } while (m != l);
    }
}

std::vector<int> descending_order(const std::vector<double>& d) {
    std::vector<int> perm(d.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::stable_sort(perm.begin(), perm.end(), [&](int i, int j) { return d[i] > d[j]; });
    return perm;
}

} // namespace

EigenDecomposition sym_eig_dense(const DenseSymMatrix& a, bool with_vectors) {
    const int n = a.n;
    std::vector<double> work = a.entries;
    std::vector<double> d, e, q;
    householder_tridiag(work, n, d, e, with_vectors ? &q : nullptr);

    if (with_vectors) {
        ql_implicit_shift(d, e, [&](int i, double c, double s) {
            for (int k = 0; k < n; ++k) {
                double* row = &q[static_cast<std::size_t>(k) * n];
                double f = row[i + 1];
                row[i + 1] = s * row[i] + c * f;
                row[i] = c * row[i] - s * f;
            }
        });
    } else {
        ql_implicit_shift(d, e, [](int, double, double) {});
    }

    auto perm = descending_order(d);
    EigenDecomposition out;
    out.eigenvalues.resize(n);
    for (int i = 0; i < n; ++i) out.eigenvalues[i] = d[perm[i]];
    if (with_vectors) {
        out.eigenvectors.assign(static_cast<std::size_t>(n) * n, 0.0);
        for (int j = 0; j < n; ++j) {
            int src = perm[j];
            for (int i = 0; i < n; ++i) {
                out.eigenvectors[static_cast<std::size_t>(i) * n + j] =
                    q[static_cast<std::size_t>(i) * n + src];
            }
        }
    }
    return out;
}

EigenDecomposition sym_tridiag_eig_firstrow(const TridiagonalMatrix& t) {
    const int m = t.order();
    if (m < 1) throw InvalidInputError("sym_tridiag_eig_firstrow: order must be >= 1");
    if (t.offdiag.size() + 1 != t.diag.size()) {
        throw InvalidInputError("sym_tridiag_eig_firstrow: offdiag must have order-1 entries");
    }
    std::vector<double> d = t.diag;
    std::vector<double> e = t.offdiag;
    std::vector<double> u(m, 0.0);
    u[0] = 1.0; // first row of the eigenvector matrix
    ql_implicit_shift(d, e, [&](int i, double c, double s) {
        double f = u[i + 1];
        u[i + 1] = s * u[i] + c * f;
        u[i] = c * u[i] - s * f;
    });

    auto perm = descending_order(d);
    EigenDecomposition out;
    out.eigenvalues.resize(m);
    out.first_row_sq.resize(m);
    for (int i = 0; i < m; ++i) {
        out.eigenvalues[i] = d[perm[i]];
        out.first_row_sq[i] = u[perm[i]] * u[perm[i]];
    }
    return out;
}

std::vector<double> sym_tridiag_eigenvalues(const TridiagonalMatrix& t) {
    std::vector<double> d = t.diag;
    std::vector<double> e = t.offdiag;
    ql_implicit_shift(d, e, [](int, double, double) {});
    std::sort(d.begin(), d.end(), std::greater<>());
    return d;
}

} // namespace specden::linalg
