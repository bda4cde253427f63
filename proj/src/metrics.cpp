#include "specden/metrics.hpp"

#include "specden/common.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace specden::metrics {

SpectrumSummary::SpectrumSummary(std::vector<double> eig, int classes_)
    : eigenvalues(std::move(eig)), classes(classes_) {
    if (eigenvalues.empty()) throw InvalidInputError("SpectrumSummary: empty spectrum");
    for (std::size_t i = 0; i + 1 < eigenvalues.size(); ++i) {
        if (eigenvalues[i] < eigenvalues[i + 1]) {
            throw InvalidInputError("SpectrumSummary: eigenvalues must be descending");
        }
    }
}

SubspaceBasis::SubspaceBasis(std::vector<std::vector<double>> vecs) : vectors(std::move(vecs)) {
    if (vectors.empty()) throw InvalidInputError("SubspaceBasis: empty basis");
    std::size_t n = vectors.front().size();
    for (std::size_t i = 0; i < vectors.size(); ++i) {
        if (vectors[i].size() != n) throw InvalidInputError("SubspaceBasis: length mismatch");
        for (std::size_t j = 0; j <= i; ++j) {
            double g = linalg::dot(vectors[i], vectors[j]);
            double target = (i == j) ? 1.0 : 0.0;
            if (std::abs(g - target) > 1e-8) {
                throw InvalidInputError("SubspaceBasis: vectors not orthonormal within 1e-8");
            }
        }
    }
}

double zeta(const SpectrumSummary& spectrum, int k_index) {
    if (k_index < 1 || k_index > spectrum.size()) {
        throw InvalidInputError("zeta: K must satisfy 1 <= K <= n");
    }
    double lk = spectrum.eigenvalues[k_index - 1];
    if (lk == 0.0) throw InvalidInputError("zeta: degenerate spectrum, lambda_K = 0");
    return spectrum.eigenvalues[0] / lk;
}

bool lambda_k_negative(const SpectrumSummary& spectrum, int k_index) {
    if (k_index < 1 || k_index > spectrum.size()) {
        throw InvalidInputError("zeta: K must satisfy 1 <= K <= n");
    }
    return spectrum.eigenvalues[k_index - 1] < 0.0;
}

double signed_energy(std::span<const double> eigenvalues, int p, SignClass sign) {
    if (p != 1 && p != 2) throw InvalidInputError("signed_energy: p must be 1 or 2");
    if (eigenvalues.empty()) throw InvalidInputError("signed_energy: empty spectrum");
    double acc = 0.0;
    for (double lambda : eigenvalues) {
        bool in_class = (sign == SignClass::Positive) ? lambda > 0.0 : lambda < 0.0;
        if (!in_class) continue;
        double a = std::abs(lambda);
        acc += (p == 1) ? a : a * a;
    }
    return acc / static_cast<double>(eigenvalues.size());
}

double signed_energy_density(const slq::SpectralDensityEstimate& density, int p, SignClass sign) {
    if (p != 1 && p != 2) throw InvalidInputError("signed_energy_density: p must be 1 or 2");
    std::vector<double> integrand(density.grid.size(), 0.0);
    for (std::size_t i = 0; i < density.grid.size(); ++i) {
        double t = density.grid[i];
        bool in_class = (sign == SignClass::Positive) ? t > 0.0 : t < 0.0;
        if (!in_class) continue;
        double a = std::abs(t);
        integrand[i] = ((p == 1) ? a : a * a) * density.values[i];
    }
    return slq::trapezoid(density.grid, integrand);
}

SubspaceBasis top_eigenvectors(const linalg::DenseSymMatrix& a, int r) {
    if (r < 1 || r > a.n) throw InvalidInputError("top_eigenvectors: need 1 <= r <= n");
    auto eig = linalg::sym_eig_dense(a, true);
    std::vector<std::vector<double>> vecs(r, std::vector<double>(a.n));
    for (int j = 0; j < r; ++j) {
        for (int i = 0; i < a.n; ++i) {
            vecs[j][i] = eig.eigenvectors[static_cast<std::size_t>(i) * a.n + j];
        }
    }
    return SubspaceBasis(std::move(vecs));
}

SubspaceBasis top_eigenvectors(const linop::SymmetricOperator& op, int r, int m,
                               std::uint64_t seed) {
    const std::size_t n = op.dim();
    if (r < 1 || static_cast<std::size_t>(r) > n) {
        throw InvalidInputError("top_eigenvectors: need 1 <= r <= n");
    }
    m = static_cast<int>(std::min<std::size_t>(std::max(m, 3 * r), n));
    auto v0 = linop::random_unit_vector(n, Rng::derive(seed, 0x70f));
    auto lz = slq::lanczos(op, v0, m);
    auto eig = linalg::sym_eig_dense(lz.t.dense(), true);
    const int order = eig.order();
    if (order < r) {
        throw ConvergenceError("top_eigenvectors: Krylov space collapsed to order " +
                               std::to_string(order) + " < r");
    }

    double scale = std::max(std::abs(eig.eigenvalues.front()), std::abs(eig.eigenvalues.back()));
    if (scale == 0.0) scale = 1.0;
    std::vector<std::vector<double>> vecs;
    std::string bad;
    for (int j = 0; j < r; ++j) {
        // Ritz vector y = V z_j and its residual estimate |beta_m z_{m,j}|.
        std::vector<double> y(n, 0.0);
        for (int i = 0; i < order; ++i) {
            double zij = eig.eigenvectors[static_cast<std::size_t>(i) * order + j];
            linalg::axpy(zij, lz.basis[i], y);
        }
        double z_last = eig.eigenvectors[static_cast<std::size_t>(order - 1) * order + j];
        double residual = lz.residual_norm * std::abs(z_last);
        if (residual > 1e-6 * scale) {
            bad += (bad.empty() ? "" : ", ") + std::to_string(j) + ":" + format_double(residual);
            continue;
        }
        double ny = linalg::norm(y);
        linalg::scal(1.0 / ny, y);
        vecs.push_back(std::move(y));
    }
    if (!bad.empty()) {
        throw ConvergenceError("top_eigenvectors: unconverged Ritz pairs (index:residual) " + bad +
                               "; increase m");
    }
    return SubspaceBasis(std::move(vecs));
}

namespace {

linalg::EigenDecomposition covariance_gram_eig(const linop::GradientSet& grads) {
    const int count = static_cast<int>(grads.count());
    std::vector<double> gram(static_cast<std::size_t>(count) * count, 0.0);
    for (int i = 0; i < count; ++i) {
        for (int j = 0; j <= i; ++j) {
            double g = linalg::dot(grads.gradients[i], grads.gradients[j]) / count;
            gram[static_cast<std::size_t>(i) * count + j] = g;
            gram[static_cast<std::size_t>(j) * count + i] = g;
        }
    }
    return linalg::sym_eig_dense(linalg::DenseSymMatrix(count, std::move(gram)), true);
}

} // namespace

std::vector<double> covariance_eigenvalues(const linop::GradientSet& grads) {
    return covariance_gram_eig(grads).eigenvalues;
}

SubspaceBasis covariance_top_eigenvectors(const linop::GradientSet& grads, int r) {
    const int count = static_cast<int>(grads.count());
    if (r < 1) throw InvalidInputError("covariance_top_eigenvectors: r must be >= 1");
    auto eig = covariance_gram_eig(grads);
    // Sigma = (1/N) G^T G shares nonzero eigenvalues with the Gram matrix
    // (1/N) G G^T; eigenvector of Sigma for pair (mu, y) is G^T y / sqrt(N mu).
    std::vector<std::vector<double>> vecs;
    for (int j = 0; j < count && static_cast<int>(vecs.size()) < r; ++j) {
        if (eig.eigenvalues[j] <= 1e-12 * std::max(eig.eigenvalues[0], 0.0)) break;
        std::vector<double> v(grads.n, 0.0);
        for (int i = 0; i < count; ++i) {
            double yi = eig.eigenvectors[static_cast<std::size_t>(i) * count + j];
            linalg::axpy(yi, grads.gradients[i], v);
        }
        double nv = linalg::norm(v);
        if (nv == 0.0) break;
        linalg::scal(1.0 / nv, v);
        vecs.push_back(std::move(v));
    }
    if (static_cast<int>(vecs.size()) < r) {
        throw InvalidInputError("covariance_top_eigenvectors: rank " + std::to_string(vecs.size()) +
                                " < requested r = " + std::to_string(r));
    }
    return SubspaceBasis(std::move(vecs));
}

double projection_ratio(std::span<const double> g, const SubspaceBasis& basis) {
    double g2 = linalg::dot(g, g);
    if (g2 == 0.0) throw InvalidInputError("projection_ratio: zero gradient");
    double proj = 0.0;
    for (const auto& b : basis.vectors) {
        double c = linalg::dot(b, g);
        proj += c * c;
    }
    return std::clamp(proj / g2, 0.0, 1.0);
}

double subspace_overlap(const SubspaceBasis& u, const SubspaceBasis& w) {
    if (u.dim() != w.dim()) throw InvalidInputError("subspace_overlap: dimension mismatch");
    double acc = 0.0;
    for (const auto& uvec : u.vectors) {
        for (const auto& wvec : w.vectors) {
            double c = linalg::dot(uvec, wvec);
            acc += c * c;
        }
    }
    return acc / u.rank();
}

double path_alignment(std::span<const double> grad, std::span<const double> displacement) {
    double ng = linalg::norm(grad);
    double nd = linalg::norm(displacement);
    if (ng == 0.0 || nd == 0.0) throw InvalidInputError("path_alignment: zero vector");
    return linalg::dot(grad, displacement) / (ng * nd);
}

} // namespace specden::metrics
