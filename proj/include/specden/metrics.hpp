#pragma once

#include "specden/linalg.hpp"
#include "specden/linop.hpp"
#include "specden/slq.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace specden::metrics {

/// Spectrum with the class count used for the outlier ratio.
struct SpectrumSummary {
    std::vector<double> eigenvalues; // descending
    int classes = 0;

    SpectrumSummary() = default;
    SpectrumSummary(std::vector<double> eigenvalues, int classes);
    int size() const { return static_cast<int>(eigenvalues.size()); }
};

/// r orthonormal vectors of length n (validated to 1e-8 on construction).
struct SubspaceBasis {
    std::vector<std::vector<double>> vectors;

    SubspaceBasis() = default;
    explicit SubspaceBasis(std::vector<std::vector<double>> vectors);
    int rank() const { return static_cast<int>(vectors.size()); }
    std::size_t dim() const { return vectors.empty() ? 0 : vectors.front().size(); }
};

enum class SignClass { Negative, Positive };

/// Outlier ratio lambda_1 / lambda_K. Returned signed; callers should flag
/// a negative lambda_K (see lambda_k_negative).
double zeta(const SpectrumSummary& spectrum, int k_index);
bool lambda_k_negative(const SpectrumSummary& spectrum, int k_index);

/// (1/n) sum over the chosen sign class of |lambda|^p, p in {1, 2}.
double signed_energy(std::span<const double> eigenvalues, int p, SignClass sign);

/// Same quantity from a smoothed density: integral of |t|^p phi(t) over the
/// sign region, by the trapezoid rule.
double signed_energy_density(const slq::SpectralDensityEstimate& density, int p, SignClass sign);

/// Top-r eigenvectors from the dense eigensolver.
SubspaceBasis top_eigenvectors(const linalg::DenseSymMatrix& a, int r);

/// Matrix-free path: Ritz vectors of an m-step Lanczos run (m >= 3r enforced)
/// with a residual convergence check at 1e-6 * |ritz_max|.
SubspaceBasis top_eigenvectors(const linop::SymmetricOperator& op, int r, int m,
                               std::uint64_t seed);

/// Nonzero eigenpairs of the gradient covariance through the N x N Gram
/// matrix, so no n x n matrix is ever formed.
SubspaceBasis covariance_top_eigenvectors(const linop::GradientSet& grads, int r);
std::vector<double> covariance_eigenvalues(const linop::GradientSet& grads);

/// ||P_B g||^2 / ||g||^2, in [0, 1].
double projection_ratio(std::span<const double> g, const SubspaceBasis& basis);

/// Mean energy of U's basis vectors captured by span(W): (1/r_U) sum_i ||P_W u_i||^2.
double subspace_overlap(const SubspaceBasis& u, const SubspaceBasis& w);

/// Cosine of the angle between the gradient and a displacement.
double path_alignment(std::span<const double> grad, std::span<const double> displacement);

} // namespace specden::metrics
