#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace specden::linalg {

// ---------------------------------------------------------------------------
// Vector primitives. All reductions run left-to-right in double precision so
// repeated calls on identical inputs are bit-identical.
// ---------------------------------------------------------------------------

double dot(std::span<const double> v, std::span<const double> w);
double norm(std::span<const double> v);
/// y += a * x
void axpy(double a, std::span<const double> x, std::span<double> y);
void scal(double a, std::span<double> v);

// ---------------------------------------------------------------------------
// Matrix types
// ---------------------------------------------------------------------------

/// Dense symmetric matrix, row-major. Construction symmetrizes the input so
/// entries[i*n+j] == entries[j*n+i] holds exactly.
struct DenseSymMatrix {
    int n = 0;
    std::vector<double> entries;

    DenseSymMatrix() = default;
    /// Symmetrizes (A + A^T)/2 and rejects non-finite entries.
    DenseSymMatrix(int n, std::vector<double> raw_entries);

    double operator()(int i, int j) const { return entries[static_cast<std::size_t>(i) * n + j]; }
    double& at(int i, int j) { return entries[static_cast<std::size_t>(i) * n + j]; }
    double max_abs() const;
    double trace() const;

    static DenseSymMatrix identity(int n);
    static DenseSymMatrix diagonal(std::span<const double> d);
};

/// Symmetric tridiagonal matrix of order m: diag holds the m Lanczos alphas,
/// offdiag the m-1 betas.
struct TridiagonalMatrix {
    std::vector<double> diag;
    std::vector<double> offdiag;

    int order() const { return static_cast<int>(diag.size()); }
    DenseSymMatrix dense() const;
};

/// Eigenvalues in descending order. `eigenvectors`, when present, is m x m
/// row-major with column i the unit eigenvector of eigenvalues[i].
/// `first_row_sq`, when present, holds the squared first components of the
/// unit eigenvectors (they sum to 1).
struct EigenDecomposition {
    std::vector<double> eigenvalues;
    std::vector<double> eigenvectors;
    std::vector<double> first_row_sq;

    int order() const { return static_cast<int>(eigenvalues.size()); }
    bool has_vectors() const { return !eigenvectors.empty(); }
};

// ---------------------------------------------------------------------------
// Eigensolvers. Householder tridiagonalization + implicit-shift QL, which is
// robust for the dense-oracle sizes used here (n up to a few thousand).
// ---------------------------------------------------------------------------

/// Full symmetric eigendecomposition. With with_vectors=false only the
/// eigenvalues are computed (much faster for large oracles).
EigenDecomposition sym_eig_dense(const DenseSymMatrix& a, bool with_vectors = true);

/// Eigenvalues of a symmetric tridiagonal matrix together with the squared
/// first components of its unit eigenvectors. The QL rotations update a
/// single m-vector instead of the full eigenvector matrix, which is all the
/// quadrature-weight extraction needs.
EigenDecomposition sym_tridiag_eig_firstrow(const TridiagonalMatrix& t);

/// Eigenvalues only.
std::vector<double> sym_tridiag_eigenvalues(const TridiagonalMatrix& t);

} // namespace specden::linalg
