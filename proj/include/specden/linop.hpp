#pragma once

#include "specden/linalg.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace specden::linop {

/// Matrix-free symmetric linear map with a deterministic apply. Instances are
/// immutable and safe to share across threads.
class SymmetricOperator {
public:
    using ApplyFn = std::function<std::vector<double>(std::span<const double>)>;

    SymmetricOperator(std::size_t n, std::string label, ApplyFn apply);

    std::size_t dim() const { return n_; }
    const std::string& label() const { return label_; }

    /// A*v. Rejects dimension mismatches and non-finite inputs; a non-finite
    /// output is reported as a numeric failure (broken operator).
    std::vector<double> apply(std::span<const double> v) const;

private:
    std::size_t n_;
    std::string label_;
    ApplyFn apply_;
};

/// Per-batch gradients backing gradient-covariance operators: N vectors of
/// equal length n.
struct GradientSet {
    std::size_t n = 0;
    std::vector<std::vector<double>> gradients;

    GradientSet() = default;
    GradientSet(std::size_t n, std::vector<std::vector<double>> gradients);
    std::size_t count() const { return gradients.size(); }
};

/// Wraps a dense symmetric matrix as an operator (row-by-row products).
SymmetricOperator dense_operator(linalg::DenseSymMatrix a);

/// apply(v) = (1/N) sum_i g_i (g_i . v) -- rank <= N, positive semi-definite.
SymmetricOperator covariance_operator(GradientSet grads);

/// Max over random unit pairs (u, v) of |u.(Av) - v.(Au)|. Used as a checked
/// contract on every operator family before handing it to Lanczos.
double check_symmetry(const SymmetricOperator& op, int trials, std::uint64_t seed);

/// Deterministic random unit vector of length n.
std::vector<double> random_unit_vector(std::size_t n, std::uint64_t seed);

} // namespace specden::linop
