#pragma once

#include "specden/linalg.hpp"
#include "specden/linop.hpp"
#include "specden/slq.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace specden::chebyshev {

using slq::SpectralDensityEstimate;

/// Chebyshev expansion of the Gaussian kernel f(.; t, sigma2) rescaled from
/// [lo, hi] to [-1, 1]: g(lambda) = c_0 + sum_{j>=1} c_j T_j(lambda_tilde).
struct ChebyshevApprox {
    int degree = 0;
    std::vector<double> coeffs; // c_0 .. c_degree
    double lo = -1.0;
    double hi = 1.0;

    double evaluate(double lambda) const;
};

/// Chebyshev-basis moments mu_j = v^T T_j(H_tilde) v of the rescaled
/// operator, j = 0..degree. |mu_j| <= 1 for a unit probe with spectrum inside
/// the rescaling interval.
struct MomentVector {
    std::vector<double> values;

    int degree() const { return static_cast<int>(values.size()) - 1; }
};

/// Expansion of an arbitrary target by collocation at degree+1 Chebyshev
/// points of [lo, hi].
ChebyshevApprox cheb_fit(const std::function<double(double)>& target, int degree, double lo,
                         double hi);

/// Coefficients of the Gaussian kernel f(.; t, sigma2) by collocation at
/// degree+1 Chebyshev points.
ChebyshevApprox cheb_coeffs(double t, double sigma2, int degree, double lo, double hi);

/// Moments via the three-term vector recurrence w_{j+1} = 2 H~ w_j - w_{j-1};
/// costs exactly `degree` operator applications.
MomentVector cheb_moments(const linop::SymmetricOperator& op, std::span<const double> v, int degree,
                          double lo, double hi);

/// Oracle path: the same moments from a full eigendecomposition,
/// mu_j = sum_i beta_i^2 T_j(lambda_tilde_i) with beta_i = v . q_i.
MomentVector cheb_moments_dense(const linalg::EigenDecomposition& eig, std::span<const double> v,
                                int degree, double lo, double hi);

struct ChebEstimateOptions {
    int k = 10;
    int degree = 90;
    double sigma2 = 1e-5;
    std::uint64_t seed = 0;
    std::vector<double> grid;
    int grid_points = 1000;
    // Lanczos steps used to bracket the spectrum before rescaling.
    int interval_steps = 30;
};

/// Explicit polynomial baseline: per-probe moments against kernel
/// coefficients, averaged over k probes. Values can go negative; that is the
/// documented defect of the method.
SpectralDensityEstimate estimate_density_cheb(const linop::SymmetricOperator& op,
                                              const ChebEstimateOptions& opts);

} // namespace specden::chebyshev
