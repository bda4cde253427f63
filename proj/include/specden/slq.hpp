#pragma once

#include "specden/linalg.hpp"
#include "specden/linop.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace specden::slq {

/// Lanczos output: tridiagonal T of effective order m_eff, the orthonormal
/// basis (kept for diagnostics and Ritz-vector extraction), and the step at
/// which breakdown truncated the run, if any. `residual_norm` is the norm of
/// the last un-normalized Lanczos vector (beta_m; 0 on breakdown).
struct LanczosResult {
    linalg::TridiagonalMatrix t;
    std::vector<std::vector<double>> basis;
    std::optional<int> breakdown;
    double residual_norm = 0.0;

    int order() const { return t.order(); }
};

/// Gaussian quadrature rule extracted from T: nodes are eigenvalues of T,
/// weights the squared first eigenvector components. Weights are nonnegative
/// and sum to 1 for a unit start vector. Stored with nodes ascending.
struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;

    int size() const { return static_cast<int>(nodes.size()); }
};

/// Smoothed spectral density on an evaluation grid, with the estimation
/// metadata needed to reproduce it.
struct SpectralDensityEstimate {
    std::vector<double> grid;
    std::vector<double> values;
    double sigma2 = 0.0;
    int k = 0;
    int m = 0;
    std::size_t n = 0;
    std::vector<std::uint64_t> seeds;
    std::vector<int> breakdown_steps; // -1 per probe when no breakdown
    double runtime_seconds = 0.0;
    std::string method;
};

/// Tail-bound table for the probe average: P(|phi - phi_hat| > eps(x)) <= 2 e^{-x}.
struct ConcentrationReport {
    struct Row {
        double x = 0.0;
        double epsilon = 0.0;            // norm-independent bound
        double prob_bound = 0.0;         // 2 exp(-x)
        double epsilon_norm = 0.0;       // norm-dependent bound; NaN if (a,b) not given
    };
    std::size_t n = 0;
    int k = 0;
    double sigma = 0.0;
    std::optional<std::pair<double, double>> norms; // (a, b) = (Frobenius, spectral)
    std::vector<Row> rows;
};

struct EstimateOptions {
    int k = 10;
    int m = 90;
    // sigma2 < 0 selects the auto rule (spectral range / 300)^2.
    double sigma2 = 1e-5;
    std::uint64_t seed = 0;
    // Empty grid selects the auto grid around the pooled Ritz nodes.
    std::vector<double> grid;
    int grid_points = 1000;
    // Probes are independent and may run in parallel; results are merged in
    // probe order, so the estimate is identical for any thread count.
    int threads = 1;
};

/// Gaussian kernel f(lambda; t, sigma2), peak 1/(sigma sqrt(2 pi)).
double gaussian_kernel(double lambda, double t, double sigma2);

/// m-step Lanczos with full reorthogonalization (each new vector is
/// re-orthogonalized against the whole stored basis, twice). Requires a unit
/// start vector; truncates at breakdown.
LanczosResult lanczos(const linop::SymmetricOperator& op, std::span<const double> v0, int m);

/// Quadrature nodes/weights from T (eigenvalues and squared first eigenvector
/// components).
QuadratureRule golub_welsch(const linalg::TridiagonalMatrix& t);

/// Single-probe density: sum_i w_i f(l_i; t, sigma2) over the grid.
std::vector<double> probe_density(const QuadratureRule& rule, std::span<const double> grid,
                                  double sigma2);

/// Two-stage estimator: k probes ~ N(0, I/n) normalized to unit length, one
/// Lanczos + quadrature rule each, probe densities averaged in fixed order.
SpectralDensityEstimate estimate_density(const linop::SymmetricOperator& op,
                                         const EstimateOptions& opts);

/// Exact smoothed density (1/n) sum_i f(lambda_i; t, sigma2) of a known
/// spectrum.
SpectralDensityEstimate exact_smoothed_density(std::span<const double> eigenvalues, double sigma2,
                                               std::vector<double> grid);

/// Trapezoid-rule integral of |d1 - d2| over their (identical) grid.
double l1_distance(const SpectralDensityEstimate& d1, const SpectralDensityEstimate& d2);

/// Trapezoid-rule integral of a sampled function.
double trapezoid(std::span<const double> grid, std::span<const double> values);

/// Norm-independent epsilon(x) = sqrt(2/(pi sigma^2)) (sqrt(x/nk) + x/nk).
double concentration_epsilon(std::size_t n, int k, double sigma, double x);

/// Bound table over the given x values; optionally also the norm-dependent
/// form 2a/(n sqrt(k)) sqrt(x) + 2b/(kn) x when (a, b) are supplied.
ConcentrationReport concentration_bound(std::size_t n, int k, double sigma,
                                        std::span<const double> xs,
                                        std::optional<std::pair<double, double>> norms = {});

/// Evaluation grid spanning [lo - 5 sigma - margin, hi + 5 sigma + margin]
/// with margin = 1% of the node range.
std::vector<double> auto_grid(double node_lo, double node_hi, double sigma, int points);

/// Extreme Ritz values of a short Lanczos run from a seeded probe.
std::pair<double, double> ritz_extremes(const linop::SymmetricOperator& op, int steps,
                                        std::uint64_t seed);

/// Spectral interval from the extreme Ritz values of a short Lanczos run,
/// inflated by 5% of the span on each side.
std::pair<double, double> estimate_spectral_interval(const linop::SymmetricOperator& op, int steps,
                                                     std::uint64_t seed);

} // namespace specden::slq
