#include "specden/chebyshev.hpp"

#include "specden/common.hpp"

#include <chrono>
#include <cmath>
#include <limits>

namespace specden::chebyshev {

namespace {

double rescale(double lambda, double lo, double hi) {
    return (2.0 * lambda - (hi + lo)) / (hi - lo);
}

// T_0..T_degree at x by the scalar recurrence.
void cheb_values(double x, std::span<double> out) {
    if (out.empty()) return;
    out[0] = 1.0;
    if (out.size() > 1) out[1] = x;
    for (std::size_t j = 2; j < out.size(); ++j) out[j] = 2.0 * x * out[j - 1] - out[j - 2];
}

} // namespace

double ChebyshevApprox::evaluate(double lambda) const {
    double x = rescale(lambda, lo, hi);
    // Clenshaw recurrence.
    double b1 = 0.0, b2 = 0.0;
    for (int j = degree; j >= 1; --j) {
        double b0 = 2.0 * x * b1 - b2 + coeffs[j];
        b2 = b1;
        b1 = b0;
    }
    return x * b1 - b2 + coeffs[0];
}

ChebyshevApprox cheb_fit(const std::function<double(double)>& target, int degree, double lo,
                         double hi) {
    if (degree < 0) throw InvalidInputError("cheb_fit: degree must be >= 0");
    if (!(hi > lo)) throw InvalidInputError("cheb_fit: degenerate interval");

    const int npts = degree + 1;
    ChebyshevApprox approx;
    approx.degree = degree;
    approx.lo = lo;
    approx.hi = hi;
    approx.coeffs.assign(npts, 0.0);

    // Collocation at Chebyshev points x_j = cos(pi (j+1/2)/N) mapped into [lo, hi].
    std::vector<double> fvals(npts);
    for (int j = 0; j < npts; ++j) {
        double theta = M_PI * (j + 0.5) / npts;
        double lambda = 0.5 * (hi + lo) + 0.5 * (hi - lo) * std::cos(theta);
        fvals[j] = target(lambda);
    }
    for (int c = 0; c < npts; ++c) {
        double acc = 0.0;
        for (int j = 0; j < npts; ++j) acc += fvals[j] * std::cos(c * M_PI * (j + 0.5) / npts);
        approx.coeffs[c] = (c == 0 ? 1.0 : 2.0) * acc / npts;
    }
    return approx;
}

ChebyshevApprox cheb_coeffs(double t, double sigma2, int degree, double lo, double hi) {
    if (!(sigma2 > 0.0)) throw InvalidInputError("cheb_coeffs: sigma2 must be > 0");
    return cheb_fit([&](double lambda) { return slq::gaussian_kernel(lambda, t, sigma2); }, degree,
                    lo, hi);
}

MomentVector cheb_moments(const linop::SymmetricOperator& op, std::span<const double> v, int degree,
                          double lo, double hi) {
    if (degree < 0) throw InvalidInputError("cheb_moments: degree must be >= 0");
    if (!(hi > lo)) throw InvalidInputError("cheb_moments: degenerate interval");
    const double center = 0.5 * (hi + lo);
    const double half_span = 0.5 * (hi - lo);

    auto apply_rescaled = [&](const std::vector<double>& x) {
        auto y = op.apply(x);
        for (std::size_t i = 0; i < y.size(); ++i) y[i] = (y[i] - center * x[i]) / half_span;
        return y;
    };

    MomentVector mom;
    mom.values.assign(degree + 1, 0.0);
    std::vector<double> w_prev(v.begin(), v.end());
    mom.values[0] = linalg::dot(v, w_prev);
    if (degree == 0) return mom;
    std::vector<double> w_cur = apply_rescaled(w_prev);
    mom.values[1] = linalg::dot(v, w_cur);
    for (int j = 2; j <= degree; ++j) {
        auto w_next = apply_rescaled(w_cur);
        linalg::scal(2.0, w_next);
        linalg::axpy(-1.0, w_prev, w_next);
        mom.values[j] = linalg::dot(v, w_next);
        w_prev = std::move(w_cur);
        w_cur = std::move(w_next);
    }
    return mom;
}

MomentVector cheb_moments_dense(const linalg::EigenDecomposition& eig, std::span<const double> v,
                                int degree, double lo, double hi) {
    if (!eig.has_vectors()) throw InvalidInputError("cheb_moments_dense: needs eigenvectors");
    if (!(hi > lo)) throw InvalidInputError("cheb_moments_dense: degenerate interval");
    const int n = eig.order();
    if (v.size() != static_cast<std::size_t>(n)) {
        throw InvalidInputError("cheb_moments_dense: probe length mismatch");
    }
    // beta_i = v . q_i
    std::vector<double> beta_sq(n, 0.0);
    for (int i = 0; i < n; ++i) {
        double acc = 0.0;
        for (int r = 0; r < n; ++r) acc += v[r] * eig.eigenvectors[static_cast<std::size_t>(r) * n + i];
        beta_sq[i] = acc * acc;
    }
    MomentVector mom;
    mom.values.assign(degree + 1, 0.0);
    std::vector<double> tvals(degree + 1);
    for (int i = 0; i < n; ++i) {
        cheb_values(rescale(eig.eigenvalues[i], lo, hi), tvals);
        for (int j = 0; j <= degree; ++j) mom.values[j] += beta_sq[i] * tvals[j];
    }
    return mom;
}

SpectralDensityEstimate estimate_density_cheb(const linop::SymmetricOperator& op,
                                              const ChebEstimateOptions& opts) {
    if (opts.k < 1) throw InvalidInputError("estimate_density_cheb: k must be >= 1");
    if (!(opts.sigma2 > 0.0)) throw InvalidInputError("estimate_density_cheb: sigma2 must be > 0");
    auto start = std::chrono::steady_clock::now();

    auto [lo, hi] = slq::estimate_spectral_interval(op, opts.interval_steps, opts.seed);

    SpectralDensityEstimate est;
    est.k = opts.k;
    est.m = opts.degree;
    est.n = op.dim();
    est.sigma2 = opts.sigma2;
    est.method = "chebyshev";
    est.grid = opts.grid.empty()
                   ? slq::auto_grid(lo, hi, std::sqrt(opts.sigma2), opts.grid_points)
                   : opts.grid;

    // Per-probe moments; probes drawn exactly as in the SLQ estimator.
    std::vector<double> mean_moments(opts.degree + 1, 0.0);
    for (int i = 0; i < opts.k; ++i) {
        std::uint64_t probe_seed = Rng::derive(opts.seed, static_cast<std::uint64_t>(i));
        est.seeds.push_back(probe_seed);
        est.breakdown_steps.push_back(-1);
        auto v = linop::random_unit_vector(op.dim(), probe_seed);
        auto mom = cheb_moments(op, v, opts.degree, lo, hi);
        linalg::axpy(1.0, mom.values, mean_moments);
    }
    linalg::scal(1.0 / opts.k, mean_moments);

    // phi_hat(t) = sum_c c_c(t) mu_c with c_c(t) computed by collocation.
    // Swapping the sums turns this into fixed node weights
    //   w_j = (1/N) (mu_0 + 2 sum_{c>=1} cos(c theta_j) mu_c)
    // against kernel evaluations at the collocation nodes, so each grid point
    // costs O(degree) instead of a fresh O(degree^2) coefficient solve.
    const int npts = opts.degree + 1;
    std::vector<double> node_lambda(npts), node_weight(npts);
    for (int j = 0; j < npts; ++j) {
        double theta = M_PI * (j + 0.5) / npts;
        node_lambda[j] = 0.5 * (hi + lo) + 0.5 * (hi - lo) * std::cos(theta);
        double acc = mean_moments[0];
        for (int c = 1; c < npts; ++c) acc += 2.0 * std::cos(c * theta) * mean_moments[c];
        node_weight[j] = acc / npts;
    }
    est.values.assign(est.grid.size(), 0.0);
    for (std::size_t g = 0; g < est.grid.size(); ++g) {
        double acc = 0.0;
        for (int j = 0; j < npts; ++j) {
            acc += node_weight[j] * slq::gaussian_kernel(node_lambda[j], est.grid[g], opts.sigma2);
        }
        est.values[g] = acc;
    }

    est.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return est;
}

} // namespace specden::chebyshev
