#include "specden/quadsim.hpp"

#include "specden/common.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace specden::quadsim {

QuadraticProblem::QuadraticProblem(std::vector<double> lambdas_, linalg::DenseSymMatrix noise,
                                   std::vector<double> theta_star_)
    : lambdas(std::move(lambdas_)), theta_star(std::move(theta_star_)), noise_cov(std::move(noise)) {
    if (lambdas.empty()) throw InvalidInputError("QuadraticProblem: empty spectrum");
    for (std::size_t i = 0; i + 1 < lambdas.size(); ++i) {
        if (lambdas[i] < lambdas[i + 1]) {
            throw InvalidInputError("QuadraticProblem: eigenvalues must be descending");
        }
    }
    if (lambdas.back() <= 0.0) throw InvalidInputError("QuadraticProblem: eigenvalues must be > 0");
    if (noise_cov.n != dim()) throw InvalidInputError("QuadraticProblem: noise covariance size");
    if (!theta_star.empty() && theta_star.size() != lambdas.size()) {
        throw InvalidInputError("QuadraticProblem: theta* length mismatch");
    }
}

linalg::DenseSymMatrix QuadraticProblem::identity_noise(int n) {
    return linalg::DenseSymMatrix::identity(n);
}

QuadraticProblem QuadraticProblem::diagonal(std::vector<double> lambdas,
                                            std::vector<double> noise_diag) {
    auto s = linalg::DenseSymMatrix::diagonal(noise_diag);
    return QuadraticProblem(std::move(lambdas), std::move(s));
}

GdTrajectory gd_trajectory(const QuadraticProblem& p, std::span<const double> theta0, double eta,
                           int steps) {
    const int n = p.dim();
    if (theta0.size() != static_cast<std::size_t>(n)) {
        throw InvalidInputError("gd_trajectory: theta0 length mismatch");
    }
    if (steps < 0) throw InvalidInputError("gd_trajectory: steps must be >= 0");
    double lambda1 = p.lambdas.front();
    if (!(eta > 0.0) || eta > 2.0 / lambda1 * (1.0 + 1e-12)) {
        throw InvalidInputError("gd_trajectory: eta outside (0, 2/lambda_1] (divergence regime)");
    }
    std::vector<double> theta(theta0.begin(), theta0.end());
    const double* star = p.theta_star.empty() ? nullptr : p.theta_star.data();

    GdTrajectory traj;
    traj.abs_errors.reserve(steps + 1);
    auto record = [&]() {
        std::vector<double> err(n);
        for (int i = 0; i < n; ++i) err[i] = std::abs(theta[i] - (star ? star[i] : 0.0));
        traj.abs_errors.push_back(std::move(err));
    };
    record();
    for (int t = 0; t < steps; ++t) {
        for (int i = 0; i < n; ++i) {
            double e = theta[i] - (star ? star[i] : 0.0);
            theta[i] -= eta * p.lambdas[i] * e;
        }
        record();
    }
    return traj;
}

namespace {

void check_coordinate(const QuadraticProblem& p, double eta, int i) {
    if (i < 0 || i >= p.dim()) throw InvalidInputError("sgd_alignment: coordinate out of range");
    double el = eta * p.lambdas[i];
    if (!(el > 0.0) || el >= 2.0) {
        throw InvalidInputError("sgd_alignment: eta*lambda_i must lie in (0, 2)");
    }
}

} // namespace

double sgd_alignment_closed_form(const QuadraticProblem& p, double eta, long t, int i) {
    check_coordinate(p, eta, i);
    if (t < 0) throw InvalidInputError("sgd_alignment: t must be >= 0");
    double el = eta * p.lambdas[i];
    double r = (1.0 - el) * (1.0 - el);
    // sum_{j=0}^{t-1} r^j
    double geo = (r == 1.0) ? static_cast<double>(t)
                            : (1.0 - std::pow(r, static_cast<double>(t))) / (1.0 - r);
    double s_ii = p.noise_cov(i, i);
    double noiseless = el * el * std::pow(r, static_cast<double>(t));
    return noiseless + (el * el * el * el * geo + el * el) * s_ii;
}

double sgd_alignment_limit(const QuadraticProblem& p, double eta, int i) {
    check_coordinate(p, eta, i);
    double el = eta * p.lambdas[i];
    return 2.0 * el * el / (2.0 - el) * p.noise_cov(i, i);
}

AlignmentReport sgd_alignment_montecarlo(const QuadraticProblem& p, double eta, long t, int trials,
                                         std::uint64_t seed) {
    const int n = p.dim();
    if (trials < 1) throw InvalidInputError("sgd_alignment_montecarlo: trials must be >= 1");
    for (int i = 0; i < n; ++i) check_coordinate(p, eta, i);

    // PSD square root of S via its eigendecomposition; rejects indefinite S.
    bool diagonal = true;
    for (int i = 0; i < n && diagonal; ++i) {
        for (int j = 0; j < i; ++j) {
            if (p.noise_cov(i, j) != 0.0) {
                diagonal = false;
                break;
            }
        }
    }
    std::vector<double> sqrt_factor; // n x n row-major, or n diagonal entries
    if (diagonal) {
        sqrt_factor.resize(n);
        for (int i = 0; i < n; ++i) {
            double s = p.noise_cov(i, i);
            if (s < 0.0) throw InvalidInputError("sgd_alignment_montecarlo: S is not PSD");
            sqrt_factor[i] = std::sqrt(s);
        }
    } else {
        auto eig = linalg::sym_eig_dense(p.noise_cov, true);
        double top = std::max(eig.eigenvalues.front(), 0.0);
        for (double ev : eig.eigenvalues) {
            if (ev < -1e-10 * std::max(top, 1.0)) {
                throw InvalidInputError("sgd_alignment_montecarlo: S is not PSD");
            }
        }
        sqrt_factor.assign(static_cast<std::size_t>(n) * n, 0.0);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                double acc = 0.0;
                for (int k = 0; k < n; ++k) {
                    double ev = std::max(eig.eigenvalues[k], 0.0);
                    acc += eig.eigenvectors[static_cast<std::size_t>(i) * n + k] * std::sqrt(ev) *
                           eig.eigenvectors[static_cast<std::size_t>(j) * n + k];
                }
                sqrt_factor[static_cast<std::size_t>(i) * n + j] = acc;
            }
        }
    }

    std::vector<double> mean_sq(n, 0.0);
    std::vector<double> theta(n), z(n), xi(n);
    for (int trial = 0; trial < trials; ++trial) {
        Rng rng(Rng::derive(seed, static_cast<std::uint64_t>(trial)));
        for (int i = 0; i < n; ++i) theta[i] = rng.gaussian();
        auto draw_noise = [&]() {
            if (diagonal) {
                for (int i = 0; i < n; ++i) z[i] = sqrt_factor[i] * rng.gaussian();
            } else {
                for (int i = 0; i < n; ++i) xi[i] = rng.gaussian();
                for (int i = 0; i < n; ++i) {
                    double acc = 0.0;
                    const double* row = &sqrt_factor[static_cast<std::size_t>(i) * n];
                    for (int j = 0; j < n; ++j) acc += row[j] * xi[j];
                    z[i] = acc;
                }
            }
        };
        for (long s = 0; s < t; ++s) {
            draw_noise();
            for (int i = 0; i < n; ++i) theta[i] -= eta * p.lambdas[i] * (theta[i] + z[i]);
        }
        // The examined update theta_{t+1} - theta_t = -eta H (theta_t + z_t).
        draw_noise();
        for (int i = 0; i < n; ++i) {
            double upd = -eta * p.lambdas[i] * (theta[i] + z[i]);
            mean_sq[i] += upd * upd;
        }
    }
    linalg::scal(1.0 / trials, mean_sq);

    AlignmentReport rep;
    rep.eta = eta;
    rep.t = t;
    rep.trials = trials;
    for (int i = 0; i < n; ++i) {
        AlignmentReport::Row row;
        row.lambda = p.lambdas[i];
        row.mc_estimate = mean_sq[i];
        row.closed_form_finite_t = sgd_alignment_closed_form(p, eta, t, i);
        row.closed_form_limit = sgd_alignment_limit(p, eta, i);
        row.rel_error = row.closed_form_finite_t != 0.0
                            ? std::abs(row.mc_estimate - row.closed_form_finite_t) /
                                  row.closed_form_finite_t
                            : std::abs(row.mc_estimate);
        rep.rows.push_back(row);
    }
    return rep;
}

} // namespace specden::quadsim
