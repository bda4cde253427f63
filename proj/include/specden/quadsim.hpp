#pragma once

#include "specden/linalg.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace specden::quadsim {

/// Diagonal quadratic model in the Hessian eigenbasis: eigenvalues descending
/// and positive, optimum theta*, and the SGD noise covariance S (PSD, given
/// in the same basis).
struct QuadraticProblem {
    std::vector<double> lambdas;    // descending, all > 0
    std::vector<double> theta_star; // empty means the origin
    linalg::DenseSymMatrix noise_cov;

    QuadraticProblem(std::vector<double> lambdas, linalg::DenseSymMatrix noise_cov,
                     std::vector<double> theta_star = {});
    int dim() const { return static_cast<int>(lambdas.size()); }

    static linalg::DenseSymMatrix identity_noise(int n);
    static QuadraticProblem diagonal(std::vector<double> lambdas, std::vector<double> noise_diag);
};

/// Per-coordinate |theta_t - theta*| for t = 0..steps of exact gradient
/// descent. Requires 0 < eta <= 2/lambda_1 (the marginal step size included).
struct GdTrajectory {
    std::vector<std::vector<double>> abs_errors; // [step][coordinate]
};
GdTrajectory gd_trajectory(const QuadraticProblem& p, std::span<const double> theta0, double eta,
                           int steps);

/// E[<q_i, theta_{t+1} - theta_t>^2] for SGD on the quadratic with noise S:
/// eta^2 l^2 (1-eta l)^{2t} + (eta^4 l^4 sum_{j<t} (1-eta l)^{2j} + eta^2 l^2) S_ii.
double sgd_alignment_closed_form(const QuadraticProblem& p, double eta, long t, int i);

/// The t -> infinity limit 2 eta^2 l^2 / (2 - eta l) * S_ii.
double sgd_alignment_limit(const QuadraticProblem& p, double eta, int i);

struct AlignmentReport {
    struct Row {
        double lambda = 0.0;
        double mc_estimate = 0.0;
        double closed_form_finite_t = 0.0;
        double closed_form_limit = 0.0;
        double rel_error = 0.0; // |mc - closed_form_finite_t| / closed_form_finite_t
    };
    double eta = 0.0;
    long t = 0;
    int trials = 0;
    std::vector<Row> rows;
};

/// Monte Carlo estimate of the per-coordinate update alignment after t SGD
/// steps from theta_0 ~ N(0, I), z ~ N(0, S) redrawn each step. Trials use
/// per-trial seeds derived from `seed` and a fixed-order reduction.
AlignmentReport sgd_alignment_montecarlo(const QuadraticProblem& p, double eta, long t, int trials,
                                         std::uint64_t seed);

} // namespace specden::quadsim
