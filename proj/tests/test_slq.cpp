#include "specden/slq.hpp"

#include "specden/common.hpp"
#include "test_helpers.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>

using namespace specden;
using namespace specden::slq;

namespace {

// v^T g(H) v through the dense eigendecomposition: sum beta_i^2 g(lambda_i).
double functional_calculus(const linalg::EigenDecomposition& eig, std::span<const double> v,
                           const std::function<double(double)>& g) {
    const int n = eig.order();
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
        double beta = 0.0;
        for (int r = 0; r < n; ++r) {
            beta += v[r] * eig.eigenvectors[static_cast<std::size_t>(r) * n + i];
        }
        acc += beta * beta * g(eig.eigenvalues[i]);
    }
    return acc;
}

double horner(std::span<const double> coeffs, double x) {
    double acc = 0.0;
    for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) acc = acc * x + *it;
    return acc;
}

// Exact probe density sum beta_i^2 f(lambda_i; t, sigma2) on a grid.
std::vector<double> exact_probe_density(const linalg::EigenDecomposition& eig,
                                        std::span<const double> v, double sigma2,
                                        std::span<const double> grid) {
    const int n = eig.order();
    std::vector<double> beta_sq(n, 0.0);
    for (int i = 0; i < n; ++i) {
        double beta = 0.0;
        for (int r = 0; r < n; ++r) {
            beta += v[r] * eig.eigenvectors[static_cast<std::size_t>(r) * n + i];
        }
        beta_sq[i] = beta * beta;
    }
    std::vector<double> out(grid.size(), 0.0);
    for (std::size_t g = 0; g < grid.size(); ++g) {
        double acc = 0.0;
        for (int i = 0; i < n; ++i) acc += beta_sq[i] * gaussian_kernel(eig.eigenvalues[i], grid[g], sigma2);
        out[g] = acc;
    }
    return out;
}

} // namespace

TEST_SUITE_BEGIN("slq");

TEST_CASE("gaussian kernel values") {
    CHECK(gaussian_kernel(0.0, 0.0, 1e-5) == doctest::Approx(126.15662610100797).epsilon(1e-12));
    double sigma = 0.01;
    CHECK(gaussian_kernel(0.0, 10.0 * sigma, sigma * sigma) <=
          std::exp(-50.0) / (sigma * std::sqrt(2.0 * M_PI)) * (1.0 + 1e-12));
    CHECK(gaussian_kernel(0.3, 0.7, 1e-3) == gaussian_kernel(0.7, 0.3, 1e-3));
    CHECK_THROWS_AS(gaussian_kernel(0.0, 0.0, 0.0), InvalidInputError);
}

TEST_CASE("lanczos on the identity breaks down after one step") {
    auto op = linop::dense_operator(linalg::DenseSymMatrix::identity(10));
    auto v0 = linop::random_unit_vector(10, 4);
    auto res = lanczos(op, v0, 5);
    REQUIRE(res.breakdown.has_value());
    CHECK(*res.breakdown == 1);
    CHECK(res.order() == 1);
    CHECK(res.t.diag[0] == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("lanczos two-step recurrence on diag(1,2)") {
    auto op = linop::dense_operator(linalg::DenseSymMatrix::diagonal(std::vector<double>{1.0, 2.0}));
    double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    std::vector<double> v0{inv_sqrt2, inv_sqrt2};
    auto res = lanczos(op, v0, 2);
    REQUIRE(res.order() == 2);
    CHECK(res.t.diag[0] == doctest::Approx(1.5).epsilon(1e-14));
    CHECK(res.t.diag[1] == doctest::Approx(1.5).epsilon(1e-14));
    CHECK(res.t.offdiag[0] == doctest::Approx(0.5).epsilon(1e-14));
    auto vals = linalg::sym_tridiag_eigenvalues(res.t);
    CHECK(vals[0] == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(vals[1] == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("lanczos hygiene on a random 100x100 operator") {
    auto a = test::random_sym_matrix(100, 1234);
    auto op = linop::dense_operator(a);
    auto v0 = linop::random_unit_vector(100, 17);
    auto res = lanczos(op, v0, 30);
    REQUIRE(res.order() == 30);

    // orthonormality of the basis
    for (int i = 0; i < 30; ++i) {
        for (int j = 0; j <= i; ++j) {
            double g = linalg::dot(res.basis[i], res.basis[j]);
            CHECK(std::abs(g - (i == j ? 1.0 : 0.0)) <= 1e-10);
        }
    }
    // V^T H V == T
    for (int i = 0; i < 30; ++i) {
        auto hv = op.apply(res.basis[i]);
        for (int j = 0; j < 30; ++j) {
            double expect = 0.0;
            if (i == j) expect = res.t.diag[i];
            if (std::abs(i - j) == 1) expect = res.t.offdiag[std::min(i, j)];
            CHECK(std::abs(linalg::dot(res.basis[j], hv) - expect) <= 1e-9);
        }
    }
}

TEST_CASE("lanczos input validation") {
    auto op = linop::dense_operator(linalg::DenseSymMatrix::identity(4));
    auto v0 = linop::random_unit_vector(4, 1);
    CHECK_THROWS_AS(lanczos(op, v0, 5), InvalidInputError);
    CHECK_THROWS_AS(lanczos(op, v0, 0), InvalidInputError);
    std::vector<double> not_unit{1.0, 1.0, 0.0, 0.0};
    CHECK_THROWS_AS(lanczos(op, not_unit, 2), InvalidInputError);
}

TEST_CASE("golub_welsch closed forms") {
    linalg::TridiagonalMatrix t1;
    t1.diag = {3.7};
    auto r1 = golub_welsch(t1);
    CHECK(r1.nodes[0] == 3.7);
    CHECK(r1.weights[0] == 1.0);

    linalg::TridiagonalMatrix t2;
    t2.diag = {0.0, 0.0};
    t2.offdiag = {1.0};
    auto r2 = golub_welsch(t2);
    CHECK(r2.nodes[0] == doctest::Approx(-1.0).epsilon(1e-14));
    CHECK(r2.nodes[1] == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(r2.weights[0] == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(r2.weights[1] == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("gaussian quadrature is exact up to degree 2m-1 and fails at 2m") {
    // spectrum scaled into [-1, 1] keeps high-degree monomials conditioned
    Rng coeff_rng(2024);
    for (int rep = 0; rep < 3; ++rep) {
        auto raw = test::random_sym_matrix(60, 500 + rep);
        auto eig0 = linalg::sym_eig_dense(raw, false);
        double scale = std::max(std::abs(eig0.eigenvalues.front()), std::abs(eig0.eigenvalues.back()));
        std::vector<double> entries = raw.entries;
        for (auto& x : entries) x /= scale;
        linalg::DenseSymMatrix a(60, std::move(entries));
        auto eig = linalg::sym_eig_dense(a, true);
        auto op = linop::dense_operator(a);
        auto v0 = linop::random_unit_vector(60, 900 + rep);

        const int m = 12;
        auto rule = golub_welsch(lanczos(op, v0, m).t);
        for (int trial = 0; trial < 5; ++trial) {
            std::vector<double> coeffs(2 * m); // degree 2m-1
            for (auto& c : coeffs) c = coeff_rng.gaussian();
            auto g = [&](double x) { return horner(coeffs, x); };
            double quad = 0.0;
            for (int i = 0; i < rule.size(); ++i) quad += rule.weights[i] * g(rule.nodes[i]);
            double exact = functional_calculus(eig, v0, g);
            CHECK(std::abs(quad - exact) <= 1e-8 * (1.0 + std::abs(exact)));
        }
    }

    // m=1 counterexample at degree 2m: diag(0,1), v=(1,1)/sqrt(2), g(x)=x^2
    auto op2 = linop::dense_operator(linalg::DenseSymMatrix::diagonal(std::vector<double>{0.0, 1.0}));
    double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    std::vector<double> v{inv_sqrt2, inv_sqrt2};
    auto rule1 = golub_welsch(lanczos(op2, v, 1).t);
    double quad = rule1.weights[0] * rule1.nodes[0] * rule1.nodes[0];
    CHECK(quad == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(std::abs(quad - 0.5) > 0.2); // exact value v^T H^2 v = 0.5
}

TEST_CASE("ritz nodes stay inside the spectral range") {
    auto a = test::random_sym_matrix(80, 777);
    auto eig = linalg::sym_eig_dense(a, false);
    auto op = linop::dense_operator(a);
    for (int rep = 0; rep < 3; ++rep) {
        auto v0 = linop::random_unit_vector(80, 30 + rep);
        auto rule = golub_welsch(lanczos(op, v0, 25).t);
        CHECK(rule.nodes.front() >= eig.eigenvalues.back() - 1e-9);
        CHECK(rule.nodes.back() <= eig.eigenvalues.front() + 1e-9);
    }
}

TEST_CASE("probe_density closed forms") {
    QuadratureRule rule;
    rule.nodes = {0.0};
    rule.weights = {1.0};
    std::vector<double> grid{-0.1, 0.0, 0.2};
    auto vals = probe_density(rule, grid, 1e-3);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        CHECK(vals[i] == gaussian_kernel(0.0, grid[i], 1e-3));
    }

    QuadratureRule sym;
    sym.nodes = {-0.5, 0.5};
    sym.weights = {0.5, 0.5};
    auto at0 = probe_density(sym, std::vector<double>{0.0}, 1e-2);
    CHECK(at0[0] == doctest::Approx(gaussian_kernel(0.5, 0.0, 1e-2)).epsilon(1e-14));

    for (double v : vals) CHECK(v >= 0.0);
}

TEST_CASE("estimate_density on zero and identity operators") {
    auto zero_op = linop::SymmetricOperator(6, "zero", [](std::span<const double> v) {
        return std::vector<double>(v.size(), 0.0);
    });
    EstimateOptions opts;
    opts.k = 3;
    opts.m = 4;
    opts.sigma2 = 1e-4;
    opts.grid = {-0.05, 0.0, 0.01, 0.04};
    auto est = estimate_density(zero_op, opts);
    for (std::size_t i = 0; i < est.grid.size(); ++i) {
        CHECK(est.values[i] == doctest::Approx(gaussian_kernel(0.0, est.grid[i], 1e-4)).epsilon(1e-12));
    }
    for (int b : est.breakdown_steps) CHECK(b == 1);

    auto id_op = linop::dense_operator(linalg::DenseSymMatrix::identity(6));
    opts.grid = {0.9, 1.0, 1.1};
    auto est_id = estimate_density(id_op, opts);
    for (std::size_t i = 0; i < est_id.grid.size(); ++i) {
        CHECK(est_id.values[i] ==
              doctest::Approx(gaussian_kernel(1.0, est_id.grid[i], 1e-4)).epsilon(1e-12));
    }
}

TEST_CASE("parallel probes give bit-identical estimates") {
    auto a = test::random_sym_matrix(60, 909);
    auto op = linop::dense_operator(a);
    EstimateOptions opts;
    opts.k = 6;
    opts.m = 25;
    opts.sigma2 = 1e-2;
    opts.seed = 4;
    auto sequential = estimate_density(op, opts);
    opts.threads = 4;
    auto parallel = estimate_density(op, opts);
    CHECK(sequential.values == parallel.values);
    CHECK(sequential.grid == parallel.grid);
    CHECK(sequential.breakdown_steps == parallel.breakdown_steps);
}

TEST_CASE("estimate_density is deterministic and self-normalized") {
    auto a = test::random_sym_matrix(40, 4321);
    auto op = linop::dense_operator(a);
    EstimateOptions opts;
    opts.k = 4;
    opts.m = 20;
    opts.sigma2 = 1e-2;
    opts.seed = 9;
    auto e1 = estimate_density(op, opts);
    auto e2 = estimate_density(op, opts);
    CHECK(e1.values == e2.values);
    CHECK(e1.grid == e2.grid);
    CHECK(e1.seeds == e2.seeds);

    for (double v : e1.values) CHECK(v >= 0.0);
    double mass = trapezoid(e1.grid, e1.values);
    CHECK(mass >= 0.95);
    CHECK(mass <= 1.05);
}

TEST_CASE("exact smoothed density") {
    std::vector<double> grid{-0.01, 0.0, 0.01};
    auto d = exact_smoothed_density(std::vector<double>{0.0}, 1e-5, grid);
    CHECK(d.values[1] == doctest::Approx(126.15662610100797).epsilon(1e-12));

    auto d1 = exact_smoothed_density(std::vector<double>{0.3}, 1e-4, grid);
    auto d2 = exact_smoothed_density(std::vector<double>{0.3, 0.3}, 1e-4, grid);
    CHECK(d1.values == d2.values);

    Rng rng(6);
    std::vector<double> spectrum(50);
    for (auto& x : spectrum) x = rng.gaussian();
    double lo = *std::min_element(spectrum.begin(), spectrum.end());
    double hi = *std::max_element(spectrum.begin(), spectrum.end());
    double sigma = 0.1;
    auto grid_wide = auto_grid(lo, hi, sigma, 4000);
    auto dens = exact_smoothed_density(spectrum, sigma * sigma, grid_wide);
    double mass = trapezoid(dens.grid, dens.values);
    CHECK(mass >= 0.999);
    CHECK(mass <= 1.001);
}

TEST_CASE("l1 distance") {
    std::vector<double> grid = auto_grid(-1.0, 1.0, 0.05, 2000);
    auto a = exact_smoothed_density(std::vector<double>{0.0}, 2.5e-3, grid);
    CHECK(l1_distance(a, a) == 0.0);

    // disjoint unit-mass Gaussians are L1-distance 2 apart
    auto left = exact_smoothed_density(std::vector<double>{-0.7}, 1e-4, grid);
    auto right = exact_smoothed_density(std::vector<double>{0.7}, 1e-4, grid);
    CHECK(l1_distance(left, right) == doctest::Approx(2.0).epsilon(1e-6));

    // refined-grid oracle for a perturbed mixture
    std::vector<double> mix1{-0.4, 0.1, 0.5};
    std::vector<double> mix2{-0.38, 0.12, 0.47};
    auto c1 = exact_smoothed_density(mix1, 4e-3, grid);
    auto c2 = exact_smoothed_density(mix2, 4e-3, grid);
    double coarse = l1_distance(c1, c2);
    std::vector<double> fine_grid = auto_grid(-1.0, 1.0, 0.05, 32001);
    auto f1 = exact_smoothed_density(mix1, 4e-3, fine_grid);
    auto f2 = exact_smoothed_density(mix2, 4e-3, fine_grid);
    double fine = l1_distance(f1, f2);
    CHECK(std::abs(coarse - fine) <= 1e-4);

    auto other = exact_smoothed_density(mix1, 4e-3, auto_grid(-1.0, 1.0, 0.05, 1999));
    CHECK_THROWS_AS(l1_distance(a, other), InvalidInputError);
}

TEST_CASE("probe averaging converges toward the exact density") {
    std::vector<double> spectrum(100);
    for (int i = 0; i < 100; ++i) spectrum[i] = -1.0 + 2.0 * i / 99.0;
    auto a = test::matrix_with_spectrum(spectrum, 246);
    auto op = linop::dense_operator(a);
    double sigma2 = 2.5e-3;
    auto grid = auto_grid(-1.0, 1.0, std::sqrt(sigma2), 800);
    auto exact = exact_smoothed_density(spectrum, sigma2, grid);

    // mean L1 error over 5 repetitions at doubling probe counts
    std::vector<int> ks{25, 50, 100, 200};
    std::vector<double> mean_err(ks.size(), 0.0);
    for (int rep = 0; rep < 5; ++rep) {
        for (std::size_t ki = 0; ki < ks.size(); ++ki) {
            EstimateOptions opts;
            opts.k = ks[ki];
            opts.m = 40;
            opts.sigma2 = sigma2;
            opts.seed = 10'000 + rep;
            opts.grid = grid;
            auto est = estimate_density(op, opts);
            mean_err[ki] += l1_distance(est, exact) / 5.0;
        }
    }
    for (std::size_t ki = 0; ki + 1 < ks.size(); ++ki) CHECK(mean_err[ki + 1] < mean_err[ki]);
}

TEST_CASE("concentration bounds") {
    CHECK(concentration_epsilon(100, 5, 0.1, 0.0) == 0.0);
    // Fig-11 style parameters
    double eps3 = concentration_epsilon(500000, 20, 0.01, 3.0);
    CHECK(std::abs(eps3 - 0.0437) <= 1e-4);

    // monotone in x, decreasing in n*k
    double prev = 0.0;
    for (double x : {0.5, 1.0, 2.0, 4.0, 8.0}) {
        double e = concentration_epsilon(1000, 10, 0.05, x);
        CHECK(e > prev);
        prev = e;
    }
    CHECK(concentration_epsilon(2000, 10, 0.05, 3.0) < concentration_epsilon(1000, 10, 0.05, 3.0));

    auto rep = concentration_bound(500000, 20, 0.01, std::vector<double>{0.0, 3.0},
                                   std::make_pair(700.0, 39.9));
    CHECK(rep.rows[0].epsilon == 0.0);
    CHECK(rep.rows[1].prob_bound == doctest::Approx(2.0 * std::exp(-3.0)));
    CHECK(rep.rows[1].epsilon_norm ==
          doctest::Approx(2.0 * 700.0 / (500000.0 * std::sqrt(20.0)) * std::sqrt(3.0) +
                          2.0 * 39.9 / (20.0 * 500000.0) * 3.0));
}

TEST_SUITE_END();
