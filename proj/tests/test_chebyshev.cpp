#include "specden/chebyshev.hpp"

#include "specden/common.hpp"
#include "test_helpers.hpp"

#include <doctest.h>

#include <cmath>

using namespace specden;
using namespace specden::chebyshev;

TEST_SUITE_BEGIN("chebyshev");

TEST_CASE("cheb_fit reproduces the basis") {
    auto flat = cheb_fit([](double) { return 1.0; }, 5, -1.0, 1.0);
    CHECK(flat.coeffs[0] == doctest::Approx(1.0).epsilon(1e-14));
    for (int j = 1; j <= 5; ++j) CHECK(std::abs(flat.coeffs[j]) <= 1e-14);

    auto t2 = cheb_fit([](double x) { return 2.0 * x * x - 1.0; }, 4, -1.0, 1.0);
    CHECK(t2.coeffs[2] == doctest::Approx(1.0).epsilon(1e-13));
    for (int j : {0, 1, 3, 4}) CHECK(std::abs(t2.coeffs[j]) <= 1e-13);

    CHECK_THROWS_AS(cheb_fit([](double) { return 0.0; }, 3, 1.0, 1.0), InvalidInputError);
}

TEST_CASE("narrow kernels defeat even degree-500 expansions") {
    auto approx = cheb_coeffs(0.0, 1e-5, 500, -1.0, 1.0);
    double worst = 0.0;
    for (int i = 0; i <= 10000; ++i) {
        double x = -1.0 + 2.0 * i / 10000.0;
        worst = std::max(worst, std::abs(approx.evaluate(x) - slq::gaussian_kernel(x, 0.0, 1e-5)));
    }
    CHECK(worst > 1e-2);
}

TEST_CASE("cheb_moments closed forms") {
    auto zero_op = linop::SymmetricOperator(5, "zero", [](std::span<const double> v) {
        return std::vector<double>(v.size(), 0.0);
    });
    auto v = linop::random_unit_vector(5, 3);
    auto mu = cheb_moments(zero_op, v, 6, -1.0, 1.0);
    // T_j(0) = 1, 0, -1, 0, 1, ...
    std::vector<double> expect{1.0, 0.0, -1.0, 0.0, 1.0, 0.0, -1.0};
    for (int j = 0; j <= 6; ++j) CHECK(mu.values[j] == doctest::Approx(expect[j]).epsilon(1e-14));

    auto id_op = linop::dense_operator(linalg::DenseSymMatrix::identity(5));
    auto mu1 = cheb_moments(id_op, v, 6, -1.0, 1.0); // identity rescales to 1
    for (int j = 0; j <= 6; ++j) CHECK(mu1.values[j] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("cheb_moments matches the dense spectral oracle") {
    auto a = test::random_sym_matrix(50, 864);
    auto eig = linalg::sym_eig_dense(a, true);
    double lo = eig.eigenvalues.back() - 0.1;
    double hi = eig.eigenvalues.front() + 0.1;
    auto op = linop::dense_operator(a);
    auto v = linop::random_unit_vector(50, 19);

    auto recurrence = cheb_moments(op, v, 40, lo, hi);
    auto oracle = cheb_moments_dense(eig, v, 40, lo, hi);
    for (int j = 0; j <= 40; ++j) {
        CHECK(std::abs(recurrence.values[j] - oracle.values[j]) <= 1e-9);
        CHECK(std::abs(recurrence.values[j]) <= 1.0 + 1e-9);
    }
}

TEST_CASE("estimate_density_cheb on the zero operator") {
    auto zero_op = linop::SymmetricOperator(8, "zero", [](std::span<const double> v) {
        return std::vector<double>(v.size(), 0.0);
    });
    ChebEstimateOptions opts;
    opts.k = 2;
    opts.degree = 160;
    opts.sigma2 = 1e-2;
    opts.grid = {-0.3, 0.0, 0.25};
    auto est = estimate_density_cheb(zero_op, opts);
    CHECK(est.method == "chebyshev");
    for (std::size_t i = 0; i < est.grid.size(); ++i) {
        CHECK(std::abs(est.values[i] - slq::gaussian_kernel(0.0, est.grid[i], 1e-2)) <= 1e-6);
    }
}

TEST_CASE("wide kernels make the polynomial route accurate") {
    // same probes as SLQ, so the difference isolates the kernel approximation
    std::vector<double> spectrum(100);
    for (int i = 0; i < 100; ++i) spectrum[i] = -1.0 + 2.0 * i / 99.0;
    auto a = test::matrix_with_spectrum(spectrum, 1357);
    auto op = linop::dense_operator(a);
    double sigma2 = 1e-2;
    auto grid = slq::auto_grid(-1.0, 1.0, std::sqrt(sigma2), 1200);

    slq::EstimateOptions sopts;
    sopts.k = 10;
    sopts.m = 90;
    sopts.sigma2 = sigma2;
    sopts.seed = 5;
    sopts.grid = grid;
    auto slq_est = slq::estimate_density(op, sopts);

    ChebEstimateOptions copts;
    copts.k = 10;
    copts.degree = 90;
    copts.sigma2 = sigma2;
    copts.seed = 5;
    copts.grid = grid;
    auto cheb_est = estimate_density_cheb(op, copts);

    CHECK(slq::l1_distance(cheb_est, slq_est) <= 1e-3);
}

TEST_CASE("narrow kernels on a spiked spectrum: polynomial route fails") {
    // near-zero bulk in [-0.2, 0.4] plus separated outliers, desk-scale version
    std::vector<double> spectrum;
    for (int i = 0; i < 163; ++i) {
        double t = (i + 1.0) / 163.0;
        spectrum.push_back(-0.2 * t * t * t);
    }
    for (int i = 0; i < 327; ++i) {
        double t = (i + 1.0) / 327.0;
        spectrum.push_back(0.4 * t * t * t);
    }
    for (int i = 0; i < 10; ++i) spectrum.push_back(1.0 + 9.0 * i / 9.0);
    std::sort(spectrum.begin(), spectrum.end(), std::greater<>());
    auto a = test::matrix_with_spectrum(spectrum, 97531);
    auto op = linop::dense_operator(a);

    const double sigma2 = 1e-4;
    auto grid = slq::auto_grid(spectrum.back(), spectrum.front(), std::sqrt(sigma2), 4000);
    auto exact = slq::exact_smoothed_density(spectrum, sigma2, grid);

    slq::EstimateOptions sopts;
    sopts.k = 10;
    sopts.m = 90;
    sopts.sigma2 = sigma2;
    sopts.seed = 21;
    sopts.grid = grid;
    auto slq_est = slq::estimate_density(op, sopts);

    ChebEstimateOptions copts;
    copts.k = 10;
    copts.degree = 90;
    copts.sigma2 = sigma2;
    copts.seed = 21;
    copts.grid = grid;
    auto cheb_est = estimate_density_cheb(op, copts);

    double slq_err = slq::l1_distance(slq_est, exact);
    double cheb_err = slq::l1_distance(cheb_est, exact);
    CHECK(cheb_err >= 10.0 * slq_err);

    // and its mass drifts further from 1 than SLQ's
    double slq_mass_dev = std::abs(slq::trapezoid(slq_est.grid, slq_est.values) - 1.0);
    double cheb_mass_dev = std::abs(slq::trapezoid(cheb_est.grid, cheb_est.values) - 1.0);
    CHECK(cheb_mass_dev > slq_mass_dev);
}

TEST_SUITE_END();
