// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Heavier fixtures (the trained toy model) are shared across
// criteria.

#include "specden/chebyshev.hpp"
#include "specden/common.hpp"
#include "specden/linalg.hpp"
#include "specden/linop.hpp"
#include "specden/metrics.hpp"
#include "specden/nn.hpp"
#include "specden/quadsim.hpp"
#include "specden/slq.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <memory>
#include <string>
#include <vector>

using namespace specden;

namespace {

int g_failures = 0;

void report(int index, bool pass, const std::string& name, const std::string& detail) {
    std::printf("[%s] criterion %d: %s (%s)\n", pass ? "PASS" : "FAIL", index, name.c_str(),
                detail.c_str());
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

std::string fmt(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.3g", x);
    return buf;
}

linalg::DenseSymMatrix matrix_with_spectrum(const std::vector<double>& spectrum,
                                            std::uint64_t seed) {
    int n = static_cast<int>(spectrum.size());
    Rng rng(seed);
    std::vector<std::vector<double>> cols(n, std::vector<double>(n));
    for (auto& c : cols) {
        for (auto& x : c) x = rng.gaussian();
    }
    for (int i = 0; i < n; ++i) {
        for (int pass = 0; pass < 2; ++pass) {
            for (int j = 0; j < i; ++j) {
                double h = linalg::dot(cols[i], cols[j]);
                linalg::axpy(-h, cols[j], cols[i]);
            }
        }
        linalg::scal(1.0 / linalg::norm(cols[i]), cols[i]);
    }
    std::vector<double> e(static_cast<std::size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j <= i; ++j) {
            double acc = 0.0;
            for (int k = 0; k < n; ++k) acc += cols[k][i] * spectrum[k] * cols[k][j];
            e[static_cast<std::size_t>(i) * n + j] = acc;
            e[static_cast<std::size_t>(j) * n + i] = acc;
        }
    }
    return linalg::DenseSymMatrix(n, std::move(e));
}

// Exact probe density sum beta_i^2 f(lambda_i; t, sigma2) from a dense
// eigendecomposition.
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
        for (int i = 0; i < n; ++i) {
            acc += beta_sq[i] * slq::gaussian_kernel(eig.eigenvalues[i], grid[g], sigma2);
        }
        out[g] = acc;
    }
    return out;
}

double l1_on_grid(std::span<const double> grid, std::span<const double> a,
                  std::span<const double> b) {
    std::vector<double> diff(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) diff[i] = std::abs(a[i] - b[i]);
    return slq::trapezoid(grid, diff);
}

// Shared toy-model fixture for the validation-protocol criteria.
struct TrainedModel {
    nn::MlpConfig cfg;
    nn::Dataset data;
    std::vector<double> params;
    double train_loss = 0.0;
};

const TrainedModel& trained_model() {
    static TrainedModel model = [] {
        TrainedModel m;
        m.cfg.input_dim = 100;
        m.cfg.hidden = 16;
        m.cfg.classes = 5;
        m.cfg.activation = nn::Activation::Tanh;
        m.cfg.label_smoothing = 0.1;
        m.data = nn::synth_dataset(1, 100, 5, 200, 1.0, 100);
        nn::TrainOptions opts;
        opts.optimizer = nn::TrainOptions::Optimizer::Momentum;
        opts.lr.base = 0.05;
        opts.momentum = 0.9;
        opts.steps = 3000;
        opts.seed = 0;
        opts.checkpoint_every = 3000;
        auto ckpts = nn::train(m.cfg, m.data, opts);
        m.params = ckpts.back().params;
        m.train_loss = ckpts.back().train_loss;
        return m;
    }();
    return model;
}

// ---------------------------------------------------------------------------

void criterion_1_quadrature_exactness() {
    const int n = 200, m = 30, matrices = 20, polys = 20;
    double worst = 0.0;
    Rng coeff_rng(90210);
    for (int rep = 0; rep < matrices; ++rep) {
        std::vector<double> spectrum(n);
        Rng spec_rng(700 + rep);
        for (auto& s : spectrum) s = 2.0 * spec_rng.uniform() - 1.0;
        std::sort(spectrum.begin(), spectrum.end(), std::greater<>());
        auto a = matrix_with_spectrum(spectrum, 4000 + rep);
        auto eig = linalg::sym_eig_dense(a, true);
        auto op = linop::dense_operator(a);
        auto v = linop::random_unit_vector(n, 6000 + rep);
        auto rule = slq::golub_welsch(slq::lanczos(op, v, m).t);

        std::vector<double> beta_sq(n, 0.0);
        for (int i = 0; i < n; ++i) {
            double beta = 0.0;
            for (int r = 0; r < n; ++r) {
                beta += v[r] * eig.eigenvectors[static_cast<std::size_t>(r) * n + i];
            }
            beta_sq[i] = beta * beta;
        }
        for (int p = 0; p < polys; ++p) {
            std::vector<double> coeffs(2 * m); // degree 2m-1 = 59
            for (auto& c : coeffs) c = coeff_rng.gaussian();
            auto horner = [&](double x) {
                double acc = 0.0;
                for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) acc = acc * x + *it;
                return acc;
            };
            double quad = 0.0;
            for (int i = 0; i < rule.size(); ++i) quad += rule.weights[i] * horner(rule.nodes[i]);
            double exact = 0.0;
            for (int i = 0; i < n; ++i) exact += beta_sq[i] * horner(eig.eigenvalues[i]);
            worst = std::max(worst, std::abs(quad - exact) / (1.0 + std::abs(exact)));
        }
    }
    report(1, worst <= 1e-8, "Gaussian quadrature exact through degree 2m-1",
           "worst relative error " + fmt(worst) + " over " + std::to_string(matrices) +
               " matrices x " + std::to_string(polys) + " degree-59 polynomials, tol 1e-8");
}

void criterion_2_validation_protocol() {
    const auto& model = trained_model();
    auto op = nn::hessian_operator(model.params, model.cfg, model.data);

    slq::EstimateOptions opts;
    opts.k = 10;
    opts.m = 90;
    opts.sigma2 = -1.0; // (spectral range / 300)^2
    opts.seed = 42;
    auto est = slq::estimate_density(op, opts);

    auto hess = nn::exact_hessian(model.params, model.cfg, model.data);
    auto eig = linalg::sym_eig_dense(hess, false);
    auto exact = slq::exact_smoothed_density(eig.eigenvalues, est.sigma2, est.grid);

    double l1 = slq::l1_distance(est, exact);
    // golden training threshold recorded from the first run of this config
    bool trained_ok = model.train_loss <= 0.45;
    report(2, l1 <= 0.01 && trained_ok, "SLQ matches the exact smoothed density on the toy MLP",
           "n=1701, k=10, m=90, sigma2=" + fmt(est.sigma2) + ", L1=" + fmt(l1) +
               " (tol 0.01), train loss " + fmt(model.train_loss) + " (golden <= 0.45)");
}

void criterion_3_exponential_decay() {
    // spectrum in [-1, 1], concentrated near zero like a trained-net Hessian
    const int n = 150;
    std::vector<double> spectrum(n);
    for (int i = 0; i < n; ++i) {
        double t = -1.0 + 2.0 * i / (n - 1.0);
        spectrum[i] = t * t * t;
    }
    std::sort(spectrum.begin(), spectrum.end(), std::greater<>());
    auto a = matrix_with_spectrum(spectrum, 95);
    auto eig = linalg::sym_eig_dense(a, true);
    auto op = linop::dense_operator(a);
    auto v = linop::random_unit_vector(n, 7);

    const double sigma2 = 1e-3;
    auto grid = slq::auto_grid(-1.0, 1.0, std::sqrt(sigma2), 2000);
    auto exact = exact_probe_density(eig, v, sigma2, grid);

    auto probe_err = [&](int m) {
        auto rule = slq::golub_welsch(slq::lanczos(op, v, m).t);
        auto vals = slq::probe_density(rule, grid, sigma2);
        return l1_on_grid(grid, vals, exact);
    };
    double err20 = probe_err(20);
    double err80 = probe_err(80);
    bool pass = err80 <= 1e-8 && err80 <= 1e-4 * err20;
    report(3, pass, "probe-density error decays exponentially in m",
           "L1 error m=20: " + fmt(err20) + ", m=80: " + fmt(err80) +
               " (need <= 1e-8 and <= 1e-4 x m=20)");
}

void criterion_4_chebyshev_failure() {
    // spiked spectrum: 980 bulk eigenvalues in [-0.2, 0.4] concentrated near
    // zero, 20 outliers in (0.4, 10]
    std::vector<double> spectrum;
    for (int i = 0; i < 326; ++i) {
        double t = (i + 1.0) / 326.0;
        spectrum.push_back(-0.2 * t * t * t);
    }
    for (int i = 0; i < 654; ++i) {
        double t = (i + 1.0) / 654.0;
        spectrum.push_back(0.4 * t * t * t);
    }
    for (int i = 0; i < 20; ++i) spectrum.push_back(1.0 + 9.0 * i / 19.0);
    std::sort(spectrum.begin(), spectrum.end(), std::greater<>());
    auto a = matrix_with_spectrum(spectrum, 112233);
    auto op = linop::dense_operator(a);

    const double sigma2 = 1e-4; // matched between the two estimators
    auto grid = slq::auto_grid(spectrum.back(), spectrum.front(), std::sqrt(sigma2), 4000);
    auto exact = slq::exact_smoothed_density(spectrum, sigma2, grid);

    slq::EstimateOptions sopts;
    sopts.k = 10;
    sopts.m = 90;
    sopts.sigma2 = sigma2;
    sopts.seed = 5;
    sopts.grid = grid;
    auto slq_est = slq::estimate_density(op, sopts);

    chebyshev::ChebEstimateOptions copts;
    copts.k = 10;
    copts.degree = 90;
    copts.sigma2 = sigma2;
    copts.seed = 5;
    copts.grid = grid;
    auto cheb_est = chebyshev::estimate_density_cheb(op, copts);

    double slq_err = slq::l1_distance(slq_est, exact);
    double cheb_err = slq::l1_distance(cheb_est, exact);
    report(4, cheb_err >= 10.0 * slq_err,
           "Chebyshev baseline fails where SLQ succeeds on the spiked spectrum",
           "matched budget k=10, degree/m=90, sigma2=" + fmt(sigma2) + ": SLQ L1 " + fmt(slq_err) +
               " vs Chebyshev L1 " + fmt(cheb_err) + " (need >= 10x)");
}

void criterion_5_concentration() {
    double eps3 = slq::concentration_epsilon(500000, 20, 0.01, 3.0);
    bool formula_ok = std::abs(eps3 - 0.0437) <= 1e-4;

    // empirical check: n=1000 operator with a known uniform spectrum
    const int n = 1000;
    std::vector<double> spectrum(n);
    for (int i = 0; i < n; ++i) spectrum[i] = -1.0 + 2.0 * i / (n - 1.0);
    auto diag = std::make_shared<std::vector<double>>(spectrum);
    linop::SymmetricOperator op(n, "diag(1000)", [diag](std::span<const double> v) {
        std::vector<double> out(v.size());
        for (std::size_t i = 0; i < v.size(); ++i) out[i] = (*diag)[i] * v[i];
        return out;
    });

    const double sigma = 0.05, sigma2 = sigma * sigma;
    auto grid = slq::auto_grid(-1.0, 1.0, sigma, 1000);
    std::vector<double> sorted(spectrum.rbegin(), spectrum.rend());
    auto exact = slq::exact_smoothed_density(sorted, sigma2, grid);

    double max_dev = 0.0;
    for (int rep = 0; rep < 50; ++rep) {
        slq::EstimateOptions opts;
        opts.k = 10;
        opts.m = 90;
        opts.sigma2 = sigma2;
        opts.seed = 1 + rep;
        opts.grid = grid;
        auto est = slq::estimate_density(op, opts);
        for (std::size_t i = 0; i < grid.size(); ++i) {
            max_dev = std::max(max_dev, std::abs(est.values[i] - exact.values[i]));
        }
    }
    double bound = slq::concentration_epsilon(n, 10, sigma, std::log(100.0));
    report(5, formula_ok && max_dev < bound, "concentration bound",
           "eps(3)=" + fmt(eps3) + " (0.0437 +- 1e-4); max pointwise deviation over 50 estimates " +
               fmt(max_dev) + " < eps(ln 100)=" + fmt(bound));
}

void criterion_6_hvp_correctness() {
    nn::MlpConfig cfg;
    cfg.input_dim = 3;
    cfg.hidden = 2;
    cfg.classes = 2;
    cfg.label_smoothing = 0.1;
    nn::Dataset data;
    data.input_dim = 3;
    data.classes = 2;
    Rng data_rng(64);
    for (int e = 0; e < 6; ++e) {
        std::vector<double> x(3);
        for (auto& xi : x) xi = data_rng.gaussian();
        data.xs.push_back(std::move(x));
        data.ys.push_back(static_cast<int>(data_rng.next_u64() % 2));
    }
    const int n = cfg.param_count();

    double worst_hvp = 0.0, worst_grad = 0.0;
    for (int probe = 0; probe < 50; ++probe) {
        Rng rng(1000 + probe);
        std::vector<double> params(n);
        for (auto& p : params) p = 0.6 * rng.gaussian();
        auto v = linop::random_unit_vector(n, 2000 + probe);

        auto hv = nn::hvp(params, cfg, data, 0, data.size(), v);
        double eps = 1e-4 * linalg::norm(params) / linalg::norm(v);
        std::vector<double> plus(params), minus(params);
        linalg::axpy(eps, v, plus);
        linalg::axpy(-eps, v, minus);
        auto gp = nn::gradient(plus, cfg, data, 0, data.size());
        auto gm = nn::gradient(minus, cfg, data, 0, data.size());
        double scale = 0.0;
        for (double h : hv) scale = std::max(scale, std::abs(h));
        for (int i = 0; i < n; ++i) {
            double fd = (gp[i] - gm[i]) / (2.0 * eps);
            worst_hvp = std::max(worst_hvp, std::abs(fd - hv[i]) / std::max(scale, 1.0));
        }

        auto g = nn::gradient(params, cfg, data, 0, data.size());
        const double step = 1e-5;
        for (int i = 0; i < n; ++i) {
            auto lp = params, lm = params;
            lp[i] += step;
            lm[i] -= step;
            double fd = (nn::forward_loss(lp, cfg, data, 0, data.size()) -
                         nn::forward_loss(lm, cfg, data, 0, data.size())) /
                        (2.0 * step);
            worst_grad = std::max(worst_grad, std::abs(fd - g[i]) / (1.0 + std::abs(g[i])));
        }
    }
    report(6, worst_hvp <= 1e-5 && worst_grad <= 1e-6, "analytic HVP and gradient oracles",
           "50 probes: HVP vs grad differences rel " + fmt(worst_hvp) +
               " (tol 1e-5); grad vs loss differences rel " + fmt(worst_grad) + " (tol 1e-6)");
}

void criterion_7_sgd_alignment() {
    const int n = 20;
    std::vector<double> lambdas(n);
    double lo = 0.2, hi = 2.0;
    for (int i = 0; i < n; ++i) {
        lambdas[i] = std::exp(std::log(hi) - (std::log(hi) - std::log(lo)) * i / (n - 1.0));
    }
    double eta = 0.5 / lambdas.front();

    std::vector<double> s_id(n, 1.0), s_h(lambdas), s_hinv(n);
    for (int i = 0; i < n; ++i) s_hinv[i] = 1.0 / lambdas[i];

    double worst_rel = 0.0;
    std::vector<double> shares;
    for (const auto& noise : {s_id, s_h, s_hinv}) {
        auto p = quadsim::QuadraticProblem::diagonal(lambdas, noise);
        auto rep = quadsim::sgd_alignment_montecarlo(p, eta, 200, 10000, 777);
        double total = 0.0;
        for (const auto& row : rep.rows) {
            worst_rel = std::max(worst_rel, row.rel_error);
            total += row.mc_estimate;
        }
        shares.push_back(rep.rows.front().mc_estimate / total);
    }
    // closed-form noise-shaping ordering
    auto share_cf = [&](const std::vector<double>& noise) {
        auto p = quadsim::QuadraticProblem::diagonal(lambdas, noise);
        double total = 0.0, top = 0.0;
        for (int i = 0; i < n; ++i) {
            double v = quadsim::sgd_alignment_limit(p, eta, i);
            total += v;
            if (i == 0) top = v;
        }
        return top / total;
    };
    bool ordering_cf = share_cf(s_h) > share_cf(s_id) && share_cf(s_hinv) < share_cf(s_id);
    bool ordering_mc = shares[1] > shares[0] && shares[2] < shares[0];
    report(7, worst_rel <= 0.05 && ordering_cf && ordering_mc,
           "SGD update alignment matches the finite-t closed form",
           "worst per-coordinate rel error " + fmt(worst_rel) +
               " (tol 5%) over S in {I, H, H^-1}; top-share ordering holds");
}

void criterion_8_gd_contraction() {
    std::vector<double> lambdas{2.0, 1.7, 1.3, 1.0, 0.8, 0.5, 0.35, 0.2, 0.1, 0.05};
    auto p = quadsim::QuadraticProblem::diagonal(lambdas, std::vector<double>(lambdas.size(), 1.0));
    Rng rng(9);
    std::vector<double> theta0(lambdas.size());
    for (auto& x : theta0) x = 1.0 + rng.uniform();
    double eta = 2.0 / lambdas.front();
    auto traj = quadsim::gd_trajectory(p, theta0, eta, 100);

    double worst = 0.0;
    for (std::size_t i = 0; i < lambdas.size(); ++i) {
        double factor = std::abs(1.0 - 2.0 * lambdas[i] / lambdas.front());
        for (int t = 0; t < 100; ++t) {
            double prev = traj.abs_errors[t][i];
            if (prev == 0.0) {
                worst = std::max(worst, traj.abs_errors[t + 1][i]);
                continue;
            }
            worst = std::max(worst, std::abs(traj.abs_errors[t + 1][i] / prev - factor));
        }
    }
    report(8, worst <= 1e-12, "GD per-coordinate contraction at eta = 2/lambda_1",
           "max ratio deviation " + fmt(worst) + " over 100 steps (tol 1e-12)");
}

void criterion_9_lanczos_hygiene() {
    const auto& model = trained_model();
    auto op = nn::hessian_operator(model.params, model.cfg, model.data);
    auto v0 = linop::random_unit_vector(op.dim(), 31415);
    auto lz = slq::lanczos(op, v0, 90);

    double orth_dev = 0.0;
    const int m = lz.order();
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j <= i; ++j) {
            double g = linalg::dot(lz.basis[i], lz.basis[j]);
            orth_dev = std::max(orth_dev, std::abs(g - (i == j ? 1.0 : 0.0)));
        }
    }
    double t_max = 0.0;
    for (double x : lz.t.diag) t_max = std::max(t_max, std::abs(x));
    for (double x : lz.t.offdiag) t_max = std::max(t_max, std::abs(x));
    double proj_dev = 0.0;
    for (int i = 0; i < m; ++i) {
        auto hv = op.apply(lz.basis[i]);
        for (int j = 0; j < m; ++j) {
            double expect = 0.0;
            if (i == j) expect = lz.t.diag[i];
            if (std::abs(i - j) == 1) expect = lz.t.offdiag[std::min(i, j)];
            proj_dev = std::max(proj_dev, std::abs(linalg::dot(lz.basis[j], hv) - expect));
        }
    }
    bool pass = orth_dev <= 1e-10 && proj_dev <= 1e-8 * t_max;
    report(9, pass, "full reorthogonalization keeps the Lanczos basis clean",
           "m=" + std::to_string(m) + ": ||V^T V - I||_max " + fmt(orth_dev) +
               " (tol 1e-10), ||V^T H V - T||_max " + fmt(proj_dev) + " (tol 1e-8 x " +
               fmt(t_max) + ")");
}

void criterion_10_instruments_only() {
    // ImageNet/CIFAR-scale findings (full-size spectra, batch-norm ablations,
    // gradient-energy concentration) are intentionally out of scope; the
    // instruments that would measure them are exercised on the toy model.
    const auto& model = trained_model();
    bool ok = true;
    try {
        auto hess = nn::exact_hessian(model.params, model.cfg, model.data);
        auto eig = linalg::sym_eig_dense(hess, true);
        metrics::SpectrumSummary spectrum(eig.eigenvalues, model.cfg.classes);
        double z = metrics::zeta(spectrum, model.cfg.classes);
        double l2_neg = metrics::signed_energy(eig.eigenvalues, 2, metrics::SignClass::Negative);
        double l2_pos = metrics::signed_energy(eig.eigenvalues, 2, metrics::SignClass::Positive);

        const int n = model.cfg.param_count();
        std::vector<std::vector<double>> cols(10, std::vector<double>(n));
        for (int j = 0; j < 10; ++j) {
            for (int i = 0; i < n; ++i) {
                cols[j][i] = eig.eigenvectors[static_cast<std::size_t>(i) * n + j];
            }
        }
        metrics::SubspaceBasis top10(std::move(cols));
        auto grad = nn::full_gradient(model.params, model.cfg, model.data);
        double proj = metrics::projection_ratio(grad, top10);
        auto grads = nn::per_batch_gradients(model.params, model.cfg, model.data);
        auto cov_basis = metrics::covariance_top_eigenvectors(grads, 4);
        double overlap = metrics::subspace_overlap(top10, cov_basis);
        ok = std::isfinite(z) && proj >= 0.0 && proj <= 1.0 && overlap >= 0.0 && overlap <= 1.0 &&
             l2_neg >= 0.0 && l2_pos >= 0.0 && l2_neg < l2_pos; // converged tanh model
        report(10, ok, "large-scale findings out of scope; instruments validated at toy scale",
               "zeta=" + fmt(z) + ", L2 energies neg/pos " + fmt(l2_neg) + "/" + fmt(l2_pos) +
                   ", projection ratio " + fmt(proj) + ", H/Sigma overlap " + fmt(overlap));
    } catch (const std::exception& e) {
        report(10, false, "instrument validation", e.what());
    }
}

} // namespace

int main() {
    criterion_1_quadrature_exactness();
    criterion_2_validation_protocol();
    criterion_3_exponential_decay();
    criterion_4_chebyshev_failure();
    criterion_5_concentration();
    criterion_6_hvp_correctness();
    criterion_7_sgd_alignment();
    criterion_8_gd_contraction();
    criterion_9_lanczos_hygiene();
    criterion_10_instruments_only();
    std::printf("%d/10 criteria passed\n", 10 - g_failures);
    return g_failures == 0 ? 0 : 1;
}
