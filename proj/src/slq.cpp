#include "specden/slq.hpp"

#include "specden/common.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <future>
#include <limits>
#include <mutex>
#include <numeric>
#include <string>

namespace specden::slq {

namespace {
constexpr double kBreakdownRel = 1e-12;
} // namespace

double gaussian_kernel(double lambda, double t, double sigma2) {
    if (!(sigma2 > 0.0)) throw InvalidInputError("gaussian_kernel: sigma2 must be > 0");
    double diff = t - lambda;
    return std::exp(-0.5 * diff * diff / sigma2) / std::sqrt(2.0 * M_PI * sigma2);
}

LanczosResult lanczos(const linop::SymmetricOperator& op, std::span<const double> v0, int m) {
    const std::size_t n = op.dim();
    if (v0.size() != n) throw InvalidInputError("lanczos: start vector has wrong length");
    if (m < 1 || static_cast<std::size_t>(m) > n) {
        throw InvalidInputError("lanczos: degree must satisfy 1 <= m <= n");
    }
    double v0_norm = linalg::norm(v0);
    if (std::abs(v0_norm - 1.0) > 1e-12) {
        throw InvalidInputError("lanczos: start vector must have unit norm");
    }

    LanczosResult res;
    res.basis.reserve(m);
    res.basis.emplace_back(v0.begin(), v0.end());

    double scale = 0.0; // running magnitude of T entries, sets the breakdown tolerance
    std::vector<double> w;
    for (int j = 0; j < m; ++j) {
        w = op.apply(res.basis[j]);
        double alpha = linalg::dot(res.basis[j], w);
        res.t.diag.push_back(alpha);
        linalg::axpy(-alpha, res.basis[j], w);
        if (j > 0) linalg::axpy(-res.t.offdiag[j - 1], res.basis[j - 1], w);
        // Full reorthogonalization, two Gram-Schmidt passes.
        for (int pass = 0; pass < 2; ++pass) {
            for (const auto& q : res.basis) {
                double h = linalg::dot(q, w);
                linalg::axpy(-h, q, w);
            }
        }
        double beta = linalg::norm(w);
        scale = std::max({scale, std::abs(alpha), beta});
        res.residual_norm = beta;
        if (j + 1 == m) break;
        if (beta <= kBreakdownRel * scale) {
            // Invariant subspace reached; T truncates exactly at order j+1.
            res.breakdown = j + 1;
            res.residual_norm = 0.0;
            break;
        }
        res.t.offdiag.push_back(beta);
        linalg::scal(1.0 / beta, w);
        res.basis.push_back(w);
    }
    return res;
}

QuadratureRule golub_welsch(const linalg::TridiagonalMatrix& t) {
    auto eig = linalg::sym_tridiag_eig_firstrow(t);
    const int m = eig.order();
    QuadratureRule rule;
    rule.nodes.resize(m);
    rule.weights.resize(m);
    // Eigenvalues come out descending; store the rule with nodes ascending.
    for (int i = 0; i < m; ++i) {
        rule.nodes[i] = eig.eigenvalues[m - 1 - i];
        rule.weights[i] = eig.first_row_sq[m - 1 - i];
    }
    return rule;
}

std::vector<double> probe_density(const QuadratureRule& rule, std::span<const double> grid,
                                  double sigma2) {
    if (!(sigma2 > 0.0)) throw InvalidInputError("probe_density: sigma2 must be > 0");
    std::vector<double> values(grid.size(), 0.0);
    for (std::size_t g = 0; g < grid.size(); ++g) {
        double acc = 0.0;
        for (int i = 0; i < rule.size(); ++i) {
            acc += rule.weights[i] * gaussian_kernel(rule.nodes[i], grid[g], sigma2);
        }
        values[g] = acc;
    }
    return values;
}

std::vector<double> auto_grid(double node_lo, double node_hi, double sigma, int points) {
    if (points < 2) throw InvalidInputError("auto_grid: needs at least 2 points");
    double range = node_hi - node_lo;
    double margin = 0.01 * range;
    double lo = node_lo - 5.0 * sigma - margin;
    double hi = node_hi + 5.0 * sigma + margin;
    if (!(hi > lo)) { // degenerate one-point spectrum
        lo -= 1.0;
        hi += 1.0;
    }
    std::vector<double> grid(points);
    double step = (hi - lo) / (points - 1);
    for (int i = 0; i < points; ++i) grid[i] = lo + step * i;
    return grid;
}

SpectralDensityEstimate estimate_density(const linop::SymmetricOperator& op,
                                         const EstimateOptions& opts) {
    if (opts.k < 1) throw InvalidInputError("estimate_density: k must be >= 1");
    auto start = std::chrono::steady_clock::now();

    SpectralDensityEstimate est;
    est.k = opts.k;
    est.m = opts.m;
    est.n = op.dim();
    est.method = "slq";

    // Stage I: one Lanczos run and quadrature rule per probe. Probes are
    // independent; run them on up to opts.threads workers and merge by probe
    // index so the result does not depend on the thread count.
    int m_cap = static_cast<int>(std::min<std::size_t>(opts.m, op.dim()));
    auto run_probe = [&](int i) {
        std::uint64_t probe_seed = Rng::derive(opts.seed, static_cast<std::uint64_t>(i));
        auto v0 = linop::random_unit_vector(op.dim(), probe_seed);
        auto lz = lanczos(op, v0, m_cap);
        return std::make_pair(golub_welsch(lz.t), lz.breakdown.value_or(-1));
    };
    std::vector<QuadratureRule> rules(opts.k);
    est.breakdown_steps.assign(opts.k, -1);
    for (int i = 0; i < opts.k; ++i) {
        est.seeds.push_back(Rng::derive(opts.seed, static_cast<std::uint64_t>(i)));
    }
    if (opts.threads > 1 && opts.k > 1) {
        std::atomic<int> next{0};
        int workers = std::min(opts.threads, opts.k);
        std::vector<std::future<void>> pool;
        std::vector<std::pair<QuadratureRule, int>> results(opts.k);
        std::exception_ptr failure;
        std::mutex failure_mutex;
        for (int w = 0; w < workers; ++w) {
            pool.push_back(std::async(std::launch::async, [&]() {
                for (int i = next.fetch_add(1); i < opts.k; i = next.fetch_add(1)) {
                    try {
                        results[i] = run_probe(i);
                    } catch (...) {
                        std::lock_guard<std::mutex> lock(failure_mutex);
                        if (!failure) failure = std::current_exception();
                        return;
                    }
                }
            }));
        }
        for (auto& f : pool) f.get();
        if (failure) std::rethrow_exception(failure);
        for (int i = 0; i < opts.k; ++i) {
            rules[i] = std::move(results[i].first);
            est.breakdown_steps[i] = results[i].second;
        }
    } else {
        for (int i = 0; i < opts.k; ++i) {
            auto [rule, breakdown] = run_probe(i);
            rules[i] = std::move(rule);
            est.breakdown_steps[i] = breakdown;
        }
    }
    double node_lo = std::numeric_limits<double>::infinity();
    double node_hi = -std::numeric_limits<double>::infinity();
    for (const auto& rule : rules) {
        node_lo = std::min(node_lo, rule.nodes.front());
        node_hi = std::max(node_hi, rule.nodes.back());
    }

    double sigma2 = opts.sigma2;
    if (sigma2 < 0.0) {
        // Auto rule: sigma = (pooled Ritz range) / 300.
        double range = node_hi - node_lo;
        double sigma = range > 0.0 ? range / 300.0 : std::max(std::abs(node_hi), 1.0) * 1e-3;
        sigma2 = sigma * sigma;
    }
    if (!(sigma2 > 0.0)) throw InvalidInputError("estimate_density: sigma2 must be > 0");
    est.sigma2 = sigma2;

    est.grid = opts.grid.empty()
                   ? auto_grid(node_lo, node_hi, std::sqrt(sigma2), opts.grid_points)
                   : opts.grid;

    // Stage II: average the probe densities in probe order.
    est.values.assign(est.grid.size(), 0.0);
    for (const auto& rule : rules) {
        auto pd = probe_density(rule, est.grid, sigma2);
        linalg::axpy(1.0, pd, est.values);
    }
    linalg::scal(1.0 / opts.k, est.values);

    est.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return est;
}

SpectralDensityEstimate exact_smoothed_density(std::span<const double> eigenvalues, double sigma2,
                                               std::vector<double> grid) {
    if (eigenvalues.empty()) throw InvalidInputError("exact_smoothed_density: empty spectrum");
    if (!(sigma2 > 0.0)) throw InvalidInputError("exact_smoothed_density: sigma2 must be > 0");
    SpectralDensityEstimate est;
    est.sigma2 = sigma2;
    est.n = eigenvalues.size();
    est.method = "exact";
    est.grid = std::move(grid);
    est.values.assign(est.grid.size(), 0.0);
    const double inv_n = 1.0 / static_cast<double>(eigenvalues.size());
    for (std::size_t g = 0; g < est.grid.size(); ++g) {
        double acc = 0.0;
        for (double lambda : eigenvalues) acc += gaussian_kernel(lambda, est.grid[g], sigma2);
        est.values[g] = acc * inv_n;
    }
    return est;
}

double trapezoid(std::span<const double> grid, std::span<const double> values) {
    if (grid.size() != values.size()) throw InvalidInputError("trapezoid: size mismatch");
    if (grid.size() < 2) return 0.0;
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
        acc += 0.5 * (values[i] + values[i + 1]) * (grid[i + 1] - grid[i]);
    }
    return acc;
}

double l1_distance(const SpectralDensityEstimate& d1, const SpectralDensityEstimate& d2) {
    if (d1.grid.size() != d2.grid.size()) {
        throw InvalidInputError("l1_distance: grids have different sizes");
    }
    for (std::size_t i = 0; i < d1.grid.size(); ++i) {
        double scale = std::max({std::abs(d1.grid[i]), std::abs(d2.grid[i]), 1.0});
        if (std::abs(d1.grid[i] - d2.grid[i]) > 1e-12 * scale) {
            throw InvalidInputError("l1_distance: grids differ at index " + std::to_string(i));
        }
    }
    std::vector<double> absdiff(d1.values.size());
    for (std::size_t i = 0; i < absdiff.size(); ++i) {
        absdiff[i] = std::abs(d1.values[i] - d2.values[i]);
    }
    return trapezoid(d1.grid, absdiff);
}

double concentration_epsilon(std::size_t n, int k, double sigma, double x) {
    if (n < 1 || k < 1) throw InvalidInputError("concentration_epsilon: n, k must be >= 1");
    if (!(sigma > 0.0)) throw InvalidInputError("concentration_epsilon: sigma must be > 0");
    if (x < 0.0) throw InvalidInputError("concentration_epsilon: x must be >= 0");
    double nk = static_cast<double>(n) * k;
    return std::sqrt(2.0 / (M_PI * sigma * sigma)) * (std::sqrt(x / nk) + x / nk);
}

ConcentrationReport concentration_bound(std::size_t n, int k, double sigma,
                                        std::span<const double> xs,
                                        std::optional<std::pair<double, double>> norms) {
    ConcentrationReport rep;
    rep.n = n;
    rep.k = k;
    rep.sigma = sigma;
    rep.norms = norms;
    for (double x : xs) {
        ConcentrationReport::Row row;
        row.x = x;
        row.epsilon = concentration_epsilon(n, k, sigma, x);
        row.prob_bound = 2.0 * std::exp(-x);
        if (norms) {
            auto [a, b] = *norms;
            double nn = static_cast<double>(n);
            row.epsilon_norm = 2.0 * a / (nn * std::sqrt(static_cast<double>(k))) * std::sqrt(x) +
                               2.0 * b / (static_cast<double>(k) * nn) * x;
        } else {
            row.epsilon_norm = std::numeric_limits<double>::quiet_NaN();
        }
        rep.rows.push_back(row);
    }
    return rep;
}

std::pair<double, double> ritz_extremes(const linop::SymmetricOperator& op, int steps,
                                        std::uint64_t seed) {
    int m = static_cast<int>(std::min<std::size_t>(steps, op.dim()));
    auto v0 = linop::random_unit_vector(op.dim(), Rng::derive(seed, 0x1a2b3c));
    auto lz = lanczos(op, v0, m);
    auto rule = golub_welsch(lz.t);
    return {rule.nodes.front(), rule.nodes.back()};
}

std::pair<double, double> estimate_spectral_interval(const linop::SymmetricOperator& op, int steps,
                                                     std::uint64_t seed) {
    auto [lo, hi] = ritz_extremes(op, steps, seed);
    double span = hi - lo;
    if (span <= 0.0) span = std::max(1.0, std::abs(hi));
    return {lo - 0.05 * span, hi + 0.05 * span};
}

} // namespace specden::slq
