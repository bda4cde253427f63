#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "specden/chebyshev.hpp"
#include "specden/common.hpp"
#include "specden/linalg.hpp"
#include "specden/linop.hpp"
#include "specden/metrics.hpp"
#include "specden/nn.hpp"
#include "specden/quadsim.hpp"
#include "specden/slq.hpp"

#include <optional>
#include <string>
#include <vector>

namespace py = pybind11;
using namespace specden;

namespace {

using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

std::vector<double> to_vector(const DoubleArray& arr) {
    return {arr.data(), arr.data() + arr.size()};
}

py::array_t<double> to_array(const std::vector<double>& v) {
    return py::array_t<double>(static_cast<py::ssize_t>(v.size()), v.data());
}

linalg::DenseSymMatrix to_matrix(const DoubleArray& arr) {
    if (arr.ndim() != 2 || arr.shape(0) != arr.shape(1)) {
        throw InvalidInputError("expected a square 2-D array");
    }
    int n = static_cast<int>(arr.shape(0));
    return linalg::DenseSymMatrix(n, to_vector(arr));
}

linop::SymmetricOperator callable_operator(py::function apply, std::size_t n,
                                           const std::string& label) {
    return linop::SymmetricOperator(n, label, [apply](std::span<const double> v) {
        auto in = py::array_t<double>(static_cast<py::ssize_t>(v.size()), v.data());
        DoubleArray out = apply(in).cast<DoubleArray>();
        return to_vector(out);
    });
}

nn::Dataset dataset_from_arrays(const DoubleArray& xs, const py::array_t<long>& ys,
                                int batch_size) {
    if (xs.ndim() != 2) throw InvalidInputError("xs must be a 2-D array");
    if (ys.ndim() != 1 || ys.shape(0) != xs.shape(0)) {
        throw InvalidInputError("ys must be 1-D with one label per row of xs");
    }
    nn::Dataset data;
    data.input_dim = static_cast<int>(xs.shape(1));
    data.batch_size = batch_size;
    auto x = xs.unchecked<2>();
    auto y = ys.unchecked<1>();
    int max_label = 0;
    for (py::ssize_t e = 0; e < xs.shape(0); ++e) {
        std::vector<double> row(data.input_dim);
        for (py::ssize_t i = 0; i < xs.shape(1); ++i) row[i] = x(e, i);
        data.xs.push_back(std::move(row));
        data.ys.push_back(static_cast<int>(y(e)));
        max_label = std::max(max_label, data.ys.back());
    }
    data.classes = max_label + 1;
    return data;
}

py::dict estimate_to_dict(const slq::SpectralDensityEstimate& est) {
    py::dict d;
    d["grid"] = to_array(est.grid);
    d["values"] = to_array(est.values);
    d["sigma2"] = est.sigma2;
    d["k"] = est.k;
    d["m"] = est.m;
    d["n"] = est.n;
    d["seeds"] = est.seeds;
    d["breakdown_steps"] = est.breakdown_steps;
    d["runtime_seconds"] = est.runtime_seconds;
    d["method"] = est.method;
    return d;
}

double sigma2_from(const py::object& sigma2) {
    if (sigma2.is_none()) return -1.0;
    if (py::isinstance<py::str>(sigma2)) {
        if (sigma2.cast<std::string>() == "auto") return -1.0;
        throw InvalidInputError("sigma2 must be a float, None or 'auto'");
    }
    return sigma2.cast<double>();
}

slq::EstimateOptions make_options(int k, int m, const py::object& sigma2, std::uint64_t seed,
                                  const py::object& grid, int grid_points) {
    slq::EstimateOptions opts;
    opts.k = k;
    opts.m = m;
    opts.sigma2 = sigma2_from(sigma2);
    opts.seed = seed;
    if (!grid.is_none()) opts.grid = to_vector(grid.cast<DoubleArray>());
    opts.grid_points = grid_points;
    return opts;
}

nn::MlpConfig make_config(int d, int h, int classes, const std::string& activation,
                          double label_smoothing) {
    nn::MlpConfig cfg;
    cfg.input_dim = d;
    cfg.hidden = h;
    cfg.classes = classes;
    cfg.label_smoothing = label_smoothing;
    if (activation == "tanh") {
        cfg.activation = nn::Activation::Tanh;
    } else if (activation == "relu") {
        cfg.activation = nn::Activation::Relu;
    } else {
        throw InvalidInputError("activation must be 'tanh' or 'relu'");
    }
    return cfg;
}

} // namespace

PYBIND11_MODULE(_specden, mod) {
    mod.doc() = "spectral density estimation via stochastic Lanczos quadrature";

    py::register_exception<InvalidInputError>(mod, "InvalidInputError", PyExc_ValueError);
    py::register_exception<NumericFailureError>(mod, "NumericFailureError", PyExc_ArithmeticError);
    py::register_exception<ResourceLimitError>(mod, "ResourceLimitError", PyExc_RuntimeError);

    mod.def(
        "eigh",
        [](const DoubleArray& a) {
            auto eig = linalg::sym_eig_dense(to_matrix(a), true);
            int n = eig.order();
            py::array_t<double> vecs({n, n});
            auto out = vecs.mutable_unchecked<2>();
            for (int i = 0; i < n; ++i) {
                for (int j = 0; j < n; ++j) {
                    out(i, j) = eig.eigenvectors[static_cast<std::size_t>(i) * n + j];
                }
            }
            return py::make_tuple(to_array(eig.eigenvalues), vecs);
        },
        py::arg("a"), "Symmetric eigendecomposition; eigenvalues descending, columns are vectors.");

    mod.def(
        "eigvalsh",
        [](const DoubleArray& a) {
            return to_array(linalg::sym_eig_dense(to_matrix(a), false).eigenvalues);
        },
        py::arg("a"), "Eigenvalues of a symmetric matrix, descending.");

    mod.def(
        "lanczos",
        [](const DoubleArray& a, const DoubleArray& v0, int m) {
            auto op = linop::dense_operator(to_matrix(a));
            auto res = slq::lanczos(op, to_vector(v0), m);
            py::dict d;
            d["alpha"] = to_array(res.t.diag);
            d["beta"] = to_array(res.t.offdiag);
            d["breakdown"] = res.breakdown ? py::cast(*res.breakdown) : py::none();
            return d;
        },
        py::arg("a"), py::arg("v0"), py::arg("m"),
        "m-step Lanczos with full reorthogonalization on a dense symmetric matrix.");

    mod.def(
        "golub_welsch",
        [](const DoubleArray& alpha, const DoubleArray& beta) {
            linalg::TridiagonalMatrix t;
            t.diag = to_vector(alpha);
            t.offdiag = to_vector(beta);
            auto rule = slq::golub_welsch(t);
            return py::make_tuple(to_array(rule.nodes), to_array(rule.weights));
        },
        py::arg("alpha"), py::arg("beta"),
        "Gaussian quadrature nodes and weights from a Jacobi tridiagonal matrix.");

    mod.def(
        "estimate_density",
        [](const DoubleArray& a, int k, int m, const py::object& sigma2, std::uint64_t seed,
           const py::object& grid, int grid_points) {
            auto op = linop::dense_operator(to_matrix(a));
            return estimate_to_dict(
                slq::estimate_density(op, make_options(k, m, sigma2, seed, grid, grid_points)));
        },
        py::arg("a"), py::arg("k") = 10, py::arg("m") = 90, py::arg("sigma2") = 1e-5,
        py::arg("seed") = 0, py::arg("grid") = py::none(), py::arg("grid_points") = 1000,
        "Stochastic Lanczos quadrature density estimate for a dense symmetric matrix.");

    mod.def(
        "estimate_density_operator",
        [](py::function apply, std::size_t n, int k, int m, const py::object& sigma2,
           std::uint64_t seed, const py::object& grid, int grid_points) {
            auto op = callable_operator(std::move(apply), n, "python-callable");
            return estimate_to_dict(
                slq::estimate_density(op, make_options(k, m, sigma2, seed, grid, grid_points)));
        },
        py::arg("apply"), py::arg("n"), py::arg("k") = 10, py::arg("m") = 90,
        py::arg("sigma2") = 1e-5, py::arg("seed") = 0, py::arg("grid") = py::none(),
        py::arg("grid_points") = 1000,
        "Matrix-free density estimate; `apply(v)` must return A @ v.");

    mod.def(
        "chebyshev_density",
        [](const DoubleArray& a, int k, int degree, double sigma2, std::uint64_t seed,
           const py::object& grid, int grid_points) {
            auto op = linop::dense_operator(to_matrix(a));
            chebyshev::ChebEstimateOptions opts;
            opts.k = k;
            opts.degree = degree;
            opts.sigma2 = sigma2;
            opts.seed = seed;
            if (!grid.is_none()) opts.grid = to_vector(grid.cast<DoubleArray>());
            opts.grid_points = grid_points;
            return estimate_to_dict(chebyshev::estimate_density_cheb(op, opts));
        },
        py::arg("a"), py::arg("k") = 10, py::arg("degree") = 90, py::arg("sigma2") = 1e-5,
        py::arg("seed") = 0, py::arg("grid") = py::none(), py::arg("grid_points") = 1000,
        "Chebyshev-moment baseline estimate (known to fail for narrow kernels).");

    mod.def(
        "exact_smoothed_density",
        [](const DoubleArray& eigenvalues, double sigma2, const DoubleArray& grid) {
            auto est = slq::exact_smoothed_density(to_vector(eigenvalues), sigma2, to_vector(grid));
            return to_array(est.values);
        },
        py::arg("eigenvalues"), py::arg("sigma2"), py::arg("grid"),
        "Gaussian-smoothed empirical spectral density of a known spectrum.");

    mod.def(
        "l1_distance",
        [](const DoubleArray& grid, const DoubleArray& v1, const DoubleArray& v2) {
            slq::SpectralDensityEstimate a, b;
            a.grid = to_vector(grid);
            b.grid = a.grid;
            a.values = to_vector(v1);
            b.values = to_vector(v2);
            return slq::l1_distance(a, b);
        },
        py::arg("grid"), py::arg("values1"), py::arg("values2"),
        "Trapezoid-rule L1 distance between densities sampled on one grid.");

    mod.def("concentration_epsilon", &slq::concentration_epsilon, py::arg("n"), py::arg("k"),
            py::arg("sigma"), py::arg("x"),
            "Norm-independent tail bound epsilon(x) with P(dev > eps) <= 2 exp(-x).");

    // --- toy model -------------------------------------------------------

    mod.def(
        "mlp_param_count",
        [](int d, int h, int classes) {
            return nn::param_count(make_config(d, h, classes, "tanh", 0.0));
        },
        py::arg("d"), py::arg("h"), py::arg("classes"));

    mod.def(
        "synth_dataset",
        [](std::uint64_t seed, int d, int classes, int per_class, double spread, int batch_size) {
            auto data = nn::synth_dataset(seed, d, classes, per_class, spread, batch_size);
            py::array_t<double> xs({data.size(), data.input_dim});
            auto out = xs.mutable_unchecked<2>();
            for (int e = 0; e < data.size(); ++e) {
                for (int i = 0; i < data.input_dim; ++i) out(e, i) = data.xs[e][i];
            }
            py::array_t<long> ys(data.size());
            for (int e = 0; e < data.size(); ++e) ys.mutable_at(e) = data.ys[e];
            return py::make_tuple(xs, ys);
        },
        py::arg("seed"), py::arg("d"), py::arg("classes"), py::arg("per_class"),
        py::arg("spread") = 1.0, py::arg("batch_size") = 100,
        "Gaussian-cluster dataset; returns (xs, ys).");

    mod.def(
        "train_mlp",
        [](const DoubleArray& xs, const py::array_t<long>& ys, int h, int steps, double lr,
           double momentum, std::uint64_t seed, int batch_size, int checkpoint_every,
           const std::string& activation, double label_smoothing) {
            auto data = dataset_from_arrays(xs, ys, batch_size);
            auto cfg =
                make_config(data.input_dim, h, data.classes, activation, label_smoothing);
            nn::TrainOptions opts;
            opts.optimizer = momentum > 0.0 ? nn::TrainOptions::Optimizer::Momentum
                                            : nn::TrainOptions::Optimizer::Sgd;
            opts.lr.base = lr;
            opts.momentum = momentum;
            opts.steps = steps;
            opts.seed = seed;
            opts.checkpoint_every = checkpoint_every;
            auto ckpts = nn::train(cfg, data, opts);
            py::list out;
            for (const auto& c : ckpts) {
                py::dict d;
                d["step"] = c.step;
                d["train_loss"] = c.train_loss;
                d["params"] = to_array(c.params);
                out.append(d);
            }
            return out;
        },
        py::arg("xs"), py::arg("ys"), py::arg("h") = 16, py::arg("steps") = 3000,
        py::arg("lr") = 0.05, py::arg("momentum") = 0.9, py::arg("seed") = 0,
        py::arg("batch_size") = 100, py::arg("checkpoint_every") = 500,
        py::arg("activation") = "tanh", py::arg("label_smoothing") = 0.1,
        "Train the two-layer classifier; returns checkpoint dicts.");

    mod.def(
        "mlp_hvp",
        [](const DoubleArray& params, const DoubleArray& xs, const py::array_t<long>& ys, int h,
           const DoubleArray& v, const std::string& activation, double label_smoothing) {
            auto data = dataset_from_arrays(xs, ys, 0);
            auto cfg = make_config(data.input_dim, h, data.classes, activation, label_smoothing);
            return to_array(nn::full_hvp(to_vector(params), cfg, data, to_vector(v)));
        },
        py::arg("params"), py::arg("xs"), py::arg("ys"), py::arg("h"), py::arg("v"),
        py::arg("activation") = "tanh", py::arg("label_smoothing") = 0.1,
        "Full-data Hessian-vector product of the toy classifier loss.");

    mod.def(
        "mlp_exact_hessian",
        [](const DoubleArray& params, const DoubleArray& xs, const py::array_t<long>& ys, int h,
           const std::string& activation, double label_smoothing, int cap) {
            auto data = dataset_from_arrays(xs, ys, 0);
            auto cfg = make_config(data.input_dim, h, data.classes, activation, label_smoothing);
            auto hess = nn::exact_hessian(to_vector(params), cfg, data, cap);
            py::array_t<double> out({hess.n, hess.n});
            auto w = out.mutable_unchecked<2>();
            for (int i = 0; i < hess.n; ++i) {
                for (int j = 0; j < hess.n; ++j) w(i, j) = hess(i, j);
            }
            return out;
        },
        py::arg("params"), py::arg("xs"), py::arg("ys"), py::arg("h"),
        py::arg("activation") = "tanh", py::arg("label_smoothing") = 0.1, py::arg("cap") = 4000,
        "Dense Hessian via one HVP per column (guarded by `cap`).");

    // --- metrics ----------------------------------------------------------

    mod.def(
        "zeta",
        [](const DoubleArray& eigenvalues, int k_index) {
            metrics::SpectrumSummary s(to_vector(eigenvalues), k_index);
            return metrics::zeta(s, k_index);
        },
        py::arg("eigenvalues"), py::arg("k_index"), "Outlier ratio lambda_1 / lambda_K.");

    mod.def(
        "signed_energy",
        [](const DoubleArray& eigenvalues, int p, const std::string& sign) {
            auto cls = sign == "neg" ? metrics::SignClass::Negative : metrics::SignClass::Positive;
            if (sign != "neg" && sign != "pos") {
                throw InvalidInputError("sign must be 'neg' or 'pos'");
            }
            return metrics::signed_energy(to_vector(eigenvalues), p, cls);
        },
        py::arg("eigenvalues"), py::arg("p"), py::arg("sign"),
        "(1/n) sum over the sign class of |lambda|^p.");

    mod.def(
        "projection_ratio",
        [](const DoubleArray& g, const DoubleArray& basis) {
            if (basis.ndim() != 2) throw InvalidInputError("basis must be 2-D (rows = vectors)");
            std::vector<std::vector<double>> rows;
            auto b = basis.unchecked<2>();
            for (py::ssize_t i = 0; i < basis.shape(0); ++i) {
                rows.emplace_back(basis.shape(1));
                for (py::ssize_t j = 0; j < basis.shape(1); ++j) rows.back()[j] = b(i, j);
            }
            return metrics::projection_ratio(to_vector(g),
                                             metrics::SubspaceBasis(std::move(rows)));
        },
        py::arg("g"), py::arg("basis"), "||P g||^2 / ||g||^2 onto an orthonormal row basis.");

    mod.def(
        "path_alignment",
        [](const DoubleArray& grad, const DoubleArray& disp) {
            return metrics::path_alignment(to_vector(grad), to_vector(disp));
        },
        py::arg("grad"), py::arg("displacement"), "Cosine between gradient and displacement.");

    // --- quadratic model ---------------------------------------------------

    mod.def(
        "sgd_alignment_closed_form",
        [](const DoubleArray& lambdas, const DoubleArray& noise_diag, double eta, long t, int i) {
            auto p = quadsim::QuadraticProblem::diagonal(to_vector(lambdas), to_vector(noise_diag));
            return quadsim::sgd_alignment_closed_form(p, eta, t, i);
        },
        py::arg("lambdas"), py::arg("noise_diag"), py::arg("eta"), py::arg("t"), py::arg("i"));

    mod.def(
        "sgd_alignment_limit",
        [](const DoubleArray& lambdas, const DoubleArray& noise_diag, double eta, int i) {
            auto p = quadsim::QuadraticProblem::diagonal(to_vector(lambdas), to_vector(noise_diag));
            return quadsim::sgd_alignment_limit(p, eta, i);
        },
        py::arg("lambdas"), py::arg("noise_diag"), py::arg("eta"), py::arg("i"));

    mod.def(
        "sgd_alignment_montecarlo",
        [](const DoubleArray& lambdas, const DoubleArray& noise_diag, double eta, long t,
           int trials, std::uint64_t seed) {
            auto p = quadsim::QuadraticProblem::diagonal(to_vector(lambdas), to_vector(noise_diag));
            auto rep = quadsim::sgd_alignment_montecarlo(p, eta, t, trials, seed);
            py::dict d;
            std::vector<double> mc, cf, lim, rel;
            for (const auto& row : rep.rows) {
                mc.push_back(row.mc_estimate);
                cf.push_back(row.closed_form_finite_t);
                lim.push_back(row.closed_form_limit);
                rel.push_back(row.rel_error);
            }
            d["mc_estimate"] = to_array(mc);
            d["closed_form_finite_t"] = to_array(cf);
            d["closed_form_limit"] = to_array(lim);
            d["rel_error"] = to_array(rel);
            return d;
        },
        py::arg("lambdas"), py::arg("noise_diag"), py::arg("eta"), py::arg("t"),
        py::arg("trials"), py::arg("seed") = 0);

    mod.def(
        "gd_trajectory",
        [](const DoubleArray& lambdas, const DoubleArray& theta0, double eta, int steps) {
            auto lam = to_vector(lambdas);
            auto p = quadsim::QuadraticProblem::diagonal(lam, std::vector<double>(lam.size(), 1.0));
            auto traj = quadsim::gd_trajectory(p, to_vector(theta0), eta, steps);
            py::array_t<double> out({static_cast<py::ssize_t>(traj.abs_errors.size()),
                                     static_cast<py::ssize_t>(lam.size())});
            auto w = out.mutable_unchecked<2>();
            for (std::size_t t = 0; t < traj.abs_errors.size(); ++t) {
                for (std::size_t i = 0; i < lam.size(); ++i) w(t, i) = traj.abs_errors[t][i];
            }
            return out;
        },
        py::arg("lambdas"), py::arg("theta0"), py::arg("eta"), py::arg("steps"),
        "Per-coordinate |theta_t - theta*| for exact GD on the diagonal quadratic.");
}
