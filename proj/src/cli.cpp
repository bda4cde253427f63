#include "specden/cli.hpp"

#include "specden/chebyshev.hpp"
#include "specden/common.hpp"
#include "specden/io.hpp"
#include "specden/metrics.hpp"
#include "specden/nn.hpp"
#include "specden/quadsim.hpp"
#include "specden/slq.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>

namespace specden::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitInvalidInput = 2;
constexpr int kExitNumericFailure = 3;
constexpr int kExitResourceLimit = 4;

std::vector<double> parse_grid(const std::string& spec) {
    if (spec == "auto") return {};
    auto c1 = spec.find(':');
    auto c2 = spec.find(':', c1 == std::string::npos ? c1 : c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos) {
        throw InvalidInputError("bad --grid spec '" + spec + "', expected lo:hi:points or auto");
    }
    double lo, hi;
    int points;
    try {
        lo = std::stod(spec.substr(0, c1));
        hi = std::stod(spec.substr(c1 + 1, c2 - c1 - 1));
        points = std::stoi(spec.substr(c2 + 1));
    } catch (const std::exception&) {
        throw InvalidInputError("bad --grid spec '" + spec + "'");
    }
    if (!(hi > lo) || points < 2) throw InvalidInputError("bad --grid spec: need hi > lo, points >= 2");
    std::vector<double> grid(points);
    double step = (hi - lo) / (points - 1);
    for (int i = 0; i < points; ++i) grid[i] = lo + step * i;
    return grid;
}

// Returns sigma2 or a negative sentinel for "auto".
double parse_sigma2(const std::string& spec) {
    if (spec == "auto") return -1.0;
    double v;
    try {
        v = std::stod(spec);
    } catch (const std::exception&) {
        throw InvalidInputError("bad --sigma2 '" + spec + "', expected a float or auto");
    }
    if (!(v > 0.0)) throw InvalidInputError("--sigma2 must be > 0");
    return v;
}

struct SourceOpts {
    std::string matrix;
    std::string checkpoint;
    std::string data;
    std::string grads;

    void add_flags(CLI::App* cmd, bool with_grads) {
        cmd->add_option("--matrix", matrix, "dense symmetric matrix file");
        cmd->add_option("--checkpoint", checkpoint, "model checkpoint JSON")->needs(
            cmd->add_option("--data", data, "dataset file (used with --checkpoint)"));
        if (with_grads) cmd->add_option("--grads", grads, "gradient set file");
    }

    int source_count() const {
        return (matrix.empty() ? 0 : 1) + (checkpoint.empty() ? 0 : 1) + (grads.empty() ? 0 : 1);
    }
};

linop::SymmetricOperator load_operator(const SourceOpts& src) {
    if (src.source_count() != 1) {
        throw InvalidInputError("exactly one operator source required: --matrix, "
                                "--checkpoint/--data, or --grads");
    }
    if (!src.matrix.empty()) return linop::dense_operator(io::read_dense_matrix(src.matrix));
    if (!src.grads.empty()) return linop::covariance_operator(io::read_gradient_set(src.grads));
    if (src.data.empty()) throw InvalidInputError("--checkpoint requires --data");
    auto [ckpt, cfg] = io::read_checkpoint(src.checkpoint);
    auto data = io::read_dataset(src.data);
    return nn::hessian_operator(std::move(ckpt.params), cfg, std::move(data));
}

std::string meta_path_for(const std::string& out) { return out + ".meta.json"; }

void write_json(const std::string& path, const json& j) {
    std::ofstream f(path);
    if (!f) throw InvalidInputError("cannot write file: " + path);
    f << j.dump(2) << "\n";
}

// ---------------------------------------------------------------------------
// density
// ---------------------------------------------------------------------------

struct DensityArgs {
    SourceOpts src;
    int k = 10, m = 90, grid_points = 1000, threads = 1;
    std::string sigma2 = "1e-5";
    std::uint64_t seed = 0;
    std::string grid = "auto";
    std::string method = "slq";
    std::string out;
    std::string meta;
};

int cmd_density(const DensityArgs& a, std::ostream& out) {
    auto op = load_operator(a.src);
    double sigma2 = parse_sigma2(a.sigma2);
    auto grid = parse_grid(a.grid);

    slq::SpectralDensityEstimate est;
    if (a.method == "slq") {
        slq::EstimateOptions opts;
        opts.k = a.k;
        opts.m = a.m;
        opts.sigma2 = sigma2;
        opts.seed = a.seed;
        opts.grid = grid;
        opts.grid_points = a.grid_points;
        opts.threads = a.threads;
        est = slq::estimate_density(op, opts);
    } else if (a.method == "chebyshev") {
        chebyshev::ChebEstimateOptions opts;
        opts.k = a.k;
        opts.degree = a.m;
        if (sigma2 < 0.0) {
            auto [lo, hi] = slq::ritz_extremes(op, 30, a.seed);
            double span = hi - lo;
            double sigma = span > 0.0 ? span / 300.0 : std::max(std::abs(hi), 1.0) * 1e-3;
            sigma2 = sigma * sigma;
        }
        opts.sigma2 = sigma2;
        opts.seed = a.seed;
        opts.grid = grid;
        opts.grid_points = a.grid_points;
        est = chebyshev::estimate_density_cheb(op, opts);
    } else {
        throw InvalidInputError("unknown --method '" + a.method + "', expected slq or chebyshev");
    }

    io::write_density_csv(a.out, est);
    std::string meta = a.meta.empty() ? meta_path_for(a.out) : a.meta;
    io::write_density_metadata(meta, est);
    out << "density: method=" << est.method << " n=" << est.n << " k=" << est.k << " m=" << est.m
        << " sigma2=" << format_double(est.sigma2) << " -> " << a.out << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------
// exact
// ---------------------------------------------------------------------------

struct ExactArgs {
    SourceOpts src;
    std::string sigma2 = "1e-5";
    std::string grid = "auto";
    int grid_points = 1000;
    int cap = 4000;
    std::string out;
    std::string eigs;
    std::string meta;
};

int cmd_exact(const ExactArgs& a, std::ostream& out) {
    std::vector<double> eigenvalues;
    if (!a.src.matrix.empty()) {
        auto mat = io::read_dense_matrix(a.src.matrix);
        if (mat.n > a.cap) {
            throw ResourceLimitError("exact: matrix dimension " + std::to_string(mat.n) +
                                     " exceeds the dense cap of " + std::to_string(a.cap));
        }
        eigenvalues = linalg::sym_eig_dense(mat, false).eigenvalues;
    } else if (!a.src.checkpoint.empty()) {
        if (a.src.data.empty()) throw InvalidInputError("--checkpoint requires --data");
        auto [ckpt, cfg] = io::read_checkpoint(a.src.checkpoint);
        auto data = io::read_dataset(a.src.data);
        auto hess = nn::exact_hessian(ckpt.params, cfg, data, a.cap);
        eigenvalues = linalg::sym_eig_dense(hess, false).eigenvalues;
    } else {
        throw InvalidInputError("exact: needs --matrix or --checkpoint/--data");
    }

    double sigma2 = parse_sigma2(a.sigma2);
    if (sigma2 < 0.0) {
        double range = eigenvalues.front() - eigenvalues.back();
        double sigma = range > 0.0 ? range / 300.0 : std::max(std::abs(eigenvalues.front()), 1.0) * 1e-3;
        sigma2 = sigma * sigma;
    }
    auto grid = parse_grid(a.grid);
    if (grid.empty()) {
        grid = slq::auto_grid(eigenvalues.back(), eigenvalues.front(), std::sqrt(sigma2),
                              a.grid_points);
    }
    auto est = slq::exact_smoothed_density(eigenvalues, sigma2, std::move(grid));

    io::write_density_csv(a.out, est);
    io::write_eigenvalues(a.eigs.empty() ? a.out + ".eigs" : a.eigs, eigenvalues);
    io::write_density_metadata(a.meta.empty() ? meta_path_for(a.out) : a.meta, est);
    out << "exact: n=" << eigenvalues.size() << " lambda_max=" << format_double(eigenvalues.front())
        << " lambda_min=" << format_double(eigenvalues.back())
        << " sigma2=" << format_double(sigma2) << " -> " << a.out << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------
// compare
// ---------------------------------------------------------------------------

struct CompareArgs {
    std::string d1, d2, out;
};

int cmd_compare(const CompareArgs& a, std::ostream& out) {
    auto e1 = io::read_density_csv(a.d1);
    auto e2 = io::read_density_csv(a.d2);
    double l1 = slq::l1_distance(e1, e2);
    out << "l1_distance " << format_double(l1) << "\n";
    if (!a.out.empty()) {
        write_json(a.out, json{{"d1", a.d1}, {"d2", a.d2}, {"l1_distance", l1}});
    }
    return kExitOk;
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

struct TrainArgs {
    int d = 100, h = 16, classes = 5, per_class = 200, batch_size = 100;
    double spread = 1.0, lr = 0.05, momentum = 0.9, label_smoothing = 0.1;
    std::string activation = "tanh";
    std::string optimizer = "momentum";
    long steps = 3000, checkpoint_every = 500;
    std::uint64_t seed = 0, data_seed = 1;
    std::string data;
    std::vector<std::string> lr_drops;
    std::string out_dir;
};

int cmd_train(const TrainArgs& a, std::ostream& out) {
    nn::MlpConfig cfg;
    cfg.input_dim = a.d;
    cfg.hidden = a.h;
    cfg.classes = a.classes;
    cfg.label_smoothing = a.label_smoothing;
    if (a.activation == "tanh") {
        cfg.activation = nn::Activation::Tanh;
    } else if (a.activation == "relu") {
        cfg.activation = nn::Activation::Relu;
    } else {
        throw InvalidInputError("unknown --activation '" + a.activation + "'");
    }

    nn::Dataset data;
    if (!a.data.empty()) {
        data = io::read_dataset(a.data);
        cfg.input_dim = data.input_dim;
        cfg.classes = std::max(cfg.classes, data.classes);
    } else {
        data = nn::synth_dataset(a.data_seed, a.d, a.classes, a.per_class, a.spread, a.batch_size);
    }

    nn::TrainOptions opts;
    opts.optimizer = a.optimizer == "sgd" ? nn::TrainOptions::Optimizer::Sgd
                                          : nn::TrainOptions::Optimizer::Momentum;
    if (a.optimizer != "sgd" && a.optimizer != "momentum") {
        throw InvalidInputError("unknown --optimizer '" + a.optimizer + "'");
    }
    opts.lr.base = a.lr;
    for (const auto& drop : a.lr_drops) {
        auto colon = drop.find(':');
        if (colon == std::string::npos) {
            throw InvalidInputError("bad --lr-drop '" + drop + "', expected step:factor");
        }
        try {
            opts.lr.drops.emplace_back(std::stol(drop.substr(0, colon)),
                                       std::stod(drop.substr(colon + 1)));
        } catch (const std::exception&) {
            throw InvalidInputError("bad --lr-drop '" + drop + "'");
        }
    }
    opts.momentum = a.momentum;
    opts.steps = a.steps;
    opts.seed = a.seed;
    opts.checkpoint_every = a.checkpoint_every;

    auto checkpoints = nn::train(cfg, data, opts);

    fs::create_directories(a.out_dir);
    io::write_dataset((fs::path(a.out_dir) / "dataset.txt").string(), data);
    std::ofstream losses(fs::path(a.out_dir) / "loss.csv");
    losses << "step,train_loss\n";
    for (const auto& ckpt : checkpoints) {
        char name[64];
        std::snprintf(name, sizeof(name), "checkpoint_%06ld.json", ckpt.step);
        io::write_checkpoint((fs::path(a.out_dir) / name).string(), ckpt, cfg);
        losses << ckpt.step << "," << format_double(ckpt.train_loss) << "\n";
    }
    out << "train: n=" << cfg.param_count() << " steps=" << a.steps
        << " final_loss=" << format_double(checkpoints.back().train_loss) << " -> " << a.out_dir
        << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------
// metrics
// ---------------------------------------------------------------------------

struct MetricsArgs {
    std::string checkpoint;
    std::string run_dir;
    std::string data;
    std::string final_checkpoint;
    int top_r = 10;
    int k_index = 0; // 0 -> model class count
    int cap = 4000;
    int lanczos_m = 0; // 0 -> max(6r, 90)
    std::uint64_t seed = 0;
    std::string out;
};

json metrics_record(const nn::Checkpoint& ckpt, const nn::MlpConfig& cfg, const nn::Dataset& data,
                    const MetricsArgs& a, const std::vector<double>* theta_star) {
    const int n = cfg.param_count();
    const int r = std::min(a.top_r, n);
    const int k_index = a.k_index > 0 ? a.k_index : cfg.classes;

    std::vector<double> eigenvalues;
    metrics::SubspaceBasis hess_basis;
    if (n <= a.cap) {
        auto hess = nn::exact_hessian(ckpt.params, cfg, data, a.cap);
        auto eig = linalg::sym_eig_dense(hess, true);
        eigenvalues = eig.eigenvalues;
        std::vector<std::vector<double>> vecs(r, std::vector<double>(n));
        for (int j = 0; j < r; ++j) {
            for (int i = 0; i < n; ++i) {
                vecs[j][i] = eig.eigenvectors[static_cast<std::size_t>(i) * n + j];
            }
        }
        hess_basis = metrics::SubspaceBasis(std::move(vecs));
    } else {
        // Matrix-free fallback: Ritz values/vectors for the top of the
        // spectrum, SLQ density for the energy integrals.
        auto op = nn::hessian_operator(ckpt.params, cfg, data);
        int m = a.lanczos_m > 0 ? a.lanczos_m : std::max(6 * r, 90);
        auto v0 = linop::random_unit_vector(op.dim(), Rng::derive(a.seed, 0x4d));
        auto lz = slq::lanczos(op, v0, static_cast<int>(std::min<std::size_t>(m, op.dim())));
        eigenvalues = linalg::sym_tridiag_eigenvalues(lz.t);
        hess_basis = metrics::top_eigenvectors(op, r, m, a.seed);
    }

    metrics::SpectrumSummary spectrum(eigenvalues, cfg.classes);
    json energies;
    if (n <= a.cap) {
        energies = json{{"l1_neg", metrics::signed_energy(eigenvalues, 1, metrics::SignClass::Negative)},
                        {"l1_pos", metrics::signed_energy(eigenvalues, 1, metrics::SignClass::Positive)},
                        {"l2_neg", metrics::signed_energy(eigenvalues, 2, metrics::SignClass::Negative)},
                        {"l2_pos", metrics::signed_energy(eigenvalues, 2, metrics::SignClass::Positive)}};
    } else {
        auto op = nn::hessian_operator(ckpt.params, cfg, data);
        slq::EstimateOptions dopts;
        dopts.seed = a.seed;
        dopts.sigma2 = -1.0;
        auto density = slq::estimate_density(op, dopts);
        energies = json{{"l1_neg", metrics::signed_energy_density(density, 1, metrics::SignClass::Negative)},
                        {"l1_pos", metrics::signed_energy_density(density, 1, metrics::SignClass::Positive)},
                        {"l2_neg", metrics::signed_energy_density(density, 2, metrics::SignClass::Negative)},
                        {"l2_pos", metrics::signed_energy_density(density, 2, metrics::SignClass::Positive)}};
    }

    auto grad = nn::full_gradient(ckpt.params, cfg, data);
    auto grads = nn::per_batch_gradients(ckpt.params, cfg, data);
    auto cov_eigs = metrics::covariance_eigenvalues(grads);
    int cov_rank = 0;
    for (double ev : cov_eigs) {
        if (ev > 1e-12 * std::max(cov_eigs.front(), 0.0)) ++cov_rank;
    }
    int r_cov = std::min(r, cov_rank);

    json rec{{"step", ckpt.step},
             {"train_loss", ckpt.train_loss},
             {"zeta", metrics::zeta(spectrum, k_index)},
             {"lambda_k_negative", metrics::lambda_k_negative(spectrum, k_index)},
             {"K", k_index},
             {"top_r", r},
             {"energies", energies},
             {"projection_ratio", metrics::projection_ratio(grad, hess_basis)}};
    if (r_cov >= 1) {
        auto cov_basis = metrics::covariance_top_eigenvectors(grads, r_cov);
        rec["subspace_overlap"] = metrics::subspace_overlap(hess_basis, cov_basis);
    } else {
        rec["subspace_overlap"] = nullptr;
    }
    if (theta_star != nullptr) {
        std::vector<double> disp(ckpt.params.size());
        for (std::size_t i = 0; i < disp.size(); ++i) disp[i] = ckpt.params[i] - (*theta_star)[i];
        double nd = linalg::norm(disp);
        rec["path_alignment"] =
            nd == 0.0 ? json(nullptr) : json(metrics::path_alignment(grad, disp));
    } else {
        rec["path_alignment"] = nullptr;
    }
    return rec;
}

int cmd_metrics(const MetricsArgs& a, std::ostream& out) {
    if (a.data.empty()) throw InvalidInputError("metrics: --data is required");
    auto data = io::read_dataset(a.data);

    std::vector<std::pair<nn::Checkpoint, nn::MlpConfig>> checkpoints;
    if (!a.run_dir.empty()) {
        std::vector<fs::path> files;
        if (!fs::is_directory(a.run_dir)) {
            throw InvalidInputError("metrics: --run-dir is not a directory: " + a.run_dir);
        }
        for (const auto& entry : fs::directory_iterator(a.run_dir)) {
            auto name = entry.path().filename().string();
            if (name.rfind("checkpoint_", 0) == 0 && entry.path().extension() == ".json") {
                files.push_back(entry.path());
            }
        }
        std::sort(files.begin(), files.end());
        for (const auto& f : files) checkpoints.push_back(io::read_checkpoint(f.string()));
        if (checkpoints.empty()) {
            throw InvalidInputError("metrics: no checkpoint_*.json files in " + a.run_dir);
        }
        std::sort(checkpoints.begin(), checkpoints.end(),
                  [](const auto& x, const auto& y) { return x.first.step < y.first.step; });
    } else if (!a.checkpoint.empty()) {
        checkpoints.push_back(io::read_checkpoint(a.checkpoint));
    } else {
        throw InvalidInputError("metrics: needs --checkpoint or --run-dir");
    }

    std::optional<std::vector<double>> theta_star;
    if (!a.final_checkpoint.empty()) {
        theta_star = io::read_checkpoint(a.final_checkpoint).first.params;
    } else if (checkpoints.size() > 1) {
        theta_star = checkpoints.back().first.params; // end of training as theta* surrogate
    }

    json records = json::array();
    for (const auto& [ckpt, cfg] : checkpoints) {
        records.push_back(
            metrics_record(ckpt, cfg, data, a, theta_star ? &*theta_star : nullptr));
        out << "metrics: step=" << ckpt.step << " zeta=" << format_double(records.back()["zeta"].get<double>())
            << " projection_ratio="
            << format_double(records.back()["projection_ratio"].get<double>()) << "\n";
    }
    if (!a.out.empty()) write_json(a.out, records);
    return kExitOk;
}

// ---------------------------------------------------------------------------
// quadsim
// ---------------------------------------------------------------------------

struct QuadsimArgs {
    int n = 20;
    double lambda_min = 0.2, lambda_max = 2.0;
    double eta_c = 0.5;
    long t = 200;
    int trials = 10000;
    std::string noise = "identity";
    bool gd_mode = false;
    std::uint64_t seed = 0;
    std::string out;
};

std::vector<double> log_spaced_descending(int n, double lo, double hi) {
    if (n < 1 || !(lo > 0.0) || !(hi >= lo)) {
        throw InvalidInputError("quadsim: need n >= 1 and 0 < lambda-min <= lambda-max");
    }
    std::vector<double> v(n);
    if (n == 1) {
        v[0] = hi;
        return v;
    }
    double step = (std::log(hi) - std::log(lo)) / (n - 1);
    for (int i = 0; i < n; ++i) v[i] = std::exp(std::log(hi) - step * i);
    return v;
}

int cmd_quadsim(const QuadsimArgs& a, std::ostream& out) {
    auto lambdas = log_spaced_descending(a.n, a.lambda_min, a.lambda_max);
    std::vector<double> noise_diag(a.n);
    for (int i = 0; i < a.n; ++i) {
        if (a.noise == "identity") {
            noise_diag[i] = 1.0;
        } else if (a.noise == "hessian") {
            noise_diag[i] = lambdas[i];
        } else if (a.noise == "inverse") {
            noise_diag[i] = 1.0 / lambdas[i];
        } else {
            throw InvalidInputError("unknown --noise '" + a.noise +
                                    "', expected identity|hessian|inverse");
        }
    }
    auto problem = quadsim::QuadraticProblem::diagonal(lambdas, noise_diag);

    if (a.gd_mode) {
        // Deterministic GD: check the per-coordinate contraction factor.
        double eta = 2.0 / lambdas.front();
        std::vector<double> theta0(a.n, 1.0);
        auto traj = quadsim::gd_trajectory(problem, theta0, eta, static_cast<int>(a.t));
        json rows = json::array();
        double worst = 0.0;
        for (int i = 0; i < a.n; ++i) {
            double predicted = std::abs(1.0 - 2.0 * lambdas[i] / lambdas.front());
            double max_dev = 0.0;
            for (std::size_t s = 0; s + 1 < traj.abs_errors.size(); ++s) {
                double prev = traj.abs_errors[s][i];
                if (prev == 0.0) continue;
                max_dev = std::max(max_dev,
                                   std::abs(traj.abs_errors[s + 1][i] / prev - predicted));
            }
            worst = std::max(worst, max_dev);
            rows.push_back(json{{"lambda", lambdas[i]},
                                {"predicted_ratio", predicted},
                                {"max_ratio_deviation", max_dev}});
        }
        out << "quadsim gd: eta=2/lambda1 steps=" << a.t
            << " worst_ratio_deviation=" << format_double(worst) << "\n";
        if (!a.out.empty()) {
            write_json(a.out, json{{"mode", "gd"}, {"eta", eta}, {"steps", a.t}, {"rows", rows}});
        }
        return kExitOk;
    }

    double eta = a.eta_c / lambdas.front();
    auto rep = quadsim::sgd_alignment_montecarlo(problem, eta, a.t, a.trials, a.seed);
    json rows = json::array();
    double worst_rel = 0.0;
    for (const auto& row : rep.rows) {
        worst_rel = std::max(worst_rel, row.rel_error);
        rows.push_back(json{{"lambda", row.lambda},
                            {"mc_estimate", row.mc_estimate},
                            {"closed_form_finite_t", row.closed_form_finite_t},
                            {"closed_form_limit", row.closed_form_limit},
                            {"rel_error", row.rel_error}});
    }
    out << "quadsim: noise=" << a.noise << " eta=" << format_double(eta) << " t=" << a.t
        << " trials=" << a.trials << " worst_rel_error=" << format_double(worst_rel) << "\n";
    if (!a.out.empty()) {
        write_json(a.out, json{{"mode", "sgd_alignment"},
                               {"noise", a.noise},
                               {"eta", eta},
                               {"t", rep.t},
                               {"trials", rep.trials},
                               {"rows", rows}});
    }
    return kExitOk;
}

// ---------------------------------------------------------------------------
// bounds
// ---------------------------------------------------------------------------

struct BoundsArgs {
    std::size_t n = 500000;
    int k = 20;
    double sigma = 0.01;
    std::string xs;
    double x_max = 10.0;
    int points = 101;
    double a_norm = -1.0, b_norm = -1.0;
    std::string out;
};

int cmd_bounds(const BoundsArgs& a, std::ostream& out) {
    std::vector<double> xs;
    if (!a.xs.empty()) {
        std::istringstream ss(a.xs);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            try {
                xs.push_back(std::stod(tok));
            } catch (const std::exception&) {
                throw InvalidInputError("bad --xs entry '" + tok + "'");
            }
        }
    } else {
        if (a.points < 2) throw InvalidInputError("--points must be >= 2");
        for (int i = 0; i < a.points; ++i) xs.push_back(a.x_max * i / (a.points - 1));
    }
    std::optional<std::pair<double, double>> norms;
    if (a.a_norm >= 0.0 && a.b_norm >= 0.0) norms = std::make_pair(a.a_norm, a.b_norm);

    auto rep = slq::concentration_bound(a.n, a.k, a.sigma, xs, norms);
    out << "bounds: n=" << rep.n << " k=" << rep.k << " sigma=" << format_double(rep.sigma) << "\n";

    if (!a.out.empty()) {
        std::ofstream f(a.out);
        if (!f) throw InvalidInputError("cannot write file: " + a.out);
        f << (norms ? "x,epsilon,prob_bound,epsilon_norm\n" : "x,epsilon,prob_bound\n");
        for (const auto& row : rep.rows) {
            f << format_double(row.x) << "," << format_double(row.epsilon) << ","
              << format_double(row.prob_bound);
            if (norms) f << "," << format_double(row.epsilon_norm);
            f << "\n";
        }
    }
    for (const auto& row : rep.rows) {
        out << "  x=" << format_double(row.x) << " epsilon=" << format_double(row.epsilon)
            << " prob_bound=" << format_double(row.prob_bound) << "\n";
    }
    return kExitOk;
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"spectral density estimation for symmetric operators"};
    app.require_subcommand(1);

    DensityArgs density;
    auto* cden = app.add_subcommand("density", "stochastic Lanczos quadrature density estimate");
    density.src.add_flags(cden, true);
    cden->add_option("--k", density.k, "number of probes");
    cden->add_option("--m", density.m, "Lanczos degree / Chebyshev degree");
    cden->add_option("--sigma2", density.sigma2, "kernel variance, or auto");
    cden->add_option("--seed", density.seed, "probe seed");
    cden->add_option("--grid", density.grid, "lo:hi:points or auto");
    cden->add_option("--grid-points", density.grid_points, "points for the auto grid");
    cden->add_option("--method", density.method, "slq or chebyshev");
    cden->add_option("--threads", density.threads, "parallel probe workers (result is identical)");
    cden->add_option("--out", density.out, "density CSV path")->required();
    cden->add_option("--meta", density.meta, "metadata JSON path (default <out>.meta.json)");

    ExactArgs exact;
    auto* cex = app.add_subcommand("exact", "exact eigenvalues and smoothed density");
    exact.src.add_flags(cex, false);
    cex->add_option("--sigma2", exact.sigma2, "kernel variance, or auto");
    cex->add_option("--grid", exact.grid, "lo:hi:points or auto");
    cex->add_option("--grid-points", exact.grid_points, "points for the auto grid");
    cex->add_option("--cap", exact.cap, "dense eigensolver size cap");
    cex->add_option("--out", exact.out, "density CSV path")->required();
    cex->add_option("--eigs", exact.eigs, "eigenvalue list path (default <out>.eigs)");
    cex->add_option("--meta", exact.meta, "metadata JSON path");

    CompareArgs compare;
    auto* ccmp = app.add_subcommand("compare", "L1 distance between two density CSVs");
    ccmp->add_option("d1", compare.d1, "first density CSV")->required();
    ccmp->add_option("d2", compare.d2, "second density CSV")->required();
    ccmp->add_option("--out", compare.out, "write the distance as JSON");

    TrainArgs train;
    auto* ctr = app.add_subcommand("train", "train the toy classifier, write checkpoints");
    ctr->add_option("--d", train.d, "input dimension");
    ctr->add_option("--hidden", train.h, "hidden width");
    ctr->add_option("--K", train.classes, "classes");
    ctr->add_option("--activation", train.activation, "tanh or relu");
    ctr->add_option("--label-smoothing", train.label_smoothing, "label smoothing");
    ctr->add_option("--per-class", train.per_class, "synthetic examples per class");
    ctr->add_option("--spread", train.spread, "cluster spread");
    ctr->add_option("--batch-size", train.batch_size, "batch size");
    ctr->add_option("--data", train.data, "load dataset instead of synthesizing");
    ctr->add_option("--data-seed", train.data_seed, "dataset seed");
    ctr->add_option("--optimizer", train.optimizer, "sgd or momentum");
    ctr->add_option("--lr", train.lr, "learning rate");
    ctr->add_option("--lr-drop", train.lr_drops, "step:factor, repeatable");
    ctr->add_option("--momentum", train.momentum, "momentum coefficient");
    ctr->add_option("--steps", train.steps, "training steps");
    ctr->add_option("--seed", train.seed, "initialization seed");
    ctr->add_option("--checkpoint-every", train.checkpoint_every, "checkpoint cadence");
    ctr->add_option("--out-dir", train.out_dir, "output directory")->required();

    MetricsArgs metrics_args;
    auto* cmet = app.add_subcommand("metrics", "spectral and gradient-geometry metrics");
    cmet->add_option("--checkpoint", metrics_args.checkpoint, "single checkpoint JSON");
    cmet->add_option("--run-dir", metrics_args.run_dir, "sweep all checkpoints in a train run");
    cmet->add_option("--data", metrics_args.data, "dataset file")->required();
    cmet->add_option("--final", metrics_args.final_checkpoint, "theta* surrogate checkpoint");
    cmet->add_option("--top-r", metrics_args.top_r, "top eigenvector count");
    cmet->add_option("--K", metrics_args.k_index, "index for zeta (default: class count)");
    cmet->add_option("--cap", metrics_args.cap, "dense path size cap");
    cmet->add_option("--lanczos-m", metrics_args.lanczos_m, "Lanczos degree for matrix-free path");
    cmet->add_option("--seed", metrics_args.seed, "probe seed for matrix-free path");
    cmet->add_option("--out", metrics_args.out, "metrics JSON path");

    QuadsimArgs quadsim_args;
    auto* cqs = app.add_subcommand("quadsim", "quadratic-model SGD alignment simulation");
    cqs->add_option("--n", quadsim_args.n, "coordinates");
    cqs->add_option("--lambda-min", quadsim_args.lambda_min, "smallest eigenvalue");
    cqs->add_option("--lambda-max", quadsim_args.lambda_max, "largest eigenvalue");
    cqs->add_option("--eta-c", quadsim_args.eta_c, "eta = c / lambda_1");
    cqs->add_option("--t", quadsim_args.t, "steps before the examined update");
    cqs->add_option("--trials", quadsim_args.trials, "Monte Carlo trials");
    cqs->add_option("--noise", quadsim_args.noise, "identity, hessian or inverse");
    cqs->add_flag("--gd", quadsim_args.gd_mode, "deterministic GD contraction check");
    cqs->add_option("--seed", quadsim_args.seed, "Monte Carlo seed");
    cqs->add_option("--out", quadsim_args.out, "report JSON path");

    BoundsArgs bounds;
    auto* cbn = app.add_subcommand("bounds", "concentration bound table");
    cbn->add_option("--n", bounds.n, "parameter count");
    cbn->add_option("--k", bounds.k, "probe count");
    cbn->add_option("--sigma", bounds.sigma, "kernel sigma");
    cbn->add_option("--xs", bounds.xs, "comma-separated x values");
    cbn->add_option("--x-max", bounds.x_max, "x sweep upper end");
    cbn->add_option("--points", bounds.points, "x sweep points");
    cbn->add_option("--a", bounds.a_norm, "Frobenius norm for the norm-dependent bound");
    cbn->add_option("--b", bounds.b_norm, "spectral norm for the norm-dependent bound");
    cbn->add_option("--out", bounds.out, "bounds CSV path");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            out << app.help();
            return kExitOk;
        }
        err << "error: " << e.what() << "\n";
        return kExitInvalidInput;
    }

    try {
        if (cden->parsed()) return cmd_density(density, out);
        if (cex->parsed()) return cmd_exact(exact, out);
        if (ccmp->parsed()) return cmd_compare(compare, out);
        if (ctr->parsed()) return cmd_train(train, out);
        if (cmet->parsed()) return cmd_metrics(metrics_args, out);
        if (cqs->parsed()) return cmd_quadsim(quadsim_args, out);
        if (cbn->parsed()) return cmd_bounds(bounds, out);
        err << "error: no subcommand\n";
        return kExitInvalidInput;
    } catch (const ResourceLimitError& e) {
        err << "error (resource limit): " << e.what() << "\n";
        return kExitResourceLimit;
    } catch (const InvalidInputError& e) {
        err << "error (invalid input): " << e.what() << "\n";
        return kExitInvalidInput;
    } catch (const NumericFailureError& e) {
        err << "error (numeric failure): " << e.what() << "\n";
        return kExitNumericFailure;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitNumericFailure;
    }
}

} // namespace specden::cli
