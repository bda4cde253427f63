#include "specden/nn.hpp"

#include "specden/common.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <string>

namespace specden::nn {

namespace {

// Offsets into the flat parameter vector.
struct Layout {
    int d, h, k;
    int w1, b1, w2, b2, total;

    explicit Layout(const MlpConfig& cfg)
        : d(cfg.input_dim), h(cfg.hidden), k(cfg.classes) {
        w1 = 0;
        b1 = w1 + h * d;
        w2 = b1 + h;
        b2 = w2 + k * h;
        total = b2 + k;
    }
};

struct ActDerivs {
    double value, first, second;
};

ActDerivs activate(Activation act, double z) {
    if (act == Activation::Tanh) {
        double a = std::tanh(z);
        double fp = 1.0 - a * a;
        return {a, fp, -2.0 * a * fp};
    }
    double on = z > 0.0 ? 1.0 : 0.0;
    return {z * on, on, 0.0};
}

void check_range(const Dataset& data, int begin, int end) {
    if (begin < 0 || end > data.size() || begin >= end) {
        throw InvalidInputError("nn: invalid example range [" + std::to_string(begin) + ", " +
                                std::to_string(end) + ")");
    }
}

void check_shapes(std::span<const double> params, const MlpConfig& cfg, const Dataset& data) {
    cfg.validate();
    data.validate();
    if (data.input_dim != cfg.input_dim || data.classes > cfg.classes) {
        throw InvalidInputError("nn: dataset does not match model config");
    }
    if (params.size() != static_cast<std::size_t>(cfg.param_count())) {
        throw InvalidInputError("nn: parameter vector has wrong length");
    }
}

// Single forward pass; throws on non-finite activations.
struct Forward {
    std::vector<double> z1, a1, fp, fpp, p;
    double loss = 0.0;
};

void forward_example(std::span<const double> params, const MlpConfig& cfg, const Layout& lay,
                     std::span<const double> x, int y, Forward& f) {
    f.z1.assign(lay.h, 0.0);
    f.a1.assign(lay.h, 0.0);
    f.fp.assign(lay.h, 0.0);
    f.fpp.assign(lay.h, 0.0);
    f.p.assign(lay.k, 0.0);

    for (int j = 0; j < lay.h; ++j) {
        double acc = params[lay.b1 + j];
        const double* row = &params[lay.w1 + j * lay.d];
        for (int i = 0; i < lay.d; ++i) acc += row[i] * x[i];
        if (!std::isfinite(acc)) throw NumericFailureError("nn: non-finite hidden pre-activation");
        f.z1[j] = acc;
        auto ad = activate(cfg.activation, acc);
        f.a1[j] = ad.value;
        f.fp[j] = ad.first;
        f.fpp[j] = ad.second;
    }
    double zmax = -std::numeric_limits<double>::infinity();
    for (int c = 0; c < lay.k; ++c) {
        double acc = params[lay.b2 + c];
        const double* row = &params[lay.w2 + c * lay.h];
        for (int j = 0; j < lay.h; ++j) acc += row[j] * f.a1[j];
        if (!std::isfinite(acc)) throw NumericFailureError("nn: non-finite logit");
        f.p[c] = acc;
        zmax = std::max(zmax, acc);
    }
    double sum = 0.0;
    for (int c = 0; c < lay.k; ++c) sum += std::exp(f.p[c] - zmax);
    double lse = zmax + std::log(sum);
    double qz = 0.0;
    const double smooth = cfg.label_smoothing;
    for (int c = 0; c < lay.k; ++c) {
        double q = smooth / lay.k + (c == y ? 1.0 - smooth : 0.0);
        qz += q * f.p[c];
        f.p[c] = std::exp(f.p[c] - lse);
    }
    f.loss = lse - qz;
}

} // namespace

void MlpConfig::validate() const {
    if (input_dim < 1 || hidden < 1 || classes < 1) {
        throw InvalidInputError("MlpConfig: dimensions must be >= 1");
    }
    if (label_smoothing < 0.0 || label_smoothing >= 1.0) {
        throw InvalidInputError("MlpConfig: label smoothing must lie in [0, 1)");
    }
}

int param_count(const MlpConfig& cfg) {
    cfg.validate();
    return cfg.param_count();
}

int Dataset::num_batches() const {
    int bs = batch_size > 0 ? std::min(batch_size, size()) : size();
    return (size() + bs - 1) / bs;
}

std::pair<int, int> Dataset::batch_bounds(int b) const {
    int bs = batch_size > 0 ? std::min(batch_size, size()) : size();
    int begin = b * bs;
    int end = std::min(begin + bs, size());
    if (b < 0 || begin >= size()) throw InvalidInputError("Dataset: batch index out of range");
    return {begin, end};
}

void Dataset::validate() const {
    if (xs.empty()) throw InvalidInputError("Dataset: empty");
    if (xs.size() != ys.size()) throw InvalidInputError("Dataset: example/label count mismatch");
    for (const auto& x : xs) {
        if (static_cast<int>(x.size()) != input_dim) {
            throw InvalidInputError("Dataset: example dimension mismatch");
        }
    }
    for (int y : ys) {
        if (y < 0 || y >= classes) throw InvalidInputError("Dataset: label out of range");
    }
}

double LrSchedule::at(long step) const {
    double lr = base;
    for (auto [threshold, factor] : drops) {
        if (step >= threshold) lr *= factor;
    }
    return lr;
}

Dataset synth_dataset(std::uint64_t seed, int input_dim, int classes, int per_class, double spread,
                      int batch_size) {
    if (input_dim < 1 || classes < 1 || per_class < 1) {
        throw InvalidInputError("synth_dataset: dimensions must be >= 1");
    }
    Rng rng(seed);
    std::vector<std::vector<double>> centers(classes, std::vector<double>(input_dim));
    for (auto& c : centers) {
        for (auto& x : c) x = rng.gaussian();
    }
    Dataset data;
    data.input_dim = input_dim;
    data.classes = classes;
    data.batch_size = batch_size;
    int total = per_class * classes;
    data.xs.reserve(total);
    data.ys.reserve(total);
    for (int i = 0; i < total; ++i) {
        int c = i % classes;
        std::vector<double> x(input_dim);
        for (int j = 0; j < input_dim; ++j) x[j] = centers[c][j] + spread * rng.gaussian();
        data.xs.push_back(std::move(x));
        data.ys.push_back(c);
    }
    return data;
}

namespace {

double forward_loss_unchecked(std::span<const double> params, const MlpConfig& cfg,
                              const Dataset& data, int begin, int end) {
    Layout lay(cfg);
    Forward f;
    double acc = 0.0;
    for (int e = begin; e < end; ++e) {
        forward_example(params, cfg, lay, data.xs[e], data.ys[e], f);
        acc += f.loss;
    }
    return acc / (end - begin);
}

std::vector<double> gradient_unchecked(std::span<const double> params, const MlpConfig& cfg,
                                       const Dataset& data, int begin, int end) {
    Layout lay(cfg);
    Forward f;
    std::vector<double> g(lay.total, 0.0);
    std::vector<double> dz2(lay.k), dz1(lay.h);
    const double smooth = cfg.label_smoothing;
    for (int e = begin; e < end; ++e) {
        const auto& x = data.xs[e];
        int y = data.ys[e];
        forward_example(params, cfg, lay, x, y, f);
        for (int c = 0; c < lay.k; ++c) {
            dz2[c] = f.p[c] - (smooth / lay.k + (c == y ? 1.0 - smooth : 0.0));
        }
        for (int j = 0; j < lay.h; ++j) {
            double da1 = 0.0;
            for (int c = 0; c < lay.k; ++c) da1 += params[lay.w2 + c * lay.h + j] * dz2[c];
            dz1[j] = da1 * f.fp[j];
        }
        for (int c = 0; c < lay.k; ++c) {
            g[lay.b2 + c] += dz2[c];
            double* grow = &g[lay.w2 + c * lay.h];
            for (int j = 0; j < lay.h; ++j) grow[j] += dz2[c] * f.a1[j];
        }
        for (int j = 0; j < lay.h; ++j) {
            g[lay.b1 + j] += dz1[j];
            double* grow = &g[lay.w1 + j * lay.d];
            for (int i = 0; i < lay.d; ++i) grow[i] += dz1[j] * x[i];
        }
    }
    linalg::scal(1.0 / (end - begin), g);
    return g;
}

std::vector<double> hvp_unchecked(std::span<const double> params, const MlpConfig& cfg,
                                  const Dataset& data, int begin, int end,
                                  std::span<const double> v) {
    Layout lay(cfg);
    Forward f;
    std::vector<double> out(lay.total, 0.0);
    std::vector<double> dz2(lay.k);
    std::vector<double> rz1(lay.h), ra1(lay.h), rz2(lay.k), rdz2(lay.k), rdz1(lay.h);
    const double smooth = cfg.label_smoothing;

    for (int e = begin; e < end; ++e) {
        const auto& x = data.xs[e];
        int y = data.ys[e];
        forward_example(params, cfg, lay, x, y, f);

        // Forward tangent pass.
        for (int j = 0; j < lay.h; ++j) {
            double acc = v[lay.b1 + j];
            const double* vrow = &v[lay.w1 + j * lay.d];
            for (int i = 0; i < lay.d; ++i) acc += vrow[i] * x[i];
            rz1[j] = acc;
            ra1[j] = f.fp[j] * acc;
        }
        double p_rz2 = 0.0;
        for (int c = 0; c < lay.k; ++c) {
            double acc = v[lay.b2 + c];
            const double* vrow = &v[lay.w2 + c * lay.h];
            const double* wrow = &params[lay.w2 + c * lay.h];
            for (int j = 0; j < lay.h; ++j) acc += vrow[j] * f.a1[j] + wrow[j] * ra1[j];
            rz2[c] = acc;
            p_rz2 += f.p[c] * acc;
        }
        // R(p) = p .* (Rz2 - p.Rz2); targets are constant so R(dz2) = R(p).
        for (int c = 0; c < lay.k; ++c) {
            dz2[c] = f.p[c] - (smooth / lay.k + (c == y ? 1.0 - smooth : 0.0));
            rdz2[c] = f.p[c] * (rz2[c] - p_rz2);
        }
        for (int j = 0; j < lay.h; ++j) {
            double da1 = 0.0, rda1 = 0.0;
            for (int c = 0; c < lay.k; ++c) {
                double w = params[lay.w2 + c * lay.h + j];
                rda1 += v[lay.w2 + c * lay.h + j] * dz2[c] + w * rdz2[c];
                da1 += w * dz2[c];
            }
            rdz1[j] = rda1 * f.fp[j] + da1 * f.fpp[j] * rz1[j];
        }
        for (int c = 0; c < lay.k; ++c) {
            out[lay.b2 + c] += rdz2[c];
            double* orow = &out[lay.w2 + c * lay.h];
            for (int j = 0; j < lay.h; ++j) orow[j] += rdz2[c] * f.a1[j] + dz2[c] * ra1[j];
        }
        for (int j = 0; j < lay.h; ++j) {
            out[lay.b1 + j] += rdz1[j];
            double* orow = &out[lay.w1 + j * lay.d];
            for (int i = 0; i < lay.d; ++i) orow[i] += rdz1[j] * x[i];
        }
    }
    linalg::scal(1.0 / (end - begin), out);
    return out;
}

void check_direction(const MlpConfig& cfg, std::span<const double> v) {
    if (v.size() != static_cast<std::size_t>(cfg.param_count())) {
        throw InvalidInputError("hvp: direction vector has wrong length");
    }
}

} // namespace

double forward_loss(std::span<const double> params, const MlpConfig& cfg, const Dataset& data,
                    int begin, int end) {
    check_shapes(params, cfg, data);
    check_range(data, begin, end);
    return forward_loss_unchecked(params, cfg, data, begin, end);
}

std::vector<double> gradient(std::span<const double> params, const MlpConfig& cfg,
                             const Dataset& data, int begin, int end) {
    check_shapes(params, cfg, data);
    check_range(data, begin, end);
    return gradient_unchecked(params, cfg, data, begin, end);
}

std::vector<double> hvp(std::span<const double> params, const MlpConfig& cfg, const Dataset& data,
                        int begin, int end, std::span<const double> v) {
    check_shapes(params, cfg, data);
    check_range(data, begin, end);
    check_direction(cfg, v);
    return hvp_unchecked(params, cfg, data, begin, end, v);
}

double full_loss(std::span<const double> params, const MlpConfig& cfg, const Dataset& data) {
    check_shapes(params, cfg, data);
    double acc = 0.0;
    const int nb = data.num_batches();
    for (int b = 0; b < nb; ++b) {
        auto [lo, hi] = data.batch_bounds(b);
        acc += forward_loss_unchecked(params, cfg, data, lo, hi);
    }
    return acc / nb;
}

std::vector<double> full_gradient(std::span<const double> params, const MlpConfig& cfg,
                                  const Dataset& data) {
    check_shapes(params, cfg, data);
    std::vector<double> g(cfg.param_count(), 0.0);
    const int nb = data.num_batches();
    for (int b = 0; b < nb; ++b) {
        auto [lo, hi] = data.batch_bounds(b);
        linalg::axpy(1.0, gradient_unchecked(params, cfg, data, lo, hi), g);
    }
    linalg::scal(1.0 / nb, g);
    return g;
}

std::vector<double> full_hvp(std::span<const double> params, const MlpConfig& cfg,
                             const Dataset& data, std::span<const double> v) {
    check_shapes(params, cfg, data);
    check_direction(cfg, v);
    std::vector<double> out(cfg.param_count(), 0.0);
    const int nb = data.num_batches();
    for (int b = 0; b < nb; ++b) {
        auto [lo, hi] = data.batch_bounds(b);
        linalg::axpy(1.0, hvp_unchecked(params, cfg, data, lo, hi, v), out);
    }
    linalg::scal(1.0 / nb, out);
    return out;
}

linop::GradientSet per_batch_gradients(std::span<const double> params, const MlpConfig& cfg,
                                       const Dataset& data) {
    check_shapes(params, cfg, data);
    std::vector<std::vector<double>> grads;
    const int nb = data.num_batches();
    grads.reserve(nb);
    for (int b = 0; b < nb; ++b) {
        auto [lo, hi] = data.batch_bounds(b);
        grads.push_back(gradient_unchecked(params, cfg, data, lo, hi));
    }
    return linop::GradientSet(cfg.param_count(), std::move(grads));
}

linalg::DenseSymMatrix exact_hessian(std::span<const double> params, const MlpConfig& cfg,
                                     const Dataset& data, int cap) {
    check_shapes(params, cfg, data);
    const int n = cfg.param_count();
    if (n > cap) {
        throw ResourceLimitError("exact_hessian: " + std::to_string(n) +
                                 " parameters exceed the dense cap of " + std::to_string(cap));
    }
    const int nb = data.num_batches();
    std::vector<double> entries(static_cast<std::size_t>(n) * n, 0.0);
    std::vector<double> unit(n, 0.0);
    std::vector<double> col(n);
    for (int j = 0; j < n; ++j) {
        unit[j] = 1.0;
        std::fill(col.begin(), col.end(), 0.0);
        for (int b = 0; b < nb; ++b) {
            auto [lo, hi] = data.batch_bounds(b);
            linalg::axpy(1.0, hvp_unchecked(params, cfg, data, lo, hi, unit), col);
        }
        unit[j] = 0.0;
        for (int i = 0; i < n; ++i) entries[static_cast<std::size_t>(i) * n + j] = col[i] / nb;
    }
    return linalg::DenseSymMatrix(n, std::move(entries));
}

linop::SymmetricOperator hessian_operator(std::vector<double> params, MlpConfig cfg, Dataset data) {
    check_shapes(params, cfg, data);
    struct State {
        std::vector<double> params;
        MlpConfig cfg;
        Dataset data;
    };
    auto st = std::make_shared<State>(State{std::move(params), cfg, std::move(data)});
    std::size_t n = static_cast<std::size_t>(st->cfg.param_count());
    return linop::SymmetricOperator(n, "mlp-hessian(n=" + std::to_string(n) + ")",
                                    [st](std::span<const double> v) {
                                        check_direction(st->cfg, v);
                                        std::vector<double> out(st->cfg.param_count(), 0.0);
                                        const int nb = st->data.num_batches();
                                        for (int b = 0; b < nb; ++b) {
                                            auto [lo, hi] = st->data.batch_bounds(b);
                                            linalg::axpy(1.0,
                                                         hvp_unchecked(st->params, st->cfg,
                                                                       st->data, lo, hi, v),
                                                         out);
                                        }
                                        linalg::scal(1.0 / nb, out);
                                        return out;
                                    });
}

std::vector<double> init_params(const MlpConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    Layout lay(cfg);
    Rng rng(Rng::derive(seed, 0x1217));
    std::vector<double> params(lay.total, 0.0);
    double s1 = 1.0 / std::sqrt(static_cast<double>(lay.d));
    for (int i = 0; i < lay.h * lay.d; ++i) params[lay.w1 + i] = s1 * rng.gaussian();
    double s2 = 1.0 / std::sqrt(static_cast<double>(lay.h));
    for (int i = 0; i < lay.k * lay.h; ++i) params[lay.w2 + i] = s2 * rng.gaussian();
    return params;
}

std::vector<Checkpoint> train(const MlpConfig& cfg, const Dataset& data, const TrainOptions& opts) {
    if (opts.steps < 1) throw InvalidInputError("train: steps must be >= 1");
    if (opts.checkpoint_every < 1) throw InvalidInputError("train: checkpoint cadence must be >= 1");
    auto params = init_params(cfg, opts.seed);
    check_shapes(params, cfg, data);

    std::vector<Checkpoint> checkpoints;
    auto record = [&](long step) {
        checkpoints.push_back({step, params, full_loss(params, cfg, data)});
    };
    record(0);

    const int nb = data.num_batches();
    std::vector<double> velocity(params.size(), 0.0);
    for (long t = 0; t < opts.steps; ++t) {
        auto [lo, hi] = data.batch_bounds(static_cast<int>(t % nb));
        auto g = gradient_unchecked(params, cfg, data, lo, hi);
        double lr = opts.lr.at(t);
        if (opts.optimizer == TrainOptions::Optimizer::Momentum) {
            for (std::size_t i = 0; i < params.size(); ++i) {
                velocity[i] = opts.momentum * velocity[i] + g[i];
                params[i] -= lr * velocity[i];
            }
        } else {
            linalg::axpy(-lr, g, params);
        }
        for (double p : params) {
            if (!std::isfinite(p)) {
                throw NumericFailureError("train: diverged at step " + std::to_string(t + 1));
            }
        }
        long step = t + 1;
        if (step % opts.checkpoint_every == 0 || step == opts.steps) record(step);
    }
    return checkpoints;
}

} // namespace specden::nn
