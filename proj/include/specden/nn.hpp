#pragma once

#include "specden/linalg.hpp"
#include "specden/linop.hpp"

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace specden::nn {

// Tanh is the default: it is twice differentiable everywhere, so Hessians and
// finite-difference oracles are clean. Relu is provided for qualitative
// comparison; its second derivative vanishes a.e. and is undefined at the
// kink, so curvature results there carry the usual caveat.
enum class Activation { Tanh, Relu };

/// Two-layer classifier: input_dim -> hidden (activation) -> classes, softmax
/// cross-entropy with label smoothing. Parameter vector layout: W1 row-major
/// (hidden x input_dim), b1, W2 row-major (classes x hidden), b2.
struct MlpConfig {
    int input_dim = 0;
    int hidden = 0;
    int classes = 0;
    Activation activation = Activation::Tanh;
    double label_smoothing = 0.1;

    int param_count() const { return (input_dim + 1) * hidden + (hidden + 1) * classes; }
    void validate() const;
};

int param_count(const MlpConfig& cfg);

/// Labeled examples plus the fixed batch partition: batch b covers the
/// contiguous index range [b*batch_size, min((b+1)*batch_size, size)).
/// The full-batch loss is the mean of the per-batch mean losses.
struct Dataset {
    int input_dim = 0;
    int classes = 0;
    int batch_size = 0;
    std::vector<std::vector<double>> xs;
    std::vector<int> ys;

    int size() const { return static_cast<int>(xs.size()); }
    int num_batches() const;
    std::pair<int, int> batch_bounds(int b) const;
    void validate() const;
};

struct Checkpoint {
    long step = 0;
    std::vector<double> params;
    double train_loss = 0.0;
};

struct LrSchedule {
    double base = 0.05;
    std::vector<std::pair<long, double>> drops; // multiply by factor once step >= threshold

    double at(long step) const;
};

struct TrainOptions {
    enum class Optimizer { Sgd, Momentum };
    Optimizer optimizer = Optimizer::Momentum;
    LrSchedule lr;
    double momentum = 0.9;
    long steps = 3000;
    std::uint64_t seed = 0;
    long checkpoint_every = 500;
};

/// One Gaussian cluster per class; centers and samples drawn deterministically
/// from the seed. Example i belongs to class i % K.
Dataset synth_dataset(std::uint64_t seed, int input_dim, int classes, int per_class, double spread,
                      int batch_size = 100);

/// Mean smoothed cross-entropy over the examples [begin, end).
double forward_loss(std::span<const double> params, const MlpConfig& cfg, const Dataset& data,
                    int begin, int end);
/// Mean gradient over [begin, end).
std::vector<double> gradient(std::span<const double> params, const MlpConfig& cfg,
                             const Dataset& data, int begin, int end);
/// Mean Hessian-vector product over [begin, end) via forward-over-reverse
/// differentiation; exact and linear in v.
std::vector<double> hvp(std::span<const double> params, const MlpConfig& cfg, const Dataset& data,
                        int begin, int end, std::span<const double> v);

// Full-dataset versions: mean over the batch partition, accumulated in fixed
// batch order in double precision.
double full_loss(std::span<const double> params, const MlpConfig& cfg, const Dataset& data);
std::vector<double> full_gradient(std::span<const double> params, const MlpConfig& cfg,
                                  const Dataset& data);
std::vector<double> full_hvp(std::span<const double> params, const MlpConfig& cfg,
                             const Dataset& data, std::span<const double> v);

/// The N per-batch mean gradients at the given parameters.
linop::GradientSet per_batch_gradients(std::span<const double> params, const MlpConfig& cfg,
                                       const Dataset& data);

/// Dense Hessian, one HVP per column, symmetrized on return. Guarded by a
/// parameter-count cap since this is the exact-oracle path.
linalg::DenseSymMatrix exact_hessian(std::span<const double> params, const MlpConfig& cfg,
                                     const Dataset& data, int cap = 4000);

/// Matrix-free Hessian: apply(v) = full-data mean HVP.
linop::SymmetricOperator hessian_operator(std::vector<double> params, MlpConfig cfg, Dataset data);

/// Deterministic initialization: W ~ N(0, 1/fan_in), biases zero.
std::vector<double> init_params(const MlpConfig& cfg, std::uint64_t seed);

/// Minibatch training over the fixed batch order (step t uses batch t mod N).
/// Records a checkpoint at step 0, every `checkpoint_every` steps and at the
/// final step. Raises a numeric failure naming the step if the loss diverges.
std::vector<Checkpoint> train(const MlpConfig& cfg, const Dataset& data, const TrainOptions& opts);

} // namespace specden::nn
