#include "specden/linop.hpp"

#include "specden/common.hpp"

#include <cmath>
#include <memory>
#include <string>
#include <utility>

namespace specden::linop {

SymmetricOperator::SymmetricOperator(std::size_t n, std::string label, ApplyFn apply)
    : n_(n), label_(std::move(label)), apply_(std::move(apply)) {
    if (n_ == 0) throw InvalidInputError("SymmetricOperator: dimension must be >= 1");
    if (!apply_) throw InvalidInputError("SymmetricOperator: missing apply function");
}

std::vector<double> SymmetricOperator::apply(std::span<const double> v) const {
    if (v.size() != n_) {
        throw InvalidInputError("operator '" + label_ + "': expected vector of length " +
                                std::to_string(n_) + ", got " + std::to_string(v.size()));
    }
    for (double x : v) {
        if (!std::isfinite(x)) throw InvalidInputError("operator '" + label_ + "': non-finite input");
    }
    std::vector<double> out = apply_(v);
    if (out.size() != n_) {
        throw NumericFailureError("operator '" + label_ + "': apply returned wrong length");
    }
    for (double x : out) {
        if (!std::isfinite(x)) {
            throw NumericFailureError("operator '" + label_ + "': non-finite output");
        }
    }
    return out;
}

GradientSet::GradientSet(std::size_t n_, std::vector<std::vector<double>> g)
    : n(n_), gradients(std::move(g)) {
    if (gradients.empty()) throw InvalidInputError("GradientSet: needs at least one gradient");
    for (const auto& grad : gradients) {
        if (grad.size() != n) throw InvalidInputError("GradientSet: gradient length mismatch");
        for (double x : grad) {
            if (!std::isfinite(x)) throw InvalidInputError("GradientSet: non-finite entry");
        }
    }
}

SymmetricOperator dense_operator(linalg::DenseSymMatrix a) {
    auto mat = std::make_shared<linalg::DenseSymMatrix>(std::move(a));
    std::size_t n = static_cast<std::size_t>(mat->n);
    return SymmetricOperator(n, "dense(" + std::to_string(mat->n) + ")",
                             [mat](std::span<const double> v) {
                                 const int n_i = mat->n;
                                 std::vector<double> out(n_i, 0.0);
                                 for (int i = 0; i < n_i; ++i) {
                                     const double* row = &mat->entries[static_cast<std::size_t>(i) * n_i];
                                     double acc = 0.0;
                                     for (int j = 0; j < n_i; ++j) acc += row[j] * v[j];
                                     out[i] = acc;
                                 }
                                 return out;
                             });
}

SymmetricOperator covariance_operator(GradientSet grads) {
    auto g = std::make_shared<GradientSet>(std::move(grads));
    std::size_t n = g->n;
    std::string label = "covariance(N=" + std::to_string(g->count()) + ")";
    return SymmetricOperator(n, label, [g](std::span<const double> v) {
        std::vector<double> out(g->n, 0.0);
        const double inv_n = 1.0 / static_cast<double>(g->count());
        for (const auto& grad : g->gradients) {
            double coeff = linalg::dot(grad, v) * inv_n;
            linalg::axpy(coeff, grad, out);
        }
        return out;
    });
}

std::vector<double> random_unit_vector(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> v(n);
    for (auto& x : v) x = rng.gaussian();
    double nv = linalg::norm(v);
    if (nv == 0.0) {
        v[0] = 1.0;
        return v;
    }
    linalg::scal(1.0 / nv, v);
    return v;
}

double check_symmetry(const SymmetricOperator& op, int trials, std::uint64_t seed) {
    if (trials < 1) throw InvalidInputError("check_symmetry: trials must be >= 1");
    double max_asym = 0.0;
    for (int t = 0; t < trials; ++t) {
        auto u = random_unit_vector(op.dim(), Rng::derive(seed, 2 * t));
        auto v = random_unit_vector(op.dim(), Rng::derive(seed, 2 * t + 1));
        auto av = op.apply(v);
        auto au = op.apply(u);
        double asym = std::abs(linalg::dot(u, av) - linalg::dot(v, au));
        max_asym = std::max(max_asym, asym);
    }
    return max_asym;
}

} // namespace specden::linop
