#pragma once

#include "specden/linalg.hpp"
#include "specden/linop.hpp"
#include "specden/nn.hpp"
#include "specden/quadsim.hpp"
#include "specden/slq.hpp"

#include <string>
#include <vector>

namespace specden::io {

// Dense matrix text format: first line `n`, then n lines of n floats.
linalg::DenseSymMatrix read_dense_matrix(const std::string& path);
void write_dense_matrix(const std::string& path, const linalg::DenseSymMatrix& a);

// Eigenvalue list: one decimal float per line, descending.
std::vector<double> read_eigenvalues(const std::string& path);
void write_eigenvalues(const std::string& path, std::span<const double> eigenvalues);

// Gradient set: first line `N n`, then N lines of n floats.
linop::GradientSet read_gradient_set(const std::string& path);
void write_gradient_set(const std::string& path, const linop::GradientSet& grads);

// Density CSV: header `t,density`, one row per grid point, 17 significant
// digits. The paired metadata JSON carries the estimation parameters.
void write_density_csv(const std::string& path, const slq::SpectralDensityEstimate& est);
slq::SpectralDensityEstimate read_density_csv(const std::string& path);
void write_density_metadata(const std::string& path, const slq::SpectralDensityEstimate& est);

// Checkpoint JSON: step, train loss, model config and the flat parameters.
void write_checkpoint(const std::string& path, const nn::Checkpoint& ckpt,
                      const nn::MlpConfig& cfg);
std::pair<nn::Checkpoint, nn::MlpConfig> read_checkpoint(const std::string& path);

// Dataset cache: header `count d K batch_size`, then `label x_1 ... x_d` rows.
void write_dataset(const std::string& path, const nn::Dataset& data);
nn::Dataset read_dataset(const std::string& path);

// idx-format reader (big-endian magic + dims, uint8 payload) for users who
// want an external image subset; pixels are scaled to [0, 1].
nn::Dataset read_idx_dataset(const std::string& images_path, const std::string& labels_path,
                             int batch_size);

} // namespace specden::io
