#pragma once

// Random directional benchmark: rows are sums of random subsets of r
// orthonormal directions, so the generating entropy is exactly r bits.

#include "bae/data_io.hpp"
#include "bae/types.hpp"

#include <cstdint>
#include <filesystem>
#include <vector>

namespace bae {

struct SyntheticDataset {
  HiddenStateSet data;
  MatrixXr basis;  ///< r x d, orthonormal rows
  Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>
      coefficients;  ///< n x r, entries in {0,1}
  Index rank = 0;
  std::uint64_t seed = 0;
  Index train_rows = 0;  ///< first rows used for training; the rest are validation

  /// Generating entropy in bits (equal to the rank).
  double ground_truth_entropy() const { return static_cast<double>(rank); }
};

/// Orthonormalises an r x d standard-Gaussian draw. Requires 0 <= r <= d.
MatrixXr sample_orthonormal_basis(Index d, Index r, std::uint64_t seed);

/// n rows c * basis with c i.i.d. Bernoulli(0.5) per coordinate.
SyntheticDataset generate_dataset(const MatrixXr& basis, Index n, std::uint64_t seed);

/// Fraction of each benchmark set used for training; the remainder is validation.
inline constexpr double kTrainFraction = 0.8;

/// One dataset per rank. `seeds[i]` drives both the basis and the coefficients
/// of rank `ranks[i]`; a single seed is reused for every rank.
std::vector<SyntheticDataset> benchmark_suite(Index d, const std::vector<Index>& ranks, Index n,
                                              const std::vector<std::uint64_t>& seeds);

/// Writes the dataset file plus `<path>.json` recording d, r, n and seed.
void save_synthetic(const SyntheticDataset& ds, const std::filesystem::path& path);

}  // namespace bae
