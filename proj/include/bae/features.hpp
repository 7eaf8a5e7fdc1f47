#pragma once

// Burstiness magnitudes, per-sample significant channels and activation
// frequency histograms.

#include "bae/data_io.hpp"
#include "bae/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numeric>
#include <vector>

namespace bae {

/// log2 of the smallest distance burstiness distinguishes; keeps beta finite.
inline constexpr double kBurstinessFloorLog2 = -40.0;

/// Elementwise log2 max(|code - prior|, 2^-40).
template <typename DerivedC, typename DerivedP>
Vector<typename DerivedC::Scalar> burstiness(const Eigen::MatrixBase<DerivedC>& code,
                                             const Eigen::MatrixBase<DerivedP>& prior) {
  using Scalar = typename DerivedC::Scalar;
  require_dims(code.size() == prior.size(), "code length vs prior length");
  const Scalar floor = std::exp2(Scalar(kBurstinessFloorLog2));
  Vector<Scalar> beta(code.size());
  for (Index i = 0; i < code.size(); ++i)
    beta(i) = std::log2(std::max(std::abs(code(i) - Scalar(prior(i))), floor));
  return beta;
}

/// Row-wise burstiness of an n x d' code matrix.
template <typename Derived>
Matrix<typename Derived::Scalar> burstiness_rows(const Eigen::MatrixBase<Derived>& codes,
                                                 const VectorXr& prior) {
  using Scalar = typename Derived::Scalar;
  require_dims(codes.cols() == prior.size(), "code width vs prior length");
  Matrix<Scalar> beta(codes.rows(), codes.cols());
  for (Index i = 0; i < codes.rows(); ++i) beta.row(i) = burstiness(codes.row(i).transpose(), prior).transpose();
  return beta;
}

/// Indices of the k largest entries, ties to the lower index, returned in
/// descending order of value.
template <typename Derived>
std::vector<Index> significant_channels(const Eigen::MatrixBase<Derived>& values, Index k) {
  const Index m = values.size();
  if (k < 1 || k > m)
    throw std::invalid_argument("significant_channels: k must lie in [1, " + std::to_string(m) +
                                "]");
  std::vector<Index> idx(static_cast<std::size_t>(m));
  std::iota(idx.begin(), idx.end(), Index{0});
  const auto before = [&](Index a, Index b) {
    return values(a) > values(b) || (values(a) == values(b) && a < b);
  };
  std::partial_sort(idx.begin(), idx.begin() + k, idx.end(), before);
  idx.resize(static_cast<std::size_t>(k));
  return idx;
}

/// Number of rows whose top-k set contains each column.
template <typename Derived>
std::vector<std::int64_t> top_k_counts(const Eigen::MatrixBase<Derived>& magnitudes, Index k) {
  std::vector<std::int64_t> counts(static_cast<std::size_t>(magnitudes.cols()), 0);
  for (Index i = 0; i < magnitudes.rows(); ++i)
    for (Index j : significant_channels(magnitudes.row(i).transpose(), k))
      ++counts[static_cast<std::size_t>(j)];
  return counts;
}

inline VectorXr counts_to_frequency(const std::vector<std::int64_t>& counts, Index n) {
  VectorXr freq(static_cast<Index>(counts.size()));
  for (Index j = 0; j < freq.size(); ++j)
    freq(j) = static_cast<double>(counts[static_cast<std::size_t>(j)]) / static_cast<double>(n);
  return freq;
}

/// Fraction of rows whose top-k set contains each column.
template <typename Derived>
VectorXr top_k_frequency(const Eigen::MatrixBase<Derived>& magnitudes, Index k) {
  if (magnitudes.rows() < 1) throw std::invalid_argument("top_k_frequency: empty set");
  return counts_to_frequency(top_k_counts(magnitudes, k), magnitudes.rows());
}

/// Per-channel frequency of membership in the burstiness top-k.
VectorXr activation_frequency(const BaeModel<double>& model, const HiddenStateSet& set,
                              const VectorXr& prior, Index k);

/// Share of channels whose frequency exceeds `threshold`.
double dense_fraction(const VectorXr& frequency, double threshold = 0.5);

/// Per-channel standardisation (population std); constant channels become 0.
MatrixXr rescale_activations(const MatrixXr& activations);

/// CSV `channel,frequency`.
void write_histogram_csv(const VectorXr& frequency, const std::filesystem::path& path);

}  // namespace bae
