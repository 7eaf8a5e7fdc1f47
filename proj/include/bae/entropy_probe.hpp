#pragma once

// Set-entropy estimation from the binary codes of a trained autoencoder.

#include "bae/data_io.hpp"
#include "bae/entropy.hpp"
#include "bae/model.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace bae {

/// Which functional of the mean activation is reported as "the" entropy.
enum class Estimator {
  literal_eq4,  ///< -sum p log2 p
  bernoulli,    ///< sum of binary entropies (default)
};

/// Column mean of the binary codes over all rows of `set`.
template <typename Scalar>
Vector<Scalar> mean_activation(const BaeModel<Scalar>& model, const HiddenStateSet& set) {
  if (set.n() < 1) throw std::invalid_argument("mean_activation: empty set");
  require_dims(set.d() == model.input_dim(), "set width vs model input dim");
  // Chunked so very large sets never materialise the full n x d' code matrix.
  constexpr Index kChunk = 4096;
  Vector<Scalar> counts = Vector<Scalar>::Zero(model.hidden_dim());
  for (Index start = 0; start < set.n(); start += kChunk) {
    const Index rows = std::min(kChunk, set.n() - start);
    const Matrix<Scalar> chunk = set.rows.middleRows(start, rows).template cast<Scalar>();
    counts += encode_batch(model, chunk).colwise().sum().transpose();
  }
  return counts / static_cast<Scalar>(set.n());
}

template <typename Derived>
typename Derived::Scalar apply_estimator(const Eigen::MatrixBase<Derived>& p,
                                         Estimator estimator) {
  return estimator == Estimator::bernoulli ? bernoulli_entropy(p) : margin_entropy(p);
}

template <typename Scalar>
Scalar estimate_set_entropy(const BaeModel<Scalar>& model, const HiddenStateSet& set,
                            Estimator estimator = Estimator::bernoulli) {
  return apply_estimator(mean_activation(model, set), estimator);
}

struct TrainConfig;

struct SweepRow {
  std::string dataset;
  double final_recon_loss = 0;
  double entropy_bits_bernoulli = 0;
  double entropy_bits_eq4 = 0;
  std::optional<std::string> error;  ///< set when the file could not be processed
};

/// Trains one probe per `*.baeh` file in `dir` (sorted by name) and evaluates it
/// on the full file. Unreadable files yield a row with `error` set; the sweep
/// continues. `jobs > 1` trains independent probes concurrently.
std::vector<SweepRow> sweep_entropy(const std::filesystem::path& dir, const TrainConfig& config,
                                    std::uint64_t model_seed, unsigned jobs = 1);

/// CSV `dataset,final_recon_loss,entropy_bits_bernoulli,entropy_bits_eq4`;
/// failed rows carry `nan` values.
void write_sweep_csv(const std::vector<SweepRow>& rows, const std::filesystem::path& path);

}  // namespace bae
