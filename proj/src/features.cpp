#include "bae/features.hpp"

#include "bae/detail/bytes.hpp"

#include <cstdio>

namespace bae {

VectorXr activation_frequency(const BaeModel<double>& model, const HiddenStateSet& set,
                              const VectorXr& prior, Index k) {
  if (set.n() < 1) throw std::invalid_argument("activation_frequency: empty set");
  require_dims(prior.size() == model.hidden_dim(), "prior length vs hidden dim");
  constexpr Index kChunk = 4096;
  std::vector<std::int64_t> counts(static_cast<std::size_t>(model.hidden_dim()), 0);
  for (Index start = 0; start < set.n(); start += kChunk) {
    const Index rows = std::min(kChunk, set.n() - start);
    const MatrixXr beta = burstiness_rows(encode_batch(model, set.rows.middleRows(start, rows)), prior);
    const auto chunk_counts = top_k_counts(beta, k);
    for (std::size_t j = 0; j < counts.size(); ++j) counts[j] += chunk_counts[j];
  }
  return counts_to_frequency(counts, set.n());
}

double dense_fraction(const VectorXr& frequency, double threshold) {
  if (frequency.size() == 0) throw std::invalid_argument("dense_fraction: empty histogram");
  return static_cast<double>((frequency.array() > threshold).count()) /
         static_cast<double>(frequency.size());
}

MatrixXr rescale_activations(const MatrixXr& activations) {
  const Index n = activations.rows();
  if (n < 2) throw std::invalid_argument("rescale_activations: need at least 2 rows");
  MatrixXr out(n, activations.cols());
  for (Index j = 0; j < activations.cols(); ++j) {
    const auto col = activations.col(j);
    const double mean = col.mean();
    const double var = (col.array() - mean).square().sum() / static_cast<double>(n);
    if (var > 0)
      out.col(j) = (col.array() - mean) / std::sqrt(var);
    else
      out.col(j).setZero();
  }
  return out;
}

void write_histogram_csv(const VectorXr& frequency, const std::filesystem::path& path) {
  std::string text = "channel,frequency\n";
  char line[64];
  for (Index j = 0; j < frequency.size(); ++j) {
    std::snprintf(line, sizeof line, "%lld,%.9g\n", static_cast<long long>(j), frequency(j));
    text += line;
  }
  detail::write_file(path, {text.begin(), text.end()});
}

}  // namespace bae
