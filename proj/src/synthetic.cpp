#include "bae/synthetic.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <random>

namespace bae {

MatrixXr sample_orthonormal_basis(Index d, Index r, std::uint64_t seed) {
  if (d < 1) throw std::invalid_argument("basis dimension must be >= 1");
  if (r < 0 || r > d) throw std::invalid_argument("rank must lie in [0, d]");
  if (r == 0) return MatrixXr(0, d);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd draw(d, r);
  for (Index j = 0; j < r; ++j)
    for (Index i = 0; i < d; ++i) draw(i, j) = normal(rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(draw);
  const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(d, r);
  return q.transpose();
}

SyntheticDataset generate_dataset(const MatrixXr& basis, Index n, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("n must be >= 1");
  const Index r = basis.rows();
  SyntheticDataset ds;
  ds.basis = basis;
  ds.rank = r;
  ds.seed = seed;
  ds.train_rows = static_cast<Index>(std::floor(kTrainFraction * static_cast<double>(n)));
  ds.coefficients.resize(n, r);
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution coin(0.5);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < r; ++j) ds.coefficients(i, j) = coin(rng) ? 1 : 0;
  ds.data.rows = MatrixXr::Zero(n, basis.cols());
  if (r > 0) ds.data.rows.noalias() = ds.coefficients.cast<double>() * basis;
  return ds;
}

std::vector<SyntheticDataset> benchmark_suite(Index d, const std::vector<Index>& ranks, Index n,
                                              const std::vector<std::uint64_t>& seeds) {
  if (seeds.empty() || (seeds.size() != 1 && seeds.size() != ranks.size()))
    throw std::invalid_argument("benchmark_suite: need one seed or one per rank");
  for (Index r : ranks)
    if (r < 0 || r > d) throw std::invalid_argument("invalid rank " + std::to_string(r));
  std::vector<SyntheticDataset> suite;
  suite.reserve(ranks.size());
  for (std::size_t i = 0; i < ranks.size(); ++i) {
    const std::uint64_t seed = seeds.size() == 1 ? seeds[0] : seeds[i];
    // Basis and coefficients draw from decorrelated streams of the same seed.
    suite.push_back(generate_dataset(sample_orthonormal_basis(d, ranks[i], seed), n,
                                     seed ^ 0x9e3779b97f4a7c15ull));
    suite.back().seed = seed;
  }
  return suite;
}

void save_synthetic(const SyntheticDataset& ds, const std::filesystem::path& path) {
  save_dataset(ds.data, path);
  const nlohmann::json meta = {{"d", ds.data.d()},
                               {"r", ds.rank},
                               {"n", ds.data.n()},
                               {"seed", ds.seed},
                               {"train_rows", ds.train_rows}};
  std::ofstream out(path.string() + ".json");
  if (!out) throw std::runtime_error("cannot write sidecar for " + path.string());
  out << meta.dump(2) << '\n';
}

}  // namespace bae
