#include "bae/entropy.hpp"
#include "bae/objectives.hpp"
#include "helpers.hpp"
#include "../oracles.hpp"

#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>

using namespace bae;

namespace {

MatrixXr from_grid(const oracle::Grid& g) {
  MatrixXr m(static_cast<Index>(g.size()), static_cast<Index>(g[0].size()));
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) m(i, j) = g[i][j];
  return m;
}

VectorXr vec(std::initializer_list<double> v) {
  VectorXr out(static_cast<Index>(v.size()));
  Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

}  // namespace

TEST_CASE("reconstruction_loss: unsquared norm, averaged") {
  BaeModel<double> zero{MatrixXr::Zero(2, 1), MatrixXr::Zero(1, 2), VectorXr::Zero(2)};
  MatrixXr one(1, 2);
  one << 3, 4;
  CHECK(reconstruction_loss(zero, one) == 5.0);
  MatrixXr two(2, 2);
  two << 3, 4, 3, 4;
  CHECK(reconstruction_loss(zero, two) == 5.0);
  CHECK_THROWS(reconstruction_loss(zero, MatrixXr(0, 2)));

  // zero input encodes to all-ones; W_out rows sum to zero so output = b = 0
  BaeModel<double> ident{MatrixXr::Zero(2, 2), MatrixXr::Zero(2, 2), VectorXr::Zero(2)};
  CHECK(reconstruction_loss(ident, MatrixXr::Zero(4, 2)) == 0.0);
}

TEST_CASE("margin_entropy: hand values") {
  CHECK(margin_entropy(VectorXr::Zero(4)) == 0.0);
  CHECK(margin_entropy(VectorXr::Ones(4)) == 0.0);
  CHECK(margin_entropy(vec({0.5, 0.25, 1.0})) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(margin_entropy(VectorXr::Constant(7, 0.5)) == doctest::Approx(3.5).epsilon(1e-15));
  CHECK_THROWS(margin_entropy(vec({0.5, 1.01})));
  CHECK_THROWS(margin_entropy(vec({-0.01})));
}

TEST_CASE("bernoulli_entropy: hand values") {
  CHECK(bernoulli_entropy(vec({0.5})) == 1.0);
  CHECK(bernoulli_entropy(vec({0.0, 1.0})) == 0.0);
  CHECK(bernoulli_entropy(vec({0.25})) == doctest::Approx(0.8112781).epsilon(1e-7));
  CHECK_THROWS(bernoulli_entropy(vec({2.0})));
}

TEST_CASE("entropies: non-negative, zero iff binary, Bernoulli dominates (property)") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 200; ++trial) {
    VectorXr p(1 + static_cast<Index>(rng() % 9));
    bool binary = true;
    for (Index i = 0; i < p.size(); ++i) {
      const auto pick = rng() % 3;
      p(i) = pick == 0 ? 0.0 : pick == 1 ? 1.0 : u(rng);
      binary = binary && (p(i) == 0.0 || p(i) == 1.0);
    }
    const double me = margin_entropy(p);
    const double be = bernoulli_entropy(p);
    CHECK(me >= 0);
    CHECK(be >= me);
    CHECK((me == 0) == binary);
    CHECK((be == 0) == binary);
    std::vector<double> pv(p.data(), p.data() + p.size());
    CHECK(me == doctest::Approx(oracle::literal_entropy(pv)).epsilon(1e-12));
    CHECK(be == doctest::Approx(oracle::binary_entropy(pv)).epsilon(1e-12));
  }
}

TEST_CASE("entropy gradient: clamp keeps it finite at p = 0") {
  const VectorXr g = margin_entropy_gradient(vec({0.0, 0.5, 1.0}));
  CHECK(std::isfinite(g(0)));
  CHECK(g(0) == doctest::Approx(-(std::log2(1e-12) + 1 / std::log(2.0))));
  CHECK(g(1) == doctest::Approx(1.0 - 1 / std::log(2.0)));
  CHECK(g(2) == doctest::Approx(-1 / std::log(2.0)));
}

TEST_CASE("covariance_penalty: hand values") {
  CHECK(covariance_penalty(from_grid({{0}, {1}, {1}})) == 0.0);
  CHECK(covariance_penalty(from_grid({{0, 0}, {1, 1}})) == 0.5);
  CHECK(covariance_penalty(from_grid({{0, 1}, {1, 0}})) == 0.5);
  CHECK_THROWS(covariance_penalty(MatrixXr(0, 2)));
}

TEST_CASE("covariance_penalty equals the pairwise oracle on every small binary matrix") {
  for (int n = 1; n <= 4; ++n)
    for (int m = 1; m <= 3; ++m)
      oracle::for_each_binary_matrix(n, m, [&](const oracle::Grid& g) {
        const MatrixXr x = from_grid(g);
        REQUIRE(std::abs(covariance_penalty(x) - oracle::offdiag_cov_abs(g)) <= 1e-12);
      });
}

TEST_CASE("covariance_penalty: permutation invariance and independent product sets") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    MatrixXr x(8, 3);
    for (Index i = 0; i < x.size(); ++i) x.data()[i] = double(rng() & 1u);
    const double base = covariance_penalty(x);
    std::vector<Index> rows(8), cols(3);
    std::iota(rows.begin(), rows.end(), 0);
    std::iota(cols.begin(), cols.end(), 0);
    std::shuffle(rows.begin(), rows.end(), rng);
    std::shuffle(cols.begin(), cols.end(), rng);
    MatrixXr y(8, 3);
    for (Index i = 0; i < 8; ++i)
      for (Index j = 0; j < 3; ++j) y(i, j) = x(rows[i], cols[j]);
    CHECK(covariance_penalty(y) == doctest::Approx(base).epsilon(1e-14));
  }
  // full product set {0,1}^3: pairwise independent columns
  MatrixXr prod(8, 3);
  for (Index i = 0; i < 8; ++i)
    for (Index j = 0; j < 3; ++j) prod(i, j) = double((i >> j) & 1);
  CHECK(covariance_penalty(prod) == 0.0);
  CHECK(covariance_penalty(MatrixXr::Ones(5, 3)) == 0.0);
}

TEST_CASE("entropy_loss: weights and hand examples") {
  const MatrixXr codes = from_grid({{1, 0}, {0, 0}});
  CHECK(entropy_loss(codes, LossWeights{0, 0}) == 0.0);
  CHECK(entropy_loss(from_grid({{1, 0, 1}}), LossWeights{1, 1}) == 0.0);
  CHECK(entropy_loss(codes, LossWeights{1, 0}) == 0.5);
  CHECK_THROWS(entropy_loss(codes, LossWeights{-1, 0}));
  CHECK_THROWS(entropy_loss(MatrixXr(0, 2), LossWeights{1, 1}));
}

TEST_CASE("total_loss: decomposition") {
  const auto m = init_model(3, 7, 2);
  const MatrixXr batch = testing::gaussian(11, 3, 3);
  CHECK(total_loss(m, batch, LossWeights{0, 0}) == reconstruction_loss(m, batch));
  const LossWeights w{0.3, 0.7};
  const auto parts = loss_parts(m, batch, w);
  CHECK(std::abs(parts.recon + 0.3 * parts.margin_entropy + 0.7 * parts.covariance -
                 total_loss(m, batch, w)) < 1e-12);

  // perfect model on identical rows: codes constant, reconstruction exact
  BaeModel<double> p{MatrixXr::Zero(2, 2), MatrixXr::Zero(2, 2), VectorXr::Zero(2)};
  p.bias << 1, -1;
  MatrixXr same(3, 2);
  same << 1, -1, 1, -1, 1, -1;
  CHECK(total_loss(p, same, LossWeights{0.5, 0.5}) == 0.0);
}
