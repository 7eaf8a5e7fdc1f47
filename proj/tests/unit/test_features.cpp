#include "bae/entropy_probe.hpp"
#include "bae/features.hpp"
#include "helpers.hpp"
#include "../oracles.hpp"

#include <doctest.h>

#include <fstream>
#include <set>

using namespace bae;

namespace {

VectorXr vec(std::initializer_list<double> v) {
  VectorXr out(static_cast<Index>(v.size()));
  Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

}  // namespace

TEST_CASE("burstiness: hand values and the floor") {
  const VectorXr b = burstiness(vec({1, 0}), vec({0.25, 0.5}));
  CHECK(b(0) == doctest::Approx(-0.41504).epsilon(1e-5));
  CHECK(b(1) == -1.0);
  CHECK(burstiness(vec({1, 0}), vec({1, 0})) == vec({-40, -40}));
  CHECK(burstiness(vec({1, 0, 1}), VectorXr::Constant(3, 0.5)) == VectorXr::Constant(3, -1));
  CHECK_THROWS_AS(burstiness(vec({1}), vec({0.5, 0.5})), DimensionError);
}

TEST_CASE("burstiness: channel equivariance, single-bit flips, bounds (property)") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.01, 0.99);
  for (int trial = 0; trial < 100; ++trial) {
    VectorXr prior(9), code(9);
    for (Index i = 0; i < 9; ++i) {
      prior(i) = u(rng);
      code(i) = double(rng() & 1u);
    }
    const VectorXr b = burstiness(code, prior);
    CHECK(b.maxCoeff() <= 0);
    CHECK(b.minCoeff() >= -40);
    const VectorXr pr = prior.reverse(), cr = code.reverse();
    CHECK(burstiness(cr, pr) == VectorXr(b.reverse()));
    const Index flip = static_cast<Index>(rng() % 9);
    VectorXr flipped = code;
    flipped(flip) = 1 - flipped(flip);
    const VectorXr bf = burstiness(flipped, prior);
    int changed = 0;
    for (Index i = 0; i < 9; ++i) changed += bf(i) != b(i);
    CHECK(changed == 1);
  }
}

TEST_CASE("burstiness_rows: duplicating samples duplicates rows") {
  MatrixXr codes(2, 3);
  codes << 1, 0, 1, 0, 0, 1;
  const VectorXr prior = vec({0.3, 0.6, 0.9});
  MatrixXr dup(4, 3);
  dup << codes, codes;
  const MatrixXr b = burstiness_rows(codes, prior);
  const MatrixXr bd = burstiness_rows(dup, prior);
  CHECK(bd.topRows(2) == b);
  CHECK(bd.bottomRows(2) == b);
}

TEST_CASE("significant_channels: argmax, ties, k range") {
  CHECK(significant_channels(vec({-1, -0.2, -3}), 1) == std::vector<Index>{1});
  CHECK(significant_channels(vec({-1, -1, -1, -2}), 2) == std::vector<Index>{0, 1});
  auto all = significant_channels(vec({3, 1, 2}), 3);
  CHECK(std::set<Index>(all.begin(), all.end()) == std::set<Index>{0, 1, 2});
  CHECK_THROWS(significant_channels(vec({1, 2}), 0));
  CHECK_THROWS(significant_channels(vec({1, 2}), 3));

  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    VectorXr v(12);
    // coarse values force frequent ties
    for (Index i = 0; i < 12; ++i) v(i) = double(rng() % 4);
    const Index k = 1 + static_cast<Index>(rng() % 12);
    const auto got = significant_channels(v, k);
    const auto want = oracle::top_k(std::vector<double>(v.data(), v.data() + 12), std::size_t(k));
    CHECK(std::vector<std::size_t>(got.begin(), got.end()) == want);
  }
}

TEST_CASE("activation_frequency: k = d' and the membership sum") {
  const auto m = init_model(4, 10, 3);
  const HiddenStateSet set{testing::gaussian(37, 4, 4)};
  const VectorXr prior = mean_activation(m, set);
  CHECK(activation_frequency(m, set, prior, 10) == VectorXr::Ones(10));
  for (Index k : {1, 3, 7}) {
    const VectorXr f = activation_frequency(m, set, prior, k);
    CHECK(f.minCoeff() >= 0);
    CHECK(f.maxCoeff() <= 1);
    CHECK(f.sum() * 37 == doctest::Approx(double(k * 37)).epsilon(1e-12));
    const auto counts = top_k_counts(burstiness_rows(encode_batch(m, set.rows), prior), k);
    std::int64_t total = 0;
    for (auto c : counts) total += c;
    CHECK(total == k * 37);
  }
  CHECK_THROWS(activation_frequency(m, HiddenStateSet{MatrixXr(0, 4)}, prior, 1));
}

TEST_CASE("dense_fraction counts channels strictly above the threshold") {
  CHECK(dense_fraction(vec({0.1, 0.5, 0.51, 0.9})) == 0.5);
  CHECK(dense_fraction(vec({0.0, 0.2})) == 0.0);
}

TEST_CASE("rescale_activations: standardization, constant channels, idempotence") {
  MatrixXr a = testing::gaussian(50, 4, 5, 3.0);
  a.col(2).setConstant(7);
  const MatrixXr r = rescale_activations(a);
  for (Index j = 0; j < 4; ++j) {
    const double mean = r.col(j).mean();
    const double sd = std::sqrt((r.col(j).array() - mean).square().mean());
    CHECK(std::abs(mean) < 1e-12);
    CHECK((std::abs(sd - 1) < 1e-12 || std::abs(sd) < 1e-12));
  }
  CHECK(r.col(2).isZero(0));
  CHECK((rescale_activations(r) - r).cwiseAbs().maxCoeff() < 1e-12);
  CHECK_THROWS(rescale_activations(MatrixXr::Ones(1, 3)));
}

TEST_CASE("histogram CSV") {
  testing::TempDir dir("feat");
  write_histogram_csv(vec({0.25, 1}), dir / "h.csv");
  std::ifstream in(dir / "h.csv");
  std::string a, b, c;
  std::getline(in, a);
  std::getline(in, b);
  std::getline(in, c);
  CHECK(a == "channel,frequency");
  CHECK(b == "0,0.25");
  CHECK(c == "1,1");
}
