#include "bae/entropy_probe.hpp"
#include "bae/synthetic.hpp"
#include "bae/trainer.hpp"
#include "helpers.hpp"

#include <doctest.h>

#include <fstream>

using namespace bae;

TEST_CASE("mean_activation: single sample and hand averages") {
  const auto m = init_model(3, 6, 1);
  MatrixXr one = testing::gaussian(1, 3, 2);
  CHECK(mean_activation(m, HiddenStateSet{one}) == encode(m, VectorXr(one.row(0).transpose())));

  BaeModel<double> hand{MatrixXr::Zero(1, 2), MatrixXr::Zero(2, 1), VectorXr::Zero(1)};
  hand.w_in << 1, -1;
  MatrixXr rows(2, 1);
  rows << 1, -1;  // codes [1,0] and [0,1]
  VectorXr expect(2);
  expect << 0.5, 0.5;
  CHECK(mean_activation(hand, HiddenStateSet{rows}) == expect);
  hand.w_in << 1, -10;
  rows << 1, 0.5;  // codes [1,0] and [1,0]
  expect << 1, 0;
  CHECK(mean_activation(hand, HiddenStateSet{rows}) == expect);
  CHECK_THROWS(mean_activation(hand, HiddenStateSet{MatrixXr(0, 1)}));
}

TEST_CASE("estimate: bounds, identical vectors and row permutation") {
  const auto m = init_model(4, 12, 3);
  MatrixXr same(10, 4);
  same.rowwise() = testing::gaussian(1, 4, 4).row(0);
  CHECK(estimate_set_entropy(m, HiddenStateSet{same}) == 0.0);

  const MatrixXr x = testing::gaussian(40, 4, 5);
  const double h = estimate_set_entropy(m, HiddenStateSet{x});
  CHECK(h >= 0);
  CHECK(h <= 12);
  CHECK(estimate_set_entropy(m, HiddenStateSet{x}, Estimator::literal_eq4) <= 12 / std::exp(1.0) / std::log(2.0) + 1e-12);
  const MatrixXr reversed = x.colwise().reverse();
  CHECK(estimate_set_entropy(m, HiddenStateSet{reversed}) == doctest::Approx(h).epsilon(1e-15));
}

TEST_CASE("sweep: one row per file, values match direct train+evaluate") {
  testing::TempDir dir("sweep");
  const auto suite = benchmark_suite(6, {0, 1, 3}, 40, {1, 2, 3});
  for (std::size_t i = 0; i < suite.size(); ++i)
    save_synthetic(suite[i], dir / ("set" + std::to_string(i) + ".baeh"));
  TrainConfig c;
  c.epochs = 3;
  c.warmup_epochs = 1;
  c.batch_size = 16;
  c.d_hidden = 8;
  const auto rows = sweep_entropy(dir.path(), c, 5);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].dataset == "set0.baeh");
  const auto direct = train(c, load_dataset(dir / "set1.baeh"), 5);
  const auto metrics = evaluate(direct.model, load_dataset(dir / "set1.baeh"));
  CHECK(rows[1].final_recon_loss == metrics.recon_loss);
  CHECK(rows[1].entropy_bits_bernoulli == metrics.entropy_bits_bernoulli);
  CHECK(rows[1].entropy_bits_eq4 == metrics.entropy_bits_eq4);

  const auto parallel = sweep_entropy(dir.path(), c, 5, 3);
  for (std::size_t i = 0; i < 3; ++i)
    CHECK(parallel[i].entropy_bits_bernoulli == rows[i].entropy_bits_bernoulli);

  write_sweep_csv(rows, dir / "out.csv");
  std::ifstream in(dir / "out.csv");
  std::string line;
  int count = 0;
  while (std::getline(in, line)) ++count;
  CHECK(count == 4);
}

TEST_CASE("sweep: empty directory and unreadable files") {
  testing::TempDir dir("sweep");
  TrainConfig c;
  c.epochs = 1;
  c.warmup_epochs = 0;
  c.d_hidden = 4;
  const auto none = sweep_entropy(dir.path(), c, 1);
  CHECK(none.empty());
  write_sweep_csv(none, dir / "empty.csv");
  std::ifstream e(dir / "empty.csv");
  std::string header;
  std::getline(e, header);
  CHECK(header == "dataset,final_recon_loss,entropy_bits_bernoulli,entropy_bits_eq4");

  std::ofstream(dir / "broken.baeh") << "not a dataset";
  save_dataset(HiddenStateSet{testing::gaussian(10, 3, 1)}, dir / "ok.baeh");
  const auto rows = sweep_entropy(dir.path(), c, 1);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].error.has_value());
  CHECK_FALSE(rows[1].error.has_value());
}
