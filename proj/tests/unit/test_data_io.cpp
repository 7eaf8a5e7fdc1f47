#include "bae/data_io.hpp"
#include "bae/detail/bytes.hpp"
#include "helpers.hpp"

#include <doctest.h>

#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <random>

using namespace bae;

namespace {

void write_raw(const std::filesystem::path& p, const detail::ByteWriter& w) {
  std::ofstream out(p, std::ios::binary);
  out.write(w.bytes().data(), static_cast<std::streamsize>(w.bytes().size()));
}

Checkpoint small_checkpoint(std::uint64_t seed) {
  Checkpoint c;
  c.model = init_model(3, 5, seed);
  c.model.bias << 0.125, -1.0 / 3.0, 7.5;
  c.mean_activation = VectorXr::LinSpaced(5, 0.0, 1.0);
  c.config = {{"kind", "bae"}, {"note", "x"}};
  return c;
}

}  // namespace

TEST_CASE("dataset: direct decode of a hand-written file") {
  testing::TempDir dir("io");
  detail::ByteWriter w;
  w.put_bytes("BAEH");
  w.put(std::uint32_t{1});
  w.put(std::uint64_t{1});
  w.put(std::uint32_t{2});
  w.put(1.0f);
  w.put(-2.0f);
  write_raw(dir / "a.baeh", w);
  const auto set = load_dataset(dir / "a.baeh");
  REQUIRE(set.n() == 1);
  REQUIRE(set.d() == 2);
  CHECK(set.rows(0, 0) == 1.0);
  CHECK(set.rows(0, 1) == -2.0);
}

TEST_CASE("dataset: truncated and oversized payloads are rejected") {
  testing::TempDir dir("io");
  detail::ByteWriter w;
  w.put_bytes("BAEH");
  w.put(std::uint32_t{1});
  w.put(std::uint64_t{2});
  w.put(std::uint32_t{3});
  for (int i = 0; i < 5; ++i) w.put(float(i));
  write_raw(dir / "short.baeh", w);
  CHECK_THROWS_AS(load_dataset(dir / "short.baeh"), FormatError);
  w.put(5.0f);
  w.put(6.0f);
  write_raw(dir / "long.baeh", w);
  CHECK_THROWS_AS(load_dataset(dir / "long.baeh"), FormatError);
}

TEST_CASE("dataset: bad magic, bad version and non-finite payloads") {
  testing::TempDir dir("io");
  detail::ByteWriter w;
  w.put_bytes("BAEX");
  w.put(std::uint32_t{1});
  w.put(std::uint64_t{1});
  w.put(std::uint32_t{1});
  w.put(0.0f);
  write_raw(dir / "magic.baeh", w);
  CHECK_THROWS_AS(load_dataset(dir / "magic.baeh"), FormatError);

  detail::ByteWriter v;
  v.put_bytes("BAEH");
  v.put(std::uint32_t{9});
  v.put(std::uint64_t{1});
  v.put(std::uint32_t{1});
  v.put(0.0f);
  write_raw(dir / "ver.baeh", v);
  CHECK_THROWS_AS(load_dataset(dir / "ver.baeh"), FormatError);

  detail::ByteWriter nf;
  nf.put_bytes("BAEH");
  nf.put(std::uint32_t{1});
  nf.put(std::uint64_t{1});
  nf.put(std::uint32_t{2});
  nf.put(0.0f);
  nf.put(std::numeric_limits<float>::quiet_NaN());
  write_raw(dir / "nan.baeh", nf);
  try {
    load_dataset(dir / "nan.baeh");
    FAIL("expected rejection");
  } catch (const FormatError& e) {
    CHECK(std::string(e.what()).find("row 0, column 1") != std::string::npos);
  }
}

TEST_CASE("dataset: file size is header plus 4 bytes per entry") {
  testing::TempDir dir("io");
  HiddenStateSet s{testing::gaussian(7, 3, 1)};
  save_dataset(s, dir / "s.baeh");
  CHECK(std::filesystem::file_size(dir / "s.baeh") == kDatasetHeaderBytes + 4 * 7 * 3);
}

TEST_CASE("dataset: invalid sets are rejected before writing") {
  testing::TempDir dir("io");
  CHECK_THROWS(save_dataset(HiddenStateSet{MatrixXr(0, 3)}, dir / "e.baeh"));
  MatrixXr bad = MatrixXr::Zero(2, 2);
  bad(1, 0) = std::nan("");
  CHECK_THROWS(save_dataset(HiddenStateSet{bad}, dir / "n.baeh"));
  CHECK_FALSE(std::filesystem::exists(dir / "e.baeh"));
  CHECK_FALSE(std::filesystem::exists(dir / "n.baeh"));
}

TEST_CASE("dataset round-trip is exact at 32-bit precision (property)") {
  testing::TempDir dir("io");
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    const Index n = 1 + static_cast<Index>(rng() % 40);
    const Index d = 1 + static_cast<Index>(rng() % 12);
    MatrixXr m = testing::gaussian(n, d, rng(), 100.0);
    HiddenStateSet s{m};
    save_dataset(s, dir / "p.baeh");
    const auto back = load_dataset(dir / "p.baeh");
    REQUIRE(back.n() == n);
    REQUIRE(back.d() == d);
    const MatrixXr expect = m.cast<float>().cast<double>();
    CHECK(back.rows == expect);
  }
}

TEST_CASE("paired round-trip with differing widths") {
  testing::TempDir dir("io");
  PairedStateSet p{{testing::gaussian(4, 3, 2)}, {testing::gaussian(4, 5, 3)}};
  save_paired(p, dir / "p.baep");
  const auto back = load_paired(dir / "p.baep");
  CHECK(back.inputs.rows == p.inputs.rows.cast<float>().cast<double>());
  CHECK(back.targets.rows == p.targets.rows.cast<float>().cast<double>());
  PairedStateSet bad{{testing::gaussian(4, 3, 2)}, {testing::gaussian(3, 3, 3)}};
  CHECK_THROWS(save_paired(bad, dir / "bad.baep"));
}

TEST_CASE("checkpoint round-trip is bitwise exact (property)") {
  testing::TempDir dir("io");
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Checkpoint c = small_checkpoint(seed);
    save_checkpoint(c, dir / "c.baec");
    const Checkpoint back = load_checkpoint(dir / "c.baec");
    CHECK(back.model == c.model);
    CHECK(back.mean_activation == c.mean_activation);
    CHECK(back.config == c.config);
  }
}

TEST_CASE("checkpoint: out-of-range mean activation is rejected on load") {
  testing::TempDir dir("io");
  Checkpoint c = small_checkpoint(1);
  save_checkpoint(c, dir / "c.baec");
  // Patch the first mean-activation double in place.
  auto bytes = detail::read_file(dir / "c.baec");
  const std::size_t offset = 4 + 4 + 4 + 4 + sizeof(double) * (3 * 5 * 2 + 3);
  const double bad = 1.5;
  std::memcpy(bytes.data() + offset, &bad, sizeof bad);
  detail::write_file(dir / "c.baec", bytes);
  CHECK_THROWS_AS(load_checkpoint(dir / "c.baec"), FormatError);
  c.mean_activation(0) = 1.5;
  CHECK_THROWS(save_checkpoint(c, dir / "d.baec"));
}

TEST_CASE("checkpoint: wrong magic and truncated payload") {
  testing::TempDir dir("io");
  save_checkpoint(small_checkpoint(2), dir / "c.baec");
  auto bytes = detail::read_file(dir / "c.baec");
  auto wrong = bytes;
  wrong[3] = 'X';
  detail::write_file(dir / "w.baec", wrong);
  CHECK_THROWS_AS(load_checkpoint(dir / "w.baec"), FormatError);
  bytes.resize(bytes.size() - 3);
  detail::write_file(dir / "t.baec", bytes);
  CHECK_THROWS_AS(load_checkpoint(dir / "t.baec"), FormatError);
}

TEST_CASE("trace CSV: one row per step, 9 significant digits") {
  testing::TempDir dir("io");
  TrainTrace t{{0, 1.0 / 3.0, 2.5, 0.0}, {1, 0.123456789123, 1e-9, 3.0}, {2, 7.0, 0.0, 1.0}};
  write_trace(t, dir / "t.csv");
  std::ifstream in(dir / "t.csv");
  std::string line;
  int lines = 0;
  std::vector<std::string> all;
  while (std::getline(in, line)) {
    ++lines;
    all.push_back(line);
  }
  CHECK(lines == 4);
  CHECK(all[0] == "step,recon_loss,margin_entropy,cov_penalty");
  CHECK(all[1] == "0,0.333333333,2.5,0");
  CHECK(all[2] == "1,0.123456789,1e-09,3");
  const auto back = read_trace(dir / "t.csv");
  REQUIRE(back.size() == 3);
  CHECK(back[0].recon_loss == doctest::Approx(1.0 / 3.0).epsilon(1e-9));
  CHECK(back[2].step == 2);
  CHECK_THROWS(write_trace({}, dir / "e.csv"));
}
