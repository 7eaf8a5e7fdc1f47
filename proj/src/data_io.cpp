#include "bae/data_io.hpp"

#include "bae/detail/bytes.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <limits>
#include <sstream>

namespace bae {

namespace detail {

std::vector<char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string() + " for reading");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, const std::vector<char>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  out.flush();
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

void expect_header(ByteReader& in, std::string_view magic, std::uint32_t version) {
  if (in.remaining() < magic.size() + sizeof(std::uint32_t))
    throw FormatError(in.source() + ": file too short for header");
  const std::string got = in.get_bytes(magic.size());
  if (got != magic)
    throw FormatError(in.source() + ": bad magic (expected " + std::string(magic) +
                      ", version mismatch)");
  const auto v = in.get<std::uint32_t>();
  if (v != version)
    throw FormatError(in.source() + ": unsupported version " + std::to_string(v));
}

}  // namespace detail

namespace {

using detail::ByteReader;
using detail::ByteWriter;

void check_payload(const ByteReader& in, std::uint64_t expected_bytes) {
  if (in.remaining() < expected_bytes) throw FormatError(in.source() + ": truncated payload");
  if (in.remaining() > expected_bytes)
    throw FormatError(in.source() + ": payload longer than header declares");
}

void put_f32_block(ByteWriter& out, const MatrixXr& m) {
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) out.put(static_cast<float>(m(i, j)));
}

MatrixXr get_f32_block(ByteReader& in, Index rows, Index cols) {
  MatrixXr m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) {
      const float v = in.get<float>();
      if (!std::isfinite(v))
        throw FormatError(in.source() + ": non-finite entry at row " + std::to_string(i) +
                          ", column " + std::to_string(j));
      m(i, j) = v;
    }
  return m;
}

template <typename Derived>
void put_f64_block(ByteWriter& out, const Eigen::MatrixBase<Derived>& m) {
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) out.put(static_cast<double>(m(i, j)));
}

MatrixXr get_f64_block(ByteReader& in, Index rows, Index cols) {
  MatrixXr m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = in.get<double>();
  return m;
}

std::uint32_t checked_u32(Index v, const char* what) {
  if (v < 0 || static_cast<std::uint64_t>(v) > std::numeric_limits<std::uint32_t>::max())
    throw std::invalid_argument(std::string(what) + " does not fit in u32");
  return static_cast<std::uint32_t>(v);
}

}  // namespace

void HiddenStateSet::validate() const {
  if (n() < 1) throw std::invalid_argument("hidden state set must have n >= 1");
  if (d() < 1) throw std::invalid_argument("hidden state set must have d >= 1");
  for (Index i = 0; i < n(); ++i)
    for (Index j = 0; j < d(); ++j)
      if (!std::isfinite(rows(i, j)))
        throw std::invalid_argument("non-finite entry at row " + std::to_string(i) +
                                    ", column " + std::to_string(j));
}

void PairedStateSet::validate() const {
  inputs.validate();
  targets.validate();
  require_dims(inputs.n() == targets.n(), "paired set row counts differ");
}

void Checkpoint::validate() const {
  model.validate();
  require_dims(mean_activation.size() == model.hidden_dim(),
               "mean activation length vs hidden dim");
  for (Index i = 0; i < mean_activation.size(); ++i)
    if (!(mean_activation(i) >= 0.0 && mean_activation(i) <= 1.0))
      throw FormatError("mean activation entry " + std::to_string(i) + " outside [0,1]");
}

HiddenStateSet load_dataset(const std::filesystem::path& path) {
  const auto bytes = detail::read_file(path);
  ByteReader in(bytes, path.string());
  detail::expect_header(in, "BAEH", kDatasetVersion);
  const auto n = in.get<std::uint64_t>();
  const auto d = in.get<std::uint32_t>();
  if (n < 1 || d < 1) throw FormatError(path.string() + ": empty dataset header");
  check_payload(in, n * d * sizeof(float));
  return {get_f32_block(in, static_cast<Index>(n), static_cast<Index>(d))};
}

void save_dataset(const HiddenStateSet& set, const std::filesystem::path& path) {
  set.validate();
  ByteWriter out;
  out.put_bytes("BAEH");
  out.put(kDatasetVersion);
  out.put(static_cast<std::uint64_t>(set.n()));
  out.put(checked_u32(set.d(), "d"));
  put_f32_block(out, set.rows);
  detail::write_file(path, out.bytes());
}

PairedStateSet load_paired(const std::filesystem::path& path) {
  const auto bytes = detail::read_file(path);
  ByteReader in(bytes, path.string());
  detail::expect_header(in, "BAEP", kPairedVersion);
  const auto n = in.get<std::uint64_t>();
  const auto d_in = in.get<std::uint32_t>();
  const auto d_out = in.get<std::uint32_t>();
  if (n < 1 || d_in < 1 || d_out < 1) throw FormatError(path.string() + ": empty paired header");
  check_payload(in, n * (std::uint64_t{d_in} + d_out) * sizeof(float));
  PairedStateSet set;
  set.inputs.rows = get_f32_block(in, static_cast<Index>(n), d_in);
  set.targets.rows = get_f32_block(in, static_cast<Index>(n), d_out);
  return set;
}

void save_paired(const PairedStateSet& set, const std::filesystem::path& path) {
  set.validate();
  ByteWriter out;
  out.put_bytes("BAEP");
  out.put(kPairedVersion);
  out.put(static_cast<std::uint64_t>(set.n()));
  out.put(checked_u32(set.inputs.d(), "d_in"));
  out.put(checked_u32(set.targets.d(), "d_out"));
  put_f32_block(out, set.inputs.rows);
  put_f32_block(out, set.targets.rows);
  detail::write_file(path, out.bytes());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  const auto bytes = detail::read_file(path);
  ByteReader in(bytes, path.string());
  detail::expect_header(in, "BAEC", kCheckpointVersion);
  const auto d = in.get<std::uint32_t>();
  const auto dh = in.get<std::uint32_t>();
  if (d < 1 || dh < 1) throw FormatError(path.string() + ": empty checkpoint dimensions");
  const std::uint64_t params = 2ull * d * dh + d + dh;
  if (in.remaining() < params * sizeof(double) + sizeof(std::uint64_t))
    throw FormatError(path.string() + ": truncated payload");

  Checkpoint ckpt;
  ckpt.model.w_in = get_f64_block(in, d, dh);
  ckpt.model.w_out = get_f64_block(in, dh, d);
  ckpt.model.bias = get_f64_block(in, d, 1);
  ckpt.mean_activation = get_f64_block(in, dh, 1);
  const auto json_len = in.get<std::uint64_t>();
  check_payload(in, json_len);
  const std::string blob = in.get_bytes(json_len);
  try {
    ckpt.config = nlohmann::json::parse(blob);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": bad config blob: " + e.what());
  }
  try {
    ckpt.validate();
  } catch (const std::invalid_argument& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  ckpt.validate();
  if (ckpt.version != kCheckpointVersion)
    throw std::invalid_argument("cannot write checkpoint version " +
                                std::to_string(ckpt.version));
  ByteWriter out;
  out.put_bytes("BAEC");
  out.put(kCheckpointVersion);
  out.put(checked_u32(ckpt.model.input_dim(), "d"));
  out.put(checked_u32(ckpt.model.hidden_dim(), "d'"));
  put_f64_block(out, ckpt.model.w_in);
  put_f64_block(out, ckpt.model.w_out);
  put_f64_block(out, ckpt.model.bias);
  put_f64_block(out, ckpt.mean_activation);
  const std::string blob = ckpt.config.dump();
  out.put(static_cast<std::uint64_t>(blob.size()));
  out.put_bytes(blob);
  detail::write_file(path, out.bytes());
}

void write_trace(const TrainTrace& trace, const std::filesystem::path& path) {
  if (trace.empty()) throw std::invalid_argument("write_trace: empty trace");
  std::string text = "step,recon_loss,margin_entropy,cov_penalty\n";
  char line[160];
  for (const auto& r : trace) {
    std::snprintf(line, sizeof line, "%llu,%.9g,%.9g,%.9g\n",
                  static_cast<unsigned long long>(r.step), r.recon_loss, r.margin_entropy,
                  r.cov_penalty);
    text += line;
  }
  detail::write_file(path, {text.begin(), text.end()});
}

TrainTrace read_trace(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string() + " for reading");
  std::string line;
  if (!std::getline(in, line) || line != "step,recon_loss,margin_entropy,cov_penalty")
    throw FormatError(path.string() + ": missing trace header");
  TrainTrace trace;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    TraceRecord r;
    char c1, c2, c3;
    if (!(row >> r.step >> c1 >> r.recon_loss >> c2 >> r.margin_entropy >> c3 >>
          r.cov_penalty) ||
        c1 != ',' || c2 != ',' || c3 != ',')
      throw FormatError(path.string() + ": malformed trace row: " + line);
    trace.push_back(r);
  }
  return trace;
}

}  // namespace bae
