#include "bae/compression.hpp"

#include "bae/detail/bytes.hpp"
#include "bae/features.hpp"

#include <bit>
#include <cmath>

namespace bae {

std::uint64_t CompressedSet::total_indices() const {
  std::uint64_t total = 0;
  for (const auto& s : samples) total += s.size();
  return total;
}

void check_threshold(double threshold) {
  if (!(threshold >= -1.0 && threshold <= 0.0))
    throw std::invalid_argument("threshold must lie in [-1, 0] (log2 units)");
}

VectorXr prior_code(const VectorXr& prior) {
  return prior.unaryExpr([](double p) { return p >= 0.5 ? 1.0 : 0.0; });
}

CompressedVector compress_code(const VectorXr& code, const VectorXr& prior, double threshold) {
  check_threshold(threshold);
  const VectorXr beta = burstiness(code, prior);
  CompressedVector cv;
  cv.threshold = threshold;
  for (Index j = 0; j < beta.size(); ++j)
    if (beta(j) > threshold) cv.indices.push_back(static_cast<std::uint32_t>(j));
  return cv;
}

CompressedVector compress(const BaeModel<double>& model, const VectorXr& prior,
                          const VectorXr& h0, double threshold) {
  require_dims(prior.size() == model.hidden_dim(), "prior length vs hidden dim");
  return compress_code(encode(model, h0), prior, threshold);
}

VectorXr reconstruct_code(const VectorXr& prior, const CompressedVector& cv) {
  VectorXr code = prior_code(prior);
  std::int64_t last = -1;
  for (const auto i : cv.indices) {
    if (i >= static_cast<std::uint64_t>(code.size()))
      throw std::out_of_range("flip index " + std::to_string(i) + " >= d' = " +
                              std::to_string(code.size()));
    if (static_cast<std::int64_t>(i) <= last)
      throw std::invalid_argument("flip indices must be strictly increasing");
    last = i;
    code(i) = 1.0 - code(i);
  }
  return code;
}

VectorXr decompress(const BaeModel<double>& model, const VectorXr& prior,
                    const CompressedVector& cv) {
  require_dims(prior.size() == model.hidden_dim(), "prior length vs hidden dim");
  return decode_batch(model, reconstruct_code(prior, cv).transpose()).row(0).transpose();
}

CompressedSet compress_set(const BaeModel<double>& model, const VectorXr& prior,
                           const HiddenStateSet& set, double threshold) {
  check_threshold(threshold);
  require_dims(prior.size() == model.hidden_dim(), "prior length vs hidden dim");
  CompressedSet out;
  out.d_hidden = static_cast<std::uint32_t>(model.hidden_dim());
  out.threshold = threshold;
  out.samples.reserve(static_cast<std::size_t>(set.n()));
  constexpr Index kChunk = 4096;
  for (Index start = 0; start < set.n(); start += kChunk) {
    const Index rows = std::min(kChunk, set.n() - start);
    const MatrixXr codes = encode_batch(model, set.rows.middleRows(start, rows));
    for (Index i = 0; i < rows; ++i)
      out.samples.push_back(compress_code(codes.row(i).transpose(), prior, threshold).indices);
  }
  return out;
}

MatrixXr decompress_set(const BaeModel<double>& model, const VectorXr& prior,
                        const CompressedSet& set) {
  require_dims(set.d_hidden == static_cast<std::uint64_t>(model.hidden_dim()),
               "compressed d' vs model hidden dim");
  MatrixXr codes(static_cast<Index>(set.samples.size()), model.hidden_dim());
  for (std::size_t i = 0; i < set.samples.size(); ++i)
    codes.row(static_cast<Index>(i)) =
        reconstruct_code(prior, {set.samples[i], set.threshold}).transpose();
  return decode_batch(model, codes);
}

int index_bits(Index d_hidden) {
  if (d_hidden < 1) throw std::invalid_argument("index_bits: d' must be >= 1");
  const auto m = static_cast<std::uint64_t>(d_hidden);
  return std::max(1, static_cast<int>(std::bit_width(m - 1)));
}

nlohmann::json CompressionReport::to_json() const {
  return {{"n", n},
          {"d", d},
          {"d_hidden", d_hidden},
          {"threshold", threshold},
          {"bits_before", bits_before},
          {"bits_after", bits_after},
          {"rate", rate},
          {"mean_flips", mean_flips},
          {"mse", mse},
          {"cosine", cosine},
          {"cosine_skipped", cosine_skipped}};
}

CompressionReport compression_metrics(const BaeModel<double>& model, const VectorXr& prior,
                                      const HiddenStateSet& set, const CompressedSet& packed) {
  set.validate();
  require_dims(static_cast<Index>(packed.samples.size()) == set.n(),
               "compressed sample count vs set size");
  const MatrixXr recon = decompress_set(model, prior, packed);
  require_dims(recon.cols() == set.d(), "reconstruction width vs set width");

  CompressionReport r;
  r.n = set.n();
  r.d = set.d();
  r.d_hidden = model.hidden_dim();
  r.threshold = packed.threshold;
  r.bits_before = static_cast<std::uint64_t>(kFloatBits) * static_cast<std::uint64_t>(r.d) *
                  static_cast<std::uint64_t>(r.n);
  const std::uint64_t stored = packed.total_indices();
  r.bits_after = static_cast<std::uint64_t>(index_bits(r.d_hidden)) * stored;
  r.rate = static_cast<double>(r.bits_after) / static_cast<double>(r.bits_before);
  r.mean_flips = static_cast<double>(stored) / static_cast<double>(r.n);
  r.mse = (recon - set.rows).squaredNorm() / static_cast<double>(recon.size());

  double cos_sum = 0;
  Index counted = 0;
  for (Index i = 0; i < r.n; ++i) {
    const double a = set.rows.row(i).norm();
    const double b = recon.row(i).norm();
    if (a == 0 || b == 0) {
      ++r.cosine_skipped;
      continue;
    }
    cos_sum += std::clamp(set.rows.row(i).dot(recon.row(i)) / (a * b), -1.0, 1.0);
    ++counted;
  }
  r.cosine = counted > 0 ? cos_sum / static_cast<double>(counted) : 0.0;
  return r;
}

CompressionReport compression_metrics(const BaeModel<double>& model, const VectorXr& prior,
                                      const HiddenStateSet& set, double threshold) {
  return compression_metrics(model, prior, set, compress_set(model, prior, set, threshold));
}

void save_compressed(const CompressedSet& set, const std::filesystem::path& path) {
  check_threshold(set.threshold);
  detail::ByteWriter out;
  out.put_bytes("BAEZ");
  out.put(kCompressedVersion);
  out.put(set.d_hidden);
  out.put(set.threshold);
  out.put(static_cast<std::uint64_t>(set.samples.size()));
  for (const auto& s : set.samples) {
    out.put(static_cast<std::uint32_t>(s.size()));
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (s[j] >= set.d_hidden) throw std::out_of_range("flip index >= d'");
      if (j > 0 && s[j] <= s[j - 1])
        throw std::invalid_argument("flip indices must be strictly increasing");
      out.put(s[j]);
    }
  }
  detail::write_file(path, out.bytes());
}

CompressedSet load_compressed(const std::filesystem::path& path) {
  const auto bytes = detail::read_file(path);
  detail::ByteReader in(bytes, path.string());
  detail::expect_header(in, "BAEZ", kCompressedVersion);
  CompressedSet set;
  set.d_hidden = in.get<std::uint32_t>();
  set.threshold = in.get<double>();
  try {
    check_threshold(set.threshold);
  } catch (const std::invalid_argument& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  const auto n = in.get<std::uint64_t>();
  // Every sample needs at least its count field.
  if (n > in.remaining() / sizeof(std::uint32_t))
    throw FormatError(path.string() + ": truncated payload");
  set.samples.resize(static_cast<std::size_t>(n));
  for (auto& s : set.samples) {
    const auto count = in.get<std::uint32_t>();
    if (count > set.d_hidden) throw FormatError(path.string() + ": sample count exceeds d'");
    s.resize(count);
    for (auto& i : s) {
      i = in.get<std::uint32_t>();
      if (i >= set.d_hidden) throw FormatError(path.string() + ": flip index out of range");
    }
    for (std::size_t k = 1; k < s.size(); ++k)
      if (s[k] <= s[k - 1]) throw FormatError(path.string() + ": indices not increasing");
  }
  if (in.remaining() != 0) throw FormatError(path.string() + ": trailing bytes after payload");
  return set;
}

}  // namespace bae
