#pragma once

// Index-flip codec: a vector is stored as the channels whose binary code
// disagrees "burstily" with the prior h1-bar; decoding flips those bits of
// round(h1-bar) and runs the decoder.

#include "bae/data_io.hpp"
#include "bae/model.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <vector>

namespace bae {

inline constexpr std::uint32_t kCompressedVersion = 1;
inline constexpr int kFloatBits = 32;

struct CompressedVector {
  std::vector<std::uint32_t> indices;  // strictly increasing, < d'
  double threshold = -1.0;
};

struct CompressedSet {
  std::uint32_t d_hidden = 0;
  double threshold = -1.0;
  std::vector<std::vector<std::uint32_t>> samples;

  std::uint64_t total_indices() const;
};

/// Throws unless -1 <= B <= 0.
void check_threshold(double threshold);

/// round(prior) with ties (exactly 0.5) going to 1.
VectorXr prior_code(const VectorXr& prior);

/// Channels whose burstiness against `prior` exceeds `threshold`.
CompressedVector compress_code(const VectorXr& code, const VectorXr& prior, double threshold);
CompressedVector compress(const BaeModel<double>& model, const VectorXr& prior,
                          const VectorXr& h0, double threshold);

/// round(prior) with the stored indices flipped.
VectorXr reconstruct_code(const VectorXr& prior, const CompressedVector& cv);
VectorXr decompress(const BaeModel<double>& model, const VectorXr& prior,
                    const CompressedVector& cv);

CompressedSet compress_set(const BaeModel<double>& model, const VectorXr& prior,
                           const HiddenStateSet& set, double threshold);
MatrixXr decompress_set(const BaeModel<double>& model, const VectorXr& prior,
                        const CompressedSet& set);

/// ceil(log2 d'), with a minimum of one bit.
int index_bits(Index d_hidden);

struct CompressionReport {
  Index n = 0;
  Index d = 0;
  Index d_hidden = 0;
  double threshold = -1.0;
  std::uint64_t bits_before = 0;  ///< 32 * d * n
  std::uint64_t bits_after = 0;   ///< ceil(log2 d') * stored indices
  double rate = 0;                ///< bits_after / bits_before
  double mean_flips = 0;
  double mse = 0;
  double cosine = 0;             ///< mean over samples where both norms are non-zero
  Index cosine_skipped = 0;      ///< samples excluded from the cosine mean

  nlohmann::json to_json() const;
};

CompressionReport compression_metrics(const BaeModel<double>& model, const VectorXr& prior,
                                      const HiddenStateSet& set, double threshold);
/// Metrics for an already compressed set against its originals.
CompressionReport compression_metrics(const BaeModel<double>& model, const VectorXr& prior,
                                      const HiddenStateSet& set, const CompressedSet& packed);

// "BAEZ" u32 version, u32 d', f64 B, u64 n, then per sample u32 count + count u32 indices.
void save_compressed(const CompressedSet& set, const std::filesystem::path& path);
CompressedSet load_compressed(const std::filesystem::path& path);

}  // namespace bae
