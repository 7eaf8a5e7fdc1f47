#pragma once

// On-disk containers. All multi-byte fields are little-endian.
//
//   dataset     "BAEH" u32 version, u64 n, u32 d, n*d f32 row-major
//   paired      "BAEP" u32 version, u64 n, u32 d_in, u32 d_out, inputs f32, targets f32
//   checkpoint  "BAEC" u32 version, u32 d, u32 d', W_in, W_out, b, mean activation (f64),
//               u64 byte length + UTF-8 JSON config
//   trace       CSV: step,recon_loss,margin_entropy,cov_penalty

#include "bae/model.hpp"
#include "bae/trace.hpp"
#include "bae/types.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>

namespace bae {

inline constexpr std::uint32_t kDatasetVersion = 1;
inline constexpr std::uint32_t kPairedVersion = 1;
inline constexpr std::uint32_t kCheckpointVersion = 1;
inline constexpr std::size_t kDatasetHeaderBytes = 20;

/// n x d real vectors, one per row.
struct HiddenStateSet {
  MatrixXr rows;

  Index n() const { return rows.rows(); }
  Index d() const { return rows.cols(); }

  /// Throws on n < 1, d < 1 or any non-finite entry (reporting row and column).
  void validate() const;
};

/// Aligned (input, target) rows; used by the transcoder baseline.
struct PairedStateSet {
  HiddenStateSet inputs;
  HiddenStateSet targets;

  Index n() const { return inputs.n(); }
  void validate() const;
};

struct Checkpoint {
  BaeModel<double> model;
  VectorXr mean_activation;  // length d', entries in [0,1]
  nlohmann::json config = nlohmann::json::object();
  std::uint32_t version = kCheckpointVersion;

  void validate() const;
};

HiddenStateSet load_dataset(const std::filesystem::path& path);
void save_dataset(const HiddenStateSet& set, const std::filesystem::path& path);

PairedStateSet load_paired(const std::filesystem::path& path);
void save_paired(const PairedStateSet& set, const std::filesystem::path& path);

Checkpoint load_checkpoint(const std::filesystem::path& path);
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);

void write_trace(const TrainTrace& trace, const std::filesystem::path& path);
TrainTrace read_trace(const std::filesystem::path& path);

}  // namespace bae
