#pragma once

#include <cstdint>
#include <vector>

namespace bae {

struct TraceRecord {
  std::uint64_t step = 0;
  double recon_loss = 0;
  double margin_entropy = 0;
  double cov_penalty = 0;

  bool operator==(const TraceRecord&) const = default;
};

/// One record per optimizer step, steps strictly increasing.
using TrainTrace = std::vector<TraceRecord>;

}  // namespace bae
