#pragma once

#include <cmath>
#include <cstddef>
#include <optional>

#include "egonoise/error.hpp"
#include "egonoise/stft.hpp"

namespace egonoise {

struct EnhancerConfig {
  std::size_t channels = 16;
  double sample_rate = 32000.0;
  std::size_t frame_size = 2048;
  std::size_t hop = 256;
  double segment_length = 0.5;  // seconds
  std::size_t pca_dims = 32;
  double loading = 1e-3;
  // Fixed reference microphone; empty selects it per segment from the
  // estimated SNRs.
  std::optional<std::size_t> fixed_reference;

  std::size_t segment_samples() const {
    return static_cast<std::size_t>(std::llround(segment_length * sample_rate));
  }
  std::size_t bin_count() const noexcept { return frame_size / 2 + 1; }

  void validate() const {
    check_frame_geometry(frame_size, hop);
    if (channels == 0) throw InvalidArgument("channel count must be positive");
    if (!(sample_rate > 0.0)) throw InvalidArgument("sample rate must be positive");
    if (!(segment_length > 0.0) || segment_samples() < frame_size)
      throw InvalidArgument("segment must hold at least one frame (" +
                            std::to_string(frame_size) + " samples)");
    if (pca_dims == 0) throw InvalidArgument("PCA dimension must be positive");
    if (!(loading >= 0.0)) throw InvalidArgument("loading must be non-negative");
    if (fixed_reference && *fixed_reference >= channels)
      throw InvalidArgument("fixed reference channel out of range");
  }
};

}  // namespace egonoise
