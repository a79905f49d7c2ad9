#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include "egonoise/error.hpp"
#include "egonoise/stft.hpp"

namespace egonoise::io {

// Binary PGM (P5) of one channel's log-magnitude spectrogram. Columns are
// frames left to right, rows are bins with the highest bin on top. Pixel value
// 255 * (dB + 80) / 80, dB relative to the peak magnitude clamped to [-80, 0].
inline void write_spectrogram_pgm(const std::string& path, const Spectrogram& spec,
                                  std::size_t channel = 0) {
  if (channel >= spec.channel_count()) throw InvalidArgument("spectrogram channel out of range");
  const std::size_t width = spec.frame_count();
  const std::size_t height = spec.bin_count();
  double peak = 0.0;
  for (std::size_t l = 0; l < width; ++l)
    for (const auto& v : spec.frame(channel, l)) peak = std::max(peak, std::abs(v));
  std::vector<unsigned char> pixels(width * height, 0);
  if (peak > 0.0)
    for (std::size_t l = 0; l < width; ++l)
      for (std::size_t k = 0; k < height; ++k) {
        const double mag = std::abs(spec(channel, l, k));
        const double db = mag > 0.0 ? std::clamp(20.0 * std::log10(mag / peak), -80.0, 0.0) : -80.0;
        pixels[(height - 1 - k) * width + l] =
            static_cast<unsigned char>(std::lround(255.0 * (db + 80.0) / 80.0));
      }
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot create '" + path + "'");
  os << "P5\n" << width << " " << height << "\n255\n";
  os.write(reinterpret_cast<const char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
  if (!os) throw IoError("failed writing '" + path + "'");
}

}  // namespace egonoise::io
