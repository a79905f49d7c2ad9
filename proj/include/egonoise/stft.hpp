#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

#include "egonoise/audio.hpp"
#include "egonoise/error.hpp"
#include "egonoise/fft.hpp"

namespace egonoise {

using Complex = std::complex<double>;

// Periodic Hann window: w[n] = 0.5 - 0.5 cos(2 pi n / N).
inline std::vector<double> hann_window(std::size_t size) {
  std::vector<double> w(size);
  for (std::size_t n = 0; n < size; ++n)
    w[n] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(n) /
                                static_cast<double>(size));
  return w;
}

inline void check_frame_geometry(std::size_t frame_size, std::size_t hop) {
  if (frame_size < 2 || !std::has_single_bit(frame_size))
    throw InvalidArgument("frame size must be a power of two");
  if (hop == 0 || hop > frame_size) throw InvalidArgument("hop must be in [1, frame_size]");
  if (frame_size % hop != 0) throw InvalidArgument("hop must divide the frame size");
}

// One-sided complex STFT frames, indexed [channel][frame][bin].
class Spectrogram {
 public:
  Spectrogram() = default;
  Spectrogram(std::size_t channels, std::size_t frames, std::size_t frame_size, std::size_t hop,
              double sample_rate = 32000.0)
      : channels_(channels), frames_(frames), frame_size_(frame_size), hop_(hop),
        sample_rate_(sample_rate), data_(channels * frames * (frame_size / 2 + 1)) {
    check_frame_geometry(frame_size, hop);
    if (channels == 0) throw InvalidArgument("channel count must be positive");
  }

  std::size_t channel_count() const noexcept { return channels_; }
  std::size_t frame_count() const noexcept { return frames_; }
  std::size_t bin_count() const noexcept { return frame_size_ / 2 + 1; }
  std::size_t frame_size() const noexcept { return frame_size_; }
  std::size_t hop() const noexcept { return hop_; }
  double sample_rate() const noexcept { return sample_rate_; }

  Complex& operator()(std::size_t m, std::size_t l, std::size_t k) {
    return data_[(m * frames_ + l) * bin_count() + k];
  }
  const Complex& operator()(std::size_t m, std::size_t l, std::size_t k) const {
    return data_[(m * frames_ + l) * bin_count() + k];
  }

  std::span<Complex> frame(std::size_t m, std::size_t l) {
    return {data_.data() + (m * frames_ + l) * bin_count(), bin_count()};
  }
  std::span<const Complex> frame(std::size_t m, std::size_t l) const {
    return {data_.data() + (m * frames_ + l) * bin_count(), bin_count()};
  }

  const std::vector<Complex>& data() const noexcept { return data_; }
  std::vector<Complex>& data() noexcept { return data_; }

  bool operator==(const Spectrogram&) const = default;

 private:
  std::size_t channels_ = 1;
  std::size_t frames_ = 0;
  std::size_t frame_size_ = 2;
  std::size_t hop_ = 1;
  double sample_rate_ = 32000.0;
  std::vector<Complex> data_;
};

// Streaming analysis. Frame l covers input samples [l*hop, l*hop + N); a
// frame is emitted as soon as its full support has been pushed, so the frame
// grid does not depend on how the input is chunked.
class StftAnalyzer {
 public:
  StftAnalyzer(std::size_t channels, std::size_t frame_size, std::size_t hop,
               double sample_rate = 32000.0)
      : channels_(channels), frame_size_(frame_size), hop_(hop), sample_rate_(sample_rate),
        window_(hann_window(frame_size)), fft_(frame_size), backlog_(channels),
        scratch_(frame_size) {
    check_frame_geometry(frame_size, hop);
    if (channels == 0) throw InvalidArgument("channel count must be positive");
  }

  std::size_t channel_count() const noexcept { return channels_; }
  std::size_t frame_size() const noexcept { return frame_size_; }
  std::size_t hop() const noexcept { return hop_; }
  std::size_t backlog() const noexcept { return backlog_.front().size(); }
  std::size_t frames_emitted() const noexcept { return emitted_; }

  Spectrogram push(const MultichannelAudio& chunk) {
    if (chunk.channel_count() != channels_)
      throw ShapeError("chunk has " + std::to_string(chunk.channel_count()) +
                       " channels, stream expects " + std::to_string(channels_));
    for (std::size_t m = 0; m < channels_; ++m) {
      auto src = chunk.channel(m);
      backlog_[m].insert(backlog_[m].end(), src.begin(), src.end());
    }
    const std::size_t avail = backlog_.front().size();
    const std::size_t frames = avail < frame_size_ ? 0 : (avail - frame_size_) / hop_ + 1;
    Spectrogram out(channels_, frames, frame_size_, hop_, sample_rate_);
    for (std::size_t m = 0; m < channels_; ++m) {
      for (std::size_t l = 0; l < frames; ++l) {
        const double* x = backlog_[m].data() + l * hop_;
        for (std::size_t n = 0; n < frame_size_; ++n) scratch_[n] = x[n] * window_[n];
        fft_.forward(scratch_, out.frame(m, l));
      }
      backlog_[m].erase(backlog_[m].begin(),
                        backlog_[m].begin() + static_cast<std::ptrdiff_t>(frames * hop_));
    }
    emitted_ += frames;
    return out;
  }

 private:
  std::size_t channels_;
  std::size_t frame_size_;
  std::size_t hop_;
  double sample_rate_;
  std::vector<double> window_;
  RealFft fft_;
  std::vector<std::vector<double>> backlog_;
  std::vector<double> scratch_;
  std::size_t emitted_ = 0;
};

// Streaming weighted overlap-add synthesis with the Hann window applied a
// second time and division by the accumulated squared window. Output sample n
// is time-aligned with analysis input sample n; after frame l is pushed the
// samples before (l + 1) * hop are final and are emitted. The remaining
// N - hop samples stay in the overlap tail until flush().
class StftSynthesizer {
 public:
  StftSynthesizer(std::size_t channels, std::size_t frame_size, std::size_t hop,
                  double sample_rate = 32000.0)
      : channels_(channels), frame_size_(frame_size), hop_(hop), sample_rate_(sample_rate),
        window_(hann_window(frame_size)), fft_(frame_size),
        tail_(channels, std::vector<double>(frame_size, 0.0)), norm_(frame_size, 0.0),
        scratch_(frame_size) {
    check_frame_geometry(frame_size, hop);
    if (channels == 0) throw InvalidArgument("channel count must be positive");
    double steady = 0.0;
    for (std::size_t r = 0; r < hop; ++r) {
      double s = 0.0;
      for (std::size_t n = r; n < frame_size; n += hop) s += window_[n] * window_[n];
      steady = std::max(steady, s);
    }
    norm_floor_ = 1e-3 * steady;
  }

  std::size_t channel_count() const noexcept { return channels_; }

  MultichannelAudio push(const Spectrogram& spec) {
    if (spec.channel_count() != channels_ || spec.frame_size() != frame_size_ ||
        spec.hop() != hop_)
      throw ShapeError("spectrogram layout does not match the synthesizer");
    const std::size_t frames = spec.frame_count();
    MultichannelAudio out(channels_, frames * hop_, sample_rate_);
    for (std::size_t l = 0; l < frames; ++l) {
      for (std::size_t n = 0; n < frame_size_; ++n) norm_[n] += window_[n] * window_[n];
      for (std::size_t m = 0; m < channels_; ++m) {
        fft_.inverse(spec.frame(m, l), scratch_);
        auto& acc = tail_[m];
        for (std::size_t n = 0; n < frame_size_; ++n) acc[n] += window_[n] * scratch_[n];
        auto dst = out.channel(m).subspan(l * hop_, hop_);
        for (std::size_t n = 0; n < hop_; ++n) dst[n] = acc[n] / std::max(norm_[n], norm_floor_);
        std::shift_left(acc.begin(), acc.end(), static_cast<std::ptrdiff_t>(hop_));
        std::fill(acc.end() - static_cast<std::ptrdiff_t>(hop_), acc.end(), 0.0);
      }
      std::shift_left(norm_.begin(), norm_.end(), static_cast<std::ptrdiff_t>(hop_));
      std::fill(norm_.end() - static_cast<std::ptrdiff_t>(hop_), norm_.end(), 0.0);
    }
    return out;
  }

  // Emits the N - hop samples still in the overlap tail and resets it.
  MultichannelAudio flush() {
    const std::size_t len = frame_size_ - hop_;
    MultichannelAudio out(channels_, len, sample_rate_);
    for (std::size_t m = 0; m < channels_; ++m) {
      for (std::size_t n = 0; n < len; ++n)
        out(m, n) = tail_[m][n] / std::max(norm_[n], norm_floor_);
      std::fill(tail_[m].begin(), tail_[m].end(), 0.0);
    }
    std::fill(norm_.begin(), norm_.end(), 0.0);
    return out;
  }

 private:
  std::size_t channels_;
  std::size_t frame_size_;
  std::size_t hop_;
  double sample_rate_;
  std::vector<double> window_;
  RealFft fft_;
  std::vector<std::vector<double>> tail_;
  std::vector<double> norm_;
  std::vector<double> scratch_;
  double norm_floor_ = 0.0;
};

// Frame count for n samples: floor((n - N) / hop) + 1, or 0 when n < N.
constexpr std::size_t frame_count_for(std::size_t samples, std::size_t frame_size,
                                      std::size_t hop) noexcept {
  return samples < frame_size ? 0 : (samples - frame_size) / hop + 1;
}

inline Spectrogram analyze(const MultichannelAudio& audio, std::size_t frame_size,
                           std::size_t hop) {
  check_frame_geometry(frame_size, hop);
  if (audio.size() < frame_size)
    throw TooShortError("audio has " + std::to_string(audio.size()) +
                        " samples, fewer than one frame of " + std::to_string(frame_size));
  StftAnalyzer analyzer(audio.channel_count(), frame_size, hop, audio.sample_rate());
  return analyzer.push(audio);
}

// Output length is (F - 1) * hop + N; sample n aligns with input sample n.
inline MultichannelAudio synthesize(const Spectrogram& spec) {
  StftSynthesizer synth(spec.channel_count(), spec.frame_size(), spec.hop(), spec.sample_rate());
  MultichannelAudio out = synth.push(spec);
  out.append(synth.flush());
  return out;
}

}  // namespace egonoise
