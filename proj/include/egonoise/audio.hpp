#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <vector>

#include "egonoise/error.hpp"

namespace egonoise {

// Time-domain M-channel buffer, channel-major: channel m occupies
// samples[m * frames, (m + 1) * frames).
class MultichannelAudio {
 public:
  MultichannelAudio() = default;

  MultichannelAudio(std::size_t channels, std::size_t frames, double sample_rate = 32000.0)
      : channels_(channels), frames_(frames), sample_rate_(sample_rate),
        samples_(channels * frames, 0.0) {
    validate();
  }

  MultichannelAudio(std::size_t channels, std::vector<double> samples, double sample_rate)
      : channels_(channels), sample_rate_(sample_rate), samples_(std::move(samples)) {
    if (channels_ == 0) throw InvalidArgument("channel count must be positive");
    if (samples_.size() % channels_ != 0)
      throw ShapeError("sample count is not a multiple of the channel count");
    frames_ = samples_.size() / channels_;
    validate();
  }

  static MultichannelAudio from_channels(const std::vector<std::vector<double>>& chans,
                                         double sample_rate) {
    if (chans.empty()) throw InvalidArgument("channel count must be positive");
    MultichannelAudio a(chans.size(), chans.front().size(), sample_rate);
    for (std::size_t m = 0; m < chans.size(); ++m) {
      if (chans[m].size() != a.frames_) throw ShapeError("channels differ in length");
      std::copy(chans[m].begin(), chans[m].end(), a.channel(m).begin());
    }
    return a;
  }

  std::size_t channel_count() const noexcept { return channels_; }
  // Samples per channel.
  std::size_t size() const noexcept { return frames_; }
  double sample_rate() const noexcept { return sample_rate_; }
  double duration() const noexcept { return static_cast<double>(frames_) / sample_rate_; }

  std::span<double> channel(std::size_t m) {
    return {samples_.data() + m * frames_, frames_};
  }
  std::span<const double> channel(std::size_t m) const {
    return {samples_.data() + m * frames_, frames_};
  }

  double& operator()(std::size_t m, std::size_t n) { return samples_[m * frames_ + n]; }
  double operator()(std::size_t m, std::size_t n) const { return samples_[m * frames_ + n]; }

  const std::vector<double>& data() const noexcept { return samples_; }

  // Copy of samples [begin, begin + count) from every channel.
  MultichannelAudio slice(std::size_t begin, std::size_t count) const {
    if (begin + count > frames_) throw ShapeError("slice exceeds buffer length");
    MultichannelAudio out(channels_, count, sample_rate_);
    for (std::size_t m = 0; m < channels_; ++m) {
      auto src = channel(m).subspan(begin, count);
      std::copy(src.begin(), src.end(), out.channel(m).begin());
    }
    return out;
  }

  // Appends `other` along time.
  void append(const MultichannelAudio& other) {
    if (other.channels_ != channels_) throw ShapeError("channel count mismatch in append");
    std::vector<double> merged(channels_ * (frames_ + other.frames_));
    for (std::size_t m = 0; m < channels_; ++m) {
      auto a = channel(m);
      auto b = other.channel(m);
      auto dst = merged.begin() + static_cast<std::ptrdiff_t>(m * (frames_ + other.frames_));
      dst = std::copy(a.begin(), a.end(), dst);
      std::copy(b.begin(), b.end(), dst);
    }
    samples_ = std::move(merged);
    frames_ += other.frames_;
  }

  bool operator==(const MultichannelAudio&) const = default;

 private:
  void validate() const {
    if (channels_ == 0) throw InvalidArgument("channel count must be positive");
    if (!(sample_rate_ > 0.0)) throw InvalidArgument("sample rate must be positive");
  }

  std::size_t channels_ = 1;
  std::size_t frames_ = 0;
  double sample_rate_ = 32000.0;
  std::vector<double> samples_;
};

}  // namespace egonoise
