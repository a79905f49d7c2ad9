#pragma once

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <complex>
#include <cstddef>
#include <optional>
#include <vector>

#include "egonoise/audio.hpp"
#include "egonoise/config.hpp"
#include "egonoise/dictionary.hpp"
#include "egonoise/error.hpp"
#include "egonoise/pca.hpp"
#include "egonoise/scm.hpp"
#include "egonoise/stft.hpp"

namespace egonoise {

struct MvdrWeights {
  std::vector<Eigen::VectorXcd> bins;  // w[k], length M each
  std::size_t reference = 0;
  // Bins whose trace fell below the floor and were set to pass-through.
  std::vector<std::size_t> floored_bins;

  std::size_t bin_count() const noexcept { return bins.size(); }
};

// |Tr| below this multiple of M falls back to pass-through of the reference.
inline constexpr double kTraceFloor = 1e-12;

// Per bin: w[k] = (inv_bb[k] * phi_xx[k] / Tr{inv_bb[k] * phi_xx[k]}) u,
// with u the one-hot vector selecting `reference`.
inline MvdrWeights compute_weights(const Scm& phi_xx, const Scm& inv_bb, std::size_t reference) {
  if (phi_xx.channels != inv_bb.channels || phi_xx.bin_count() != inv_bb.bin_count())
    throw ShapeError("mixture and noise SCMs differ in shape");
  if (reference >= phi_xx.channels) throw InvalidArgument("reference channel out of range");
  const auto M = static_cast<Eigen::Index>(phi_xx.channels);
  const auto ref = static_cast<Eigen::Index>(reference);
  MvdrWeights w;
  w.reference = reference;
  w.bins.resize(phi_xx.bin_count());
  Eigen::MatrixXcd prod(M, M);
  for (std::size_t k = 0; k < phi_xx.bin_count(); ++k) {
    prod.noalias() = inv_bb.bins[k] * phi_xx.bins[k];
    const std::complex<double> tr = prod.trace();
    if (!(std::abs(tr) >= kTraceFloor * static_cast<double>(M))) {
      w.bins[k] = Eigen::VectorXcd::Unit(M, ref);
      w.floored_bins.push_back(k);
    } else {
      w.bins[k] = prod.col(ref) / tr;
    }
  }
  return w;
}

// argmax_m sum_k max(phi_xx[k]_mm - noise[k][m], 0) / noise[k][m]; ties go to
// the lowest channel. `noise_diag` is indexed [k * M + m].
inline std::size_t select_reference(const Scm& phi_xx, std::span<const double> noise_diag) {
  const std::size_t M = phi_xx.channels;
  const std::size_t K = phi_xx.bin_count();
  if (noise_diag.size() != K * M) throw ShapeError("noise power table does not match the SCM");
  std::vector<double> score(M, 0.0);
  for (std::size_t k = 0; k < K; ++k)
    for (std::size_t m = 0; m < M; ++m) {
      const auto i = static_cast<Eigen::Index>(m);
      const double noise = noise_diag[k * M + m];
      const double excess = std::max(phi_xx.bins[k](i, i).real() - noise, 0.0);
      if (noise > 0.0) score[m] += excess / noise;
    }
  std::size_t best = 0;
  for (std::size_t m = 1; m < M; ++m)
    if (score[m] > score[best]) best = m;
  return best;
}

// w[k] = u for every bin: the reference microphone passed through unchanged.
inline MvdrWeights passthrough_weights(std::size_t channels, std::size_t bins,
                                      std::size_t reference) {
  if (reference >= channels) throw InvalidArgument("reference channel out of range");
  MvdrWeights w;
  w.reference = reference;
  w.bins.assign(bins, Eigen::VectorXcd::Unit(static_cast<Eigen::Index>(channels),
                                             static_cast<Eigen::Index>(reference)));
  return w;
}

// Y[k,l] = w[k]^H X[k,l], single output channel.
inline Spectrogram apply_weights(const MvdrWeights& w, const Spectrogram& x) {
  if (w.bin_count() != x.bin_count()) throw ShapeError("weights and spectrogram differ in bins");
  const std::size_t M = x.channel_count();
  Spectrogram y(1, x.frame_count(), x.frame_size(), x.hop(), x.sample_rate());
  for (std::size_t l = 0; l < x.frame_count(); ++l) {
    auto out = y.frame(0, l);
    for (std::size_t k = 0; k < x.bin_count(); ++k) {
      const auto& wk = w.bins[k];
      std::complex<double> acc = 0.0;
      for (std::size_t m = 0; m < M; ++m)
        acc += std::conj(wk[static_cast<Eigen::Index>(m)]) * x(m, l, k);
      out[k] = acc;
    }
  }
  return y;
}

// Analysis/synthesis stream that filters each chunk with a given weight set.
// The enhancer uses one for the mixture; evaluation runs extra copies on the
// clean and noise stems with the same weights.
class BeamformerPath {
 public:
  BeamformerPath(std::size_t channels, std::size_t frame_size, std::size_t hop, double sample_rate)
      : analyzer_(channels, frame_size, hop, sample_rate),
        synth_(1, frame_size, hop, sample_rate) {}

  Spectrogram analyze(const MultichannelAudio& chunk) { return analyzer_.push(chunk); }
  MultichannelAudio render(const Spectrogram& frames, const MvdrWeights& w) {
    return synth_.push(apply_weights(w, frames));
  }
  MultichannelAudio process(const MultichannelAudio& chunk, const MvdrWeights& w) {
    return render(analyze(chunk), w);
  }

 private:
  StftAnalyzer analyzer_;
  StftSynthesizer synth_;
};

struct SegmentReport {
  std::size_t segment = 0;
  std::size_t selected = 0;        // j*
  std::size_t reference_channel = 0;
  double distance = 0.0;           // Euclidean distance to D_j* in PCA space
  double wall_ms = 0.0;
  std::size_t frames = 0;
  std::size_t floored_bins = 0;
  bool padded = false;             // partial final segment, zero-padded
};

struct SegmentResult {
  MultichannelAudio audio;  // mono, samples finalized by this segment
  SegmentReport report;
  MvdrWeights weights;
};

// One enhancement stream. Owns the STFT state carried across segments and
// reads from a dictionary that may be shared with other sessions.
class EnhancerSession {
 public:
  EnhancerSession(const NoiseDictionary& dict, EnhancerConfig cfg)
      : dict_(dict), cfg_(checked(dict, std::move(cfg))),
        path_(cfg_.channels, cfg_.frame_size, cfg_.hop, cfg_.sample_rate) {}

  const EnhancerConfig& config() const noexcept { return cfg_; }
  std::size_t segments_processed() const noexcept { return next_segment_; }

  // Accepts exactly one segment, or a shorter final one that is zero-padded
  // and flagged. Output samples are aligned with the input timeline and lag
  // the input by frame_size - hop samples.
  SegmentResult process(const MultichannelAudio& segment) {
    const auto t0 = std::chrono::steady_clock::now();
    const std::size_t S = cfg_.segment_samples();
    if (segment.channel_count() != cfg_.channels)
      throw ShapeError("segment has " + std::to_string(segment.channel_count()) +
                       " channels, session expects " + std::to_string(cfg_.channels));
    if (segment.size() > S || segment.size() == 0)
      throw LengthMismatch("segment has " + std::to_string(segment.size()) +
                           " samples, expected " + std::to_string(S));
    SegmentResult out;
    out.report.segment = next_segment_++;
    const MultichannelAudio* input = &segment;
    MultichannelAudio padded;
    if (segment.size() < S) {
      padded = MultichannelAudio(cfg_.channels, S, cfg_.sample_rate);
      for (std::size_t m = 0; m < cfg_.channels; ++m) {
        auto src = segment.channel(m);
        std::copy(src.begin(), src.end(), padded.channel(m).begin());
      }
      input = &padded;
      out.report.padded = true;
    }

    const Spectrogram x = path_.analyze(*input);
    const Scm phi_xx = estimate(x);
    const ReducedVector observed = project(dict_.pca, flatten(phi_xx));
    const Match match = lookup(dict_, observed);
    const auto& entry = dict_.entries[match.index];
    const std::size_t reference =
        cfg_.fixed_reference ? *cfg_.fixed_reference : select_reference(phi_xx, entry.noise_diag);
    out.weights = compute_weights(phi_xx, dict_.inverse_scm(match.index), reference);
    out.audio = path_.render(x, out.weights);

    out.report.selected = match.index;
    out.report.reference_channel = reference;
    out.report.distance = std::sqrt(match.squared_distance);
    out.report.frames = x.frame_count();
    out.report.floored_bins = out.weights.floored_bins.size();
    out.report.wall_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return out;
  }

 private:
  static EnhancerConfig checked(const NoiseDictionary& dict, EnhancerConfig cfg) {
    cfg.validate();
    check_compatible(dict, cfg);
    return cfg;
  }

  const NoiseDictionary& dict_;
  EnhancerConfig cfg_;
  BeamformerPath path_;
  std::size_t next_segment_ = 0;
};

struct StreamResult {
  MultichannelAudio audio;  // mono
  std::vector<SegmentReport> reports;
  std::vector<MvdrWeights> weights;
};

// Splits `input` into consecutive segments and concatenates the session
// outputs. The output has min(n, F * hop) samples, F being the frame count of
// the zero-padded input: the last frame_size - hop samples (plus any
// remainder short of a hop) are never finalized.
inline StreamResult enhance_stream(const MultichannelAudio& input, const NoiseDictionary& dict,
                                   const EnhancerConfig& cfg, bool keep_weights = false) {
  EnhancerSession session(dict, cfg);
  const std::size_t S = cfg.segment_samples();
  StreamResult result;
  result.audio = MultichannelAudio(1, 0, input.sample_rate());
  for (std::size_t begin = 0; begin < input.size(); begin += S) {
    const std::size_t count = std::min(S, input.size() - begin);
    SegmentResult seg = session.process(input.slice(begin, count));
    result.audio.append(seg.audio);
    result.reports.push_back(seg.report);
    if (keep_weights) result.weights.push_back(std::move(seg.weights));
  }
  if (result.audio.size() > input.size()) result.audio = result.audio.slice(0, input.size());
  return result;
}

}  // namespace egonoise
