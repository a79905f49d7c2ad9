#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "egonoise/audio.hpp"
#include "egonoise/config.hpp"
#include "egonoise/dictionary.hpp"
#include "egonoise/enhancer.hpp"
#include "egonoise/error.hpp"
#include "egonoise/evalkit/metrics.hpp"
#include "egonoise/evalkit/scene.hpp"

namespace egonoise::evalkit {

// Channel the input metrics are read from.
enum class Comparison {
  reference,  // the MVDR reference microphone of each segment
  best,       // the microphone with the highest whole-recording input SNR
};

// A segment is silent when its clean power is this far below the loudest one.
inline constexpr double kSilenceDb = -40.0;

struct SegmentMetrics {
  std::size_t segment = 0;
  std::size_t start = 0;   // first output sample
  std::size_t length = 0;  // samples scored
  bool silent = false;
  std::optional<double> input_snr;
  std::optional<double> output_snr;
  std::optional<double> input_sdr;
  std::optional<double> output_sdr;
  std::size_t selected = 0;
  std::size_t reference_channel = 0;
  std::size_t comparison_channel = 0;
  double wall_ms = 0.0;
};

struct Aggregate {
  std::size_t segments = 0;
  double input_snr = 0.0;
  double output_snr = 0.0;
  double input_sdr = 0.0;
  double output_sdr = 0.0;

  double snr_gain() const noexcept { return output_snr - input_snr; }
  double sdr_gain() const noexcept { return output_sdr - input_sdr; }
};

struct MetricReport {
  std::vector<SegmentMetrics> segments;
  std::optional<Aggregate> aggregate;  // empty when every segment is silent
  double mean_wall_ms = 0.0;
  // max |y - (y_clean + y_noise)| over the output, the decomposition residual.
  double decomposition_error = 0.0;
  MultichannelAudio enhanced;
  MultichannelAudio enhanced_clean;
  MultichannelAudio enhanced_noise;
  MultichannelAudio reference_clean;
};

inline std::size_t best_input_channel(const MultichannelAudio& clean, const MultichannelAudio& noise) {
  std::size_t best = 0;
  double best_ratio = -1.0;
  for (std::size_t m = 0; m < clean.channel_count(); ++m) {
    const double en = energy(noise.channel(m));
    const double ratio = en > 0.0 ? energy(clean.channel(m)) / en : 0.0;
    if (ratio > best_ratio) {
      best_ratio = ratio;
      best = m;
    }
  }
  return best;
}

// Enhances the mixture and filters the clean and noise stems with the same
// per-segment weights; since the beamformer is linear this splits the output
// exactly into its target and residual-noise parts, which the output SNR is
// computed from. Output SDR is scored against the distortionless target: the
// clean signal at each segment's reference microphone, passed through the
// same analysis/synthesis so reference switches cross-fade exactly like the
// enhanced output does.
inline MetricReport evaluate_run(const MultichannelAudio& mixture, const MultichannelAudio& clean,
                                 const MultichannelAudio& noise, const NoiseDictionary& dict,
                                 const EnhancerConfig& cfg,
                                 Comparison comparison = Comparison::reference) {
  if (mixture.size() != clean.size() || mixture.size() != noise.size() ||
      mixture.channel_count() != clean.channel_count() ||
      mixture.channel_count() != noise.channel_count())
    throw LengthMismatch("mixture, clean and noise recordings are not aligned");

  EnhancerSession session(dict, cfg);
  BeamformerPath clean_path(cfg.channels, cfg.frame_size, cfg.hop, cfg.sample_rate);
  BeamformerPath noise_path(cfg.channels, cfg.frame_size, cfg.hop, cfg.sample_rate);
  BeamformerPath reference_path(cfg.channels, cfg.frame_size, cfg.hop, cfg.sample_rate);
  const std::size_t S = cfg.segment_samples();
  const std::size_t n = mixture.size();

  MetricReport report;
  report.enhanced = MultichannelAudio(1, 0, mixture.sample_rate());
  report.enhanced_clean = report.enhanced;
  report.enhanced_noise = report.enhanced;
  report.reference_clean = report.enhanced;
  std::vector<SegmentReport> seg_reports;
  for (std::size_t begin = 0; begin < n; begin += S) {
    const std::size_t count = std::min(S, n - begin);
    auto pad = [&](const MultichannelAudio& a) {
      MultichannelAudio out(a.channel_count(), S, a.sample_rate());
      for (std::size_t m = 0; m < a.channel_count(); ++m) {
        auto src = a.channel(m).subspan(begin, count);
        std::copy(src.begin(), src.end(), out.channel(m).begin());
      }
      return out;
    };
    SegmentResult seg = session.process(mixture.slice(begin, count));
    report.enhanced.append(seg.audio);
    report.enhanced_clean.append(clean_path.process(pad(clean), seg.weights));
    report.enhanced_noise.append(noise_path.process(pad(noise), seg.weights));
    report.reference_clean.append(reference_path.process(
        pad(clean), passthrough_weights(cfg.channels, cfg.bin_count(), seg.report.reference_channel)));
    seg_reports.push_back(seg.report);
  }
  const std::size_t out_len = std::min(n, report.enhanced.size());
  report.enhanced = report.enhanced.slice(0, out_len);
  report.enhanced_clean = report.enhanced_clean.slice(0, out_len);
  report.enhanced_noise = report.enhanced_noise.slice(0, out_len);
  report.reference_clean = report.reference_clean.slice(0, out_len);
  for (std::size_t i = 0; i < out_len; ++i)
    report.decomposition_error = std::max(
        report.decomposition_error,
        std::abs(report.enhanced(0, i) - (report.enhanced_clean(0, i) + report.enhanced_noise(0, i))));

  const std::size_t fixed_channel = best_input_channel(clean, noise);
  std::vector<double> clean_power;
  for (std::size_t s = 0; s < seg_reports.size(); ++s) {
    SegmentMetrics sm;
    sm.segment = s;
    sm.start = s * S;
    sm.length = sm.start < out_len ? std::min(S, out_len - sm.start) : 0;
    sm.selected = seg_reports[s].selected;
    sm.reference_channel = seg_reports[s].reference_channel;
    sm.comparison_channel =
        comparison == Comparison::reference ? sm.reference_channel : fixed_channel;
    sm.wall_ms = seg_reports[s].wall_ms;
    report.segments.push_back(sm);
    clean_power.push_back(
        sm.length ? energy(clean.channel(sm.comparison_channel).subspan(sm.start, sm.length)) /
                        static_cast<double>(sm.length)
                  : 0.0);
  }
  const double loudest = clean_power.empty() ? 0.0 : *std::max_element(clean_power.begin(), clean_power.end());

  Aggregate agg;
  double wall = 0.0;
  for (std::size_t s = 0; s < report.segments.size(); ++s) {
    auto& sm = report.segments[s];
    wall += sm.wall_ms;
    sm.silent = !(clean_power[s] > 0.0) || clean_power[s] < loudest * std::pow(10.0, kSilenceDb / 10.0);
    if (sm.length == 0) continue;
    auto cut = [&](const MultichannelAudio& a, std::size_t ch) {
      return a.channel(ch).subspan(sm.start, sm.length);
    };
    const auto c = sm.comparison_channel;
    if (energy(cut(clean, c)) > 0.0) {
      sm.input_snr = snr(cut(clean, c), cut(noise, c));
      sm.input_sdr = sdr(cut(mixture, c), cut(clean, c));
    }
    if (energy(cut(report.enhanced_clean, 0)) > 0.0)
      sm.output_snr = snr(cut(report.enhanced_clean, 0), cut(report.enhanced_noise, 0));
    if (energy(cut(report.reference_clean, 0)) > 0.0)
      sm.output_sdr = sdr(cut(report.enhanced, 0), cut(report.reference_clean, 0));
    if (!sm.silent && sm.input_snr && sm.output_snr && sm.input_sdr && sm.output_sdr) {
      ++agg.segments;
      agg.input_snr += *sm.input_snr;
      agg.output_snr += *sm.output_snr;
      agg.input_sdr += *sm.input_sdr;
      agg.output_sdr += *sm.output_sdr;
    }
  }
  if (agg.segments > 0) {
    const double k = static_cast<double>(agg.segments);
    agg.input_snr /= k;
    agg.output_snr /= k;
    agg.input_sdr /= k;
    agg.output_sdr /= k;
    report.aggregate = agg;
  }
  report.mean_wall_ms = report.segments.empty() ? 0.0 : wall / static_cast<double>(report.segments.size());
  return report;
}

}  // namespace egonoise::evalkit
