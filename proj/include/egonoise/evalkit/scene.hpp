#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "egonoise/audio.hpp"
#include "egonoise/error.hpp"
#include "egonoise/evalkit/random.hpp"
#include "egonoise/io/wav.hpp"

namespace egonoise::evalkit {

inline constexpr double kSpeedOfSound = 343.0;

// Synthetic robot scene: a uniform circular array (odd microphones raised by
// ring_offset), a set of ego-noise states made of point sources close to the
// array, and one moving target source.
struct SceneSpec {
  std::size_t channels = 8;
  double sample_rate = 32000.0;
  double duration = 20.0;  // seconds
  double array_radius = 0.15;  // meters
  double ring_offset = 0.03;   // meters

  // Ego-noise. State parameters (source positions, spectra, mounting
  // responses) derive from state_seed; the schedule and excitation from seed.
  std::size_t noise_states = 4;
  std::size_t sources_per_state = 2;
  double dwell_min = 1.0;  // seconds spent in a state
  double dwell_max = 3.0;
  double transition = 0.1;  // cross-fade length, seconds
  double sensor_noise_db = -40.0;  // uncorrelated floor relative to ego-noise power

  // Target: "chirp", "multitone", "chirp+multitone" or "wav:<path>".
  std::string target = "chirp+multitone";
  double target_distance = 2.0;      // meters
  double target_azimuth = 0.0;       // degrees
  double target_azimuth_rate = 10.0; // degrees per second
  double chirp_low = 300.0;
  double chirp_high = 3500.0;
  double chirp_period = 2.0;
  double multitone_f0 = 350.0;
  std::size_t multitone_count = 6;

  double input_snr_db = 0.0;  // on channel 0, over the whole scene
  std::uint64_t state_seed = 1;
  std::uint64_t seed = 7;

  std::size_t samples() const {
    return static_cast<std::size_t>(std::llround(duration * sample_rate));
  }

  void validate() const {
    if (channels < 2) throw InvalidArgument("scene needs at least 2 microphones");
    if (!(array_radius > 0.0)) throw InvalidArgument("invalid geometry: array radius must be positive");
    if (!(target_distance > array_radius + std::abs(ring_offset)))
      throw InvalidArgument("invalid geometry: target must lie outside the array");
    if (!(sample_rate > 0.0) || !(duration > 0.0) || samples() == 0)
      throw InvalidArgument("sample rate and duration must be positive");
    if (noise_states == 0 || sources_per_state == 0)
      throw InvalidArgument("scene needs at least one noise state with one source");
    if (!(dwell_min > 0.0) || dwell_max < dwell_min)
      throw InvalidArgument("dwell range must satisfy 0 < dwell_min <= dwell_max");
    if (transition < 0.0 || transition >= dwell_min)
      throw InvalidArgument("transition must be non-negative and shorter than dwell_min");
    if (target != "chirp" && target != "multitone" && target != "chirp+multitone" &&
        target.rfind("wav:", 0) != 0)
      throw InvalidArgument("unknown target '" + target + "'");
    if (chirp_low <= 0.0 || chirp_high >= sample_rate / 2 || chirp_period <= 0.0 ||
        multitone_f0 <= 0.0 || multitone_count == 0)
      throw InvalidArgument("target signal parameters out of range");
  }
};

struct Scene {
  MultichannelAudio mixture;
  MultichannelAudio clean;
  MultichannelAudio noise;
};

using Point = std::array<double, 3>;

inline double distance(const Point& a, const Point& b) {
  return std::hypot(a[0] - b[0], a[1] - b[1], a[2] - b[2]);
}

inline std::vector<Point> microphone_positions(const SceneSpec& spec) {
  std::vector<Point> mics(spec.channels);
  for (std::size_t m = 0; m < spec.channels; ++m) {
    const double a = 2.0 * std::numbers::pi * static_cast<double>(m) / static_cast<double>(spec.channels);
    mics[m] = {spec.array_radius * std::cos(a), spec.array_radius * std::sin(a),
               m % 2 == 1 ? spec.ring_offset : 0.0};
  }
  return mics;
}

namespace detail {

inline constexpr int kSincHalf = 16;
inline constexpr int kShapingTaps = 5;

// Blackman-windowed sinc fractional delay taps for j in [-16, 16].
inline std::array<double, 2 * kSincHalf + 1> fractional_delay(double frac) {
  std::array<double, 2 * kSincHalf + 1> h{};
  const double span = kSincHalf + 1.0;
  for (int j = -kSincHalf; j <= kSincHalf; ++j) {
    const double x = j - frac;
    const double sinc = x == 0.0 ? 1.0 : std::sin(std::numbers::pi * x) / (std::numbers::pi * x);
    const double w = 0.42 + 0.5 * std::cos(std::numbers::pi * x / span) +
                     0.08 * std::cos(2.0 * std::numbers::pi * x / span);
    h[static_cast<std::size_t>(j + kSincHalf)] = sinc * w;
  }
  return h;
}

struct NoiseSource {
  Point position;
  double f0 = 100.0;
  std::vector<double> harmonic_amp;
  std::vector<double> harmonic_phase;
  double lowpass = 0.9;      // one-pole coefficient of the broadband part
  double broadband_gain = 1.0;
  double am_depth = 0.2;
  double am_rate = 1.0;      // Hz
  double am_phase = 0.0;
  double gain = 1.0;
  // Mounting response per microphone.
  std::vector<std::array<double, kShapingTaps>> shaping;
};

struct NoiseState {
  std::vector<NoiseSource> sources;
};

inline std::vector<NoiseState> make_states(const SceneSpec& spec) {
  Rng rng = Rng::derive(spec.state_seed, 0x5747);
  std::vector<NoiseState> states(spec.noise_states);
  for (auto& st : states) {
    st.sources.resize(spec.sources_per_state);
    for (auto& src : st.sources) {
      const double az = rng.uniform(0.0, 2.0 * std::numbers::pi);
      const double r = rng.uniform(0.05, 0.35);
      src.position = {r * std::cos(az), r * std::sin(az), rng.uniform(-0.25, -0.05)};
      src.f0 = rng.uniform(50.0, 250.0);
      double power = 0.0;
      for (int h = 1; h <= 24 && src.f0 * h < 0.45 * spec.sample_rate; ++h) {
        const double a = rng.uniform(0.5, 1.0) / h;
        src.harmonic_amp.push_back(a);
        src.harmonic_phase.push_back(rng.uniform(0.0, 2.0 * std::numbers::pi));
        power += 0.5 * a * a;
      }
      for (auto& a : src.harmonic_amp) a /= std::sqrt(power);
      src.lowpass = rng.uniform(0.3, 0.95);
      src.broadband_gain = rng.uniform(0.5, 1.5);
      src.am_depth = rng.uniform(0.1, 0.4);
      src.am_rate = rng.uniform(0.3, 3.0);
      src.am_phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
      src.gain = rng.uniform(0.5, 1.5);
      src.shaping.resize(spec.channels);
      for (auto& taps : src.shaping) {
        taps[0] = 1.0;
        for (int t = 1; t < kShapingTaps; ++t) taps[static_cast<std::size_t>(t)] = 0.25 * rng.normal();
      }
    }
  }
  return states;
}

struct Dwell {
  double start = 0.0;  // seconds
  double end = 0.0;
  std::size_t state = 0;
};

inline std::vector<Dwell> make_schedule(const SceneSpec& spec) {
  Rng rng = Rng::derive(spec.seed, 0x5343);
  std::vector<Dwell> dwells;
  double t = 0.0;
  std::size_t state = rng.below(spec.noise_states);
  while (t < spec.duration) {
    const double len = rng.uniform(spec.dwell_min, spec.dwell_max);
    dwells.push_back({t, t + len, state});
    t += len;
    if (spec.noise_states > 1) {
      const std::size_t step = 1 + rng.below(spec.noise_states - 1);
      state = (state + step) % spec.noise_states;
    }
  }
  return dwells;
}

// Power-complementary fade gain of dwell `i` at time t.
inline double dwell_gain(const std::vector<Dwell>& dwells, std::size_t i, double t, double tr) {
  const auto& d = dwells[i];
  double g = 1.0;
  if (tr > 0.0) {
    if (i > 0 && t < d.start + tr / 2) {
      const double x = std::clamp((t - (d.start - tr / 2)) / tr, 0.0, 1.0);
      g *= std::sin(0.5 * std::numbers::pi * x);
    }
    if (i + 1 < dwells.size() && t > d.end - tr / 2) {
      const double x = std::clamp((t - (d.end - tr / 2)) / tr, 0.0, 1.0);
      g *= std::cos(0.5 * std::numbers::pi * x);
    }
  } else if (t < d.start || t >= d.end) {
    g = 0.0;
  }
  return g;
}

inline void render_noise(const SceneSpec& spec, const std::vector<Point>& mics,
                         MultichannelAudio& noise) {
  const auto states = make_states(spec);
  const auto dwells = make_schedule(spec);
  const double fs = spec.sample_rate;
  const auto n_total = static_cast<std::ptrdiff_t>(noise.size());
  const double tr = spec.transition;

  for (std::size_t i = 0; i < dwells.size(); ++i) {
    const auto& d = dwells[i];
    const double t0 = i > 0 ? d.start - tr / 2 : 0.0;
    const double t1 = i + 1 < dwells.size() ? d.end + tr / 2 : spec.duration;
    const auto a = std::max<std::ptrdiff_t>(0, static_cast<std::ptrdiff_t>(std::floor(t0 * fs)));
    const auto b = std::min<std::ptrdiff_t>(n_total, static_cast<std::ptrdiff_t>(std::ceil(t1 * fs)) + 1);
    if (a >= b) continue;

    for (std::size_t si = 0; si < states[d.state].sources.size(); ++si) {
      const auto& src = states[d.state].sources[si];
      std::vector<std::ptrdiff_t> delay(spec.channels);
      std::vector<std::array<double, 2 * detail::kSincHalf + kShapingTaps>> filt(spec.channels);
      std::vector<double> gain(spec.channels);
      std::ptrdiff_t max_delay = 0;
      for (std::size_t m = 0; m < spec.channels; ++m) {
        const double dist = distance(src.position, mics[m]);
        const double tau = dist / kSpeedOfSound * fs;
        delay[m] = static_cast<std::ptrdiff_t>(std::floor(tau));
        max_delay = std::max(max_delay, delay[m]);
        gain[m] = src.gain * 0.1 / std::max(dist, 0.05);
        const auto h = fractional_delay(tau - std::floor(tau));
        filt[m].fill(0.0);
        for (std::size_t j = 0; j < h.size(); ++j)
          for (std::size_t t = 0; t < kShapingTaps; ++t) filt[m][j + t] += h[j] * src.shaping[m][t];
      }

      // Source waveform over [lo, hi) in absolute samples.
      const std::ptrdiff_t lo = a - max_delay - kShapingTaps - kSincHalf;
      const std::ptrdiff_t hi = b + kSincHalf + 1;
      std::vector<double> wave(static_cast<std::size_t>(hi - lo));
      Rng excite = Rng::derive(spec.seed, 0x10000 + i * 64 + si);
      const double pole = src.lowpass;
      const double norm = std::sqrt((1.0 + pole) / (1.0 - pole));
      double lp = excite.normal() / norm;
      // Harmonics run as rotating phasors started at the exact phase of `lo`.
      const std::size_t n_harm = src.harmonic_amp.size();
      std::vector<std::complex<double>> osc(n_harm), step(n_harm);
      for (std::size_t h = 0; h < n_harm; ++h) {
        const double w = 2.0 * std::numbers::pi * src.f0 * static_cast<double>(h + 1) / fs;
        osc[h] = std::polar(1.0, std::fmod(w * static_cast<double>(lo), 2.0 * std::numbers::pi) +
                                     src.harmonic_phase[h]);
        step[h] = std::polar(1.0, w);
      }
      for (std::ptrdiff_t n = lo; n < hi; ++n) {
        const double t = static_cast<double>(n) / fs;
        double harm = 0.0;
        for (std::size_t h = 0; h < n_harm; ++h) {
          harm += src.harmonic_amp[h] * osc[h].imag();
          osc[h] *= step[h];
        }
        lp = pole * lp + (1.0 - pole) * excite.normal();
        const double am =
            1.0 + src.am_depth * std::sin(2.0 * std::numbers::pi * src.am_rate * t + src.am_phase);
        wave[static_cast<std::size_t>(n - lo)] =
            am * (harm + src.broadband_gain * lp * norm) * dwell_gain(dwells, i, t, tr);
      }

      for (std::size_t m = 0; m < spec.channels; ++m) {
        auto out = noise.channel(m);
        const auto& c = filt[m];
        for (std::ptrdiff_t n = a; n < b; ++n) {
          // y[n] = sum_t c[t] src[n - D - (t - 16)]
          const std::ptrdiff_t base = n - delay[m] + kSincHalf - lo;
          double acc = 0.0;
          for (std::size_t t = 0; t < c.size(); ++t)
            acc += c[t] * wave[static_cast<std::size_t>(base - static_cast<std::ptrdiff_t>(t))];
          out[static_cast<std::size_t>(n)] += gain[m] * acc;
        }
      }
    }
  }

  double mean_power = 0.0;
  for (std::size_t m = 0; m < spec.channels; ++m)
    for (double v : noise.channel(m)) mean_power += v * v;
  mean_power /= static_cast<double>(spec.channels * noise.size());
  const double sigma = std::sqrt(mean_power * std::pow(10.0, spec.sensor_noise_db / 10.0));
  Rng sensor = Rng::derive(spec.seed, 0x5E45);
  for (std::size_t m = 0; m < spec.channels; ++m)
    for (double& v : noise.channel(m)) v += sigma * sensor.normal();
}

inline std::vector<double> target_waveform(const SceneSpec& spec, std::ptrdiff_t lo,
                                           std::ptrdiff_t hi) {
  const double fs = spec.sample_rate;
  std::vector<double> wave(static_cast<std::size_t>(hi - lo), 0.0);
  if (spec.target.rfind("wav:", 0) == 0) {
    const MultichannelAudio file = io::read_wav(spec.target.substr(4));
    if (std::llround(file.sample_rate()) != std::llround(fs))
      throw InvalidArgument("target WAV sample rate does not match the scene");
    if (file.size() == 0) throw InvalidArgument("target WAV is empty");
    auto ch = file.channel(0);
    for (std::ptrdiff_t n = std::max<std::ptrdiff_t>(lo, 0); n < hi; ++n)
      wave[static_cast<std::size_t>(n - lo)] = ch[static_cast<std::size_t>(n) % ch.size()];
    return wave;
  }
  const bool chirp = spec.target == "chirp" || spec.target == "chirp+multitone";
  const bool tones = spec.target == "multitone" || spec.target == "chirp+multitone";
  const double mix = chirp && tones ? std::sqrt(0.5) : 1.0;
  Rng rng = Rng::derive(spec.seed, 0x7A67);
  std::vector<double> phase(spec.multitone_count);
  for (auto& p : phase) p = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double tone_amp = std::sqrt(2.0 / static_cast<double>(spec.multitone_count));
  double chirp_phase = 0.0;
  for (std::ptrdiff_t n = lo; n < hi; ++n) {
    const double t = static_cast<double>(n) / fs;
    double v = 0.0;
    if (chirp) {
      const double tau = t - std::floor(t / spec.chirp_period) * spec.chirp_period;
      const double f = spec.chirp_low + (spec.chirp_high - spec.chirp_low) * tau / spec.chirp_period;
      v += std::sqrt(2.0) * std::sin(chirp_phase);
      chirp_phase = std::fmod(chirp_phase + 2.0 * std::numbers::pi * f / fs, 2.0 * std::numbers::pi);
    }
    if (tones)
      for (std::size_t h = 0; h < spec.multitone_count; ++h) {
        const double f = spec.multitone_f0 * static_cast<double>(h + 1);
        if (f < 0.45 * fs)
          v += tone_amp * std::sin(2.0 * std::numbers::pi * f * t + phase[h]);
      }
    wave[static_cast<std::size_t>(n - lo)] = mix * v;
  }
  return wave;
}

inline void render_target(const SceneSpec& spec, const std::vector<Point>& mics,
                          MultichannelAudio& clean) {
  const double fs = spec.sample_rate;
  const auto n_total = static_cast<std::ptrdiff_t>(clean.size());
  const double max_dist = spec.target_distance + spec.array_radius + std::abs(spec.ring_offset);
  const auto max_delay = static_cast<std::ptrdiff_t>(std::ceil(max_dist / kSpeedOfSound * fs)) + 1;
  const std::ptrdiff_t lo = -max_delay - kSincHalf - 1;
  const std::ptrdiff_t hi = n_total + kSincHalf + 1;
  const std::vector<double> wave = target_waveform(spec, lo, hi);

  // Delays are refreshed every 32 samples; the path moves by far less than a
  // sample per block at any plausible azimuth rate.
  constexpr std::ptrdiff_t kBlock = 32;
  for (std::ptrdiff_t b0 = 0; b0 < n_total; b0 += kBlock) {
    const std::ptrdiff_t b1 = std::min(n_total, b0 + kBlock);
    const double t = (static_cast<double>(b0 + b1) / 2.0) / fs;
    const double az = (spec.target_azimuth + spec.target_azimuth_rate * t) * std::numbers::pi / 180.0;
    const Point pos{spec.target_distance * std::cos(az), spec.target_distance * std::sin(az), 0.0};
    for (std::size_t m = 0; m < spec.channels; ++m) {
      const double dist = distance(pos, mics[m]);
      const double tau = dist / kSpeedOfSound * fs;
      const auto d = static_cast<std::ptrdiff_t>(std::floor(tau));
      const auto h = fractional_delay(tau - std::floor(tau));
      const double g = 1.0 / dist;
      auto out = clean.channel(m);
      for (std::ptrdiff_t n = b0; n < b1; ++n) {
        double acc = 0.0;
        for (int j = -kSincHalf; j <= kSincHalf; ++j)
          acc += h[static_cast<std::size_t>(j + kSincHalf)] *
                 wave[static_cast<std::size_t>(n - d - j - lo)];
        out[static_cast<std::size_t>(n)] = g * acc;
      }
    }
  }
}

inline double quantize(double x) { return std::nearbyint(x * 0x1.0p23) * 0x1.0p-23; }

}  // namespace detail

inline double energy(std::span<const double> x) {
  double e = 0.0;
  for (double v : x) e += v * v;
  return e;
}

// Renders the scene. The target is scaled to the requested SNR on channel 0,
// all stems share one gain that puts the largest magnitude at 0.5, and clean
// and noise are rounded to multiples of 2^-23 so that mixture = clean + noise
// holds exactly, including after a round trip through 32-bit float WAV.
inline Scene synthesize_scene(const SceneSpec& spec) {
  spec.validate();
  const std::size_t n = spec.samples();
  const auto mics = microphone_positions(spec);
  Scene scene;
  scene.noise = MultichannelAudio(spec.channels, n, spec.sample_rate);
  scene.clean = MultichannelAudio(spec.channels, n, spec.sample_rate);
  detail::render_noise(spec, mics, scene.noise);
  detail::render_target(spec, mics, scene.clean);

  const double es = energy(scene.clean.channel(0));
  const double en = energy(scene.noise.channel(0));
  if (!(es > 0.0)) throw InvalidArgument("target signal is silent");
  if (!(en > 0.0)) throw InvalidArgument("ego-noise is silent");
  const double target_gain = std::sqrt(std::pow(10.0, spec.input_snr_db / 10.0) * en / es);

  double peak = 0.0;
  for (std::size_t m = 0; m < spec.channels; ++m)
    for (std::size_t i = 0; i < n; ++i) {
      const double s = target_gain * scene.clean(m, i);
      const double b = scene.noise(m, i);
      peak = std::max({peak, std::abs(s), std::abs(b), std::abs(s + b)});
    }
  const double scale = 0.5 / peak;

  scene.mixture = MultichannelAudio(spec.channels, n, spec.sample_rate);
  for (std::size_t m = 0; m < spec.channels; ++m)
    for (std::size_t i = 0; i < n; ++i) {
      const double s = detail::quantize(scale * target_gain * scene.clean(m, i));
      const double b = detail::quantize(scale * scene.noise(m, i));
      scene.clean(m, i) = s;
      scene.noise(m, i) = b;
      scene.mixture(m, i) = s + b;
    }
  return scene;
}

// ---------------------------------------------------------------------------
// Text format: first non-empty line "egonoise-scene 1", then "key = value"
// lines. '#' starts a comment. Keys are the SceneSpec field names.
// ---------------------------------------------------------------------------

inline constexpr const char* kSceneHeader = "egonoise-scene 1";

namespace detail {

struct FieldCodec {
  std::function<void(SceneSpec&, const std::string&)> set;
  std::function<std::string(const SceneSpec&)> get;
};

template <typename T>
FieldCodec codec(T SceneSpec::*field) {
  return {[field](SceneSpec& s, const std::string& text) {
            if constexpr (std::is_same_v<T, std::string>) {
              s.*field = text;
            } else {
              std::istringstream is(text);
              T v{};
              if constexpr (std::is_unsigned_v<T>) {
                if (!text.empty() && text.front() == '-') throw InvalidArgument("negative value");
              }
              is >> v;
              if (!is || !(is >> std::ws).eof()) throw InvalidArgument("cannot parse '" + text + "'");
              s.*field = v;
            }
          },
          [field](const SceneSpec& s) {
            if constexpr (std::is_same_v<T, std::string>) {
              return s.*field;
            } else {
              std::ostringstream os;
              os.precision(17);
              os << s.*field;
              return os.str();
            }
          }};
}

inline const std::vector<std::pair<std::string, FieldCodec>>& scene_fields() {
  static const std::vector<std::pair<std::string, FieldCodec>> fields = {
      {"channels", codec(&SceneSpec::channels)},
      {"sample_rate", codec(&SceneSpec::sample_rate)},
      {"duration", codec(&SceneSpec::duration)},
      {"array_radius", codec(&SceneSpec::array_radius)},
      {"ring_offset", codec(&SceneSpec::ring_offset)},
      {"noise_states", codec(&SceneSpec::noise_states)},
      {"sources_per_state", codec(&SceneSpec::sources_per_state)},
      {"dwell_min", codec(&SceneSpec::dwell_min)},
      {"dwell_max", codec(&SceneSpec::dwell_max)},
      {"transition", codec(&SceneSpec::transition)},
      {"sensor_noise_db", codec(&SceneSpec::sensor_noise_db)},
      {"target", codec(&SceneSpec::target)},
      {"target_distance", codec(&SceneSpec::target_distance)},
      {"target_azimuth", codec(&SceneSpec::target_azimuth)},
      {"target_azimuth_rate", codec(&SceneSpec::target_azimuth_rate)},
      {"chirp_low", codec(&SceneSpec::chirp_low)},
      {"chirp_high", codec(&SceneSpec::chirp_high)},
      {"chirp_period", codec(&SceneSpec::chirp_period)},
      {"multitone_f0", codec(&SceneSpec::multitone_f0)},
      {"multitone_count", codec(&SceneSpec::multitone_count)},
      {"input_snr_db", codec(&SceneSpec::input_snr_db)},
      {"state_seed", codec(&SceneSpec::state_seed)},
      {"seed", codec(&SceneSpec::seed)},
  };
  return fields;
}

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace detail

inline SceneSpec parse_scene(std::istream& is) {
  SceneSpec spec;
  std::string line;
  std::size_t line_no = 0;
  bool header = false;
  while (std::getline(is, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    if (!header) {
      if (line != kSceneHeader)
        throw ParseError(line_no, "expected header '" + std::string(kSceneHeader) + "'");
      header = true;
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(line_no, "expected 'key = value'");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    const auto& fields = detail::scene_fields();
    const auto it = std::find_if(fields.begin(), fields.end(),
                                 [&](const auto& f) { return f.first == key; });
    if (it == fields.end()) throw ParseError(line_no, "unknown key '" + key + "'");
    try {
      it->second.set(spec, value);
    } catch (const Error& e) {
      throw ParseError(line_no, key + ": " + e.what());
    }
  }
  if (!header) throw ParseError(line_no == 0 ? 1 : line_no, "missing header line");
  return spec;
}

inline SceneSpec parse_scene_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open scene spec '" + path + "'");
  return parse_scene(in);
}

inline std::string to_text(const SceneSpec& spec) {
  std::string out = std::string(kSceneHeader) + "\n";
  for (const auto& [key, field] : detail::scene_fields()) out += key + " = " + field.get(spec) + "\n";
  return out;
}

}  // namespace egonoise::evalkit
