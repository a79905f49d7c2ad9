#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>
#include <vector>

#include "egonoise/evalkit/evaluate.hpp"
#include "egonoise/evalkit/metrics.hpp"
#include "egonoise/evalkit/random.hpp"
#include "egonoise/evalkit/scene.hpp"
#include "test_support.hpp"

using namespace egonoise;
using namespace egonoise::evalkit;

namespace {

SceneSpec small_scene() {
  SceneSpec s;
  s.channels = 4;
  s.sample_rate = 16000.0;
  s.duration = 3.0;
  s.chirp_high = 3000.0;
  return s;
}

EnhancerConfig scene_config() {
  EnhancerConfig cfg;
  cfg.channels = 4;
  cfg.sample_rate = 16000.0;
  cfg.frame_size = 512;
  cfg.hop = 128;
  cfg.segment_length = 0.5;
  cfg.pca_dims = 16;
  return cfg;
}

// Noise-only calibration recording: same noise states, different schedule.
const NoiseDictionary& scene_dictionary() {
  static const NoiseDictionary d = [] {
    SceneSpec s = small_scene();
    s.duration = 10.0;
    s.seed = 99;
    return calibrate(synthesize_scene(s).noise, scene_config());
  }();
  return d;
}

double oracle_snr_db(const std::vector<double>& s, const std::vector<double>& e) {
  double a = 0.0, b = 0.0;
  for (double v : s) a += v * v;
  for (double v : e) b += v * v;
  return 10.0 * std::log10(a / b);
}

std::vector<double> sine(std::size_t n, double cycles, double amp, double phase = 0.0) {
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i)
    x[i] = amp * std::sin(2.0 * std::numbers::pi * cycles * i / n + phase);
  return x;
}

}  // namespace

TEST_CASE("snr on hand-computed cases", "[evalkit][metrics]") {
  const auto s = sine(1000, 5, 1.0), e = sine(1000, 9, 1.0);
  CHECK(snr(s, e) == Catch::Approx(0.0).margin(1e-12));
  const auto s2 = sine(1000, 5, 2.0);
  CHECK(snr(s2, e) == Catch::Approx(6.0206).margin(1e-4));
  CHECK(snr(s2, e) == Catch::Approx(oracle_snr_db(s2, e)).margin(1e-12));
  CHECK(snr(s, std::vector<double>(1000, 0.0)) == kMetricCap);
  CHECK_THROWS_AS(snr(std::vector<double>(1000, 0.0), e), InvalidArgument);
  CHECK_THROWS_AS(snr(s, std::vector<double>(999, 1.0)), LengthMismatch);
}

TEST_CASE("sdr on hand-computed cases", "[evalkit][metrics]") {
  const auto s = sine(1000, 5, 1.0), n = sine(1000, 9, 1.0);
  std::vector<double> three(1000), sum(1000), neg(1000);
  for (std::size_t i = 0; i < 1000; ++i) {
    three[i] = 3.0 * s[i];
    sum[i] = s[i] + n[i];
  }
  CHECK(sdr(three, s) == kMetricCap);
  CHECK(sdr(n, s) == -kMetricCap);
  CHECK(sdr(sum, s) == Catch::Approx(0.0).margin(1e-10));
  CHECK_THROWS_AS(sdr(s, std::vector<double>(1000, 0.0)), InvalidArgument);
  CHECK_THROWS_AS(sdr(s, std::vector<double>(10, 1.0)), LengthMismatch);
}

TEST_CASE("metrics are scale invariant", "[evalkit][metrics][property]") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  std::vector<double> a(500), b(500);
  for (auto& v : a) v = g(rng);
  for (std::size_t i = 0; i < 500; ++i) b[i] = 0.7 * a[i] + 0.3 * g(rng);
  const double base_snr = snr(a, b), base_sdr = sdr(b, a);
  for (double c : {1e-3, 0.5, 4.0, 1e3}) {
    std::vector<double> ca(a), cb(b);
    for (auto& v : ca) v *= c;
    for (auto& v : cb) v *= c;
    CHECK(snr(ca, cb) == Catch::Approx(base_snr).margin(1e-9));
    CHECK(sdr(cb, ca) == Catch::Approx(base_sdr).margin(1e-9));
    CHECK(sdr(cb, a) == Catch::Approx(base_sdr).margin(1e-9));
  }
}

TEST_CASE("random streams are reproducible", "[evalkit][rng]") {
  Rng a = Rng::derive(5, 1), b = Rng::derive(5, 1), c = Rng::derive(5, 2);
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const double x = a.normal();
    REQUIRE(x == b.normal());
    differs |= x != c.normal();
  }
  CHECK(differs);
  Rng u = Rng::derive(1, 1);
  double mean = 0.0;
  for (int i = 0; i < 20000; ++i) {
    const double v = u.uniform();
    REQUIRE(v >= 0.0);
    REQUIRE(v < 1.0);
    mean += v;
  }
  CHECK(mean / 20000 == Catch::Approx(0.5).margin(0.01));
}

TEST_CASE("scenes are exactly additive", "[evalkit][scene]") {
  const Scene scene = synthesize_scene(small_scene());
  REQUIRE(scene.mixture.size() == 48000);
  REQUIRE(scene.mixture.channel_count() == 4);
  for (std::size_t m = 0; m < 4; ++m)
    for (std::size_t n = 0; n < scene.mixture.size(); ++n)
      REQUIRE(scene.mixture(m, n) - scene.clean(m, n) - scene.noise(m, n) == 0.0);
  // Float32-representable so the identity survives a WAV round trip.
  for (double v : scene.mixture.data()) REQUIRE(static_cast<double>(static_cast<float>(v)) == v);
}

TEST_CASE("requested input SNR is met on channel 0", "[evalkit][scene]") {
  for (double target : {0.0, -10.0, 7.5}) {
    SceneSpec spec = small_scene();
    spec.input_snr_db = target;
    const Scene scene = synthesize_scene(spec);
    const std::vector<double> s(scene.clean.channel(0).begin(), scene.clean.channel(0).end());
    const std::vector<double> e(scene.noise.channel(0).begin(), scene.noise.channel(0).end());
    CHECK(oracle_snr_db(s, e) == Catch::Approx(target).margin(0.01));
  }
}

TEST_CASE("raising the requested SNR by 10 dB raises the measured SNR by 10 dB", "[evalkit][scene][property]") {
  SceneSpec lo = small_scene(), hi = small_scene();
  lo.input_snr_db = -5.0;
  hi.input_snr_db = 5.0;
  const Scene a = synthesize_scene(lo), b = synthesize_scene(hi);
  for (std::size_t m = 0; m < 4; ++m) {
    const double da = snr(a.clean.channel(m), a.noise.channel(m));
    const double db = snr(b.clean.channel(m), b.noise.channel(m));
    CHECK(db - da == Catch::Approx(10.0).margin(0.1));
  }
}

TEST_CASE("scene synthesis is deterministic", "[evalkit][scene]") {
  const Scene a = synthesize_scene(small_scene()), b = synthesize_scene(small_scene());
  CHECK(a.mixture == b.mixture);
  CHECK(a.clean == b.clean);
  CHECK(a.noise == b.noise);
  SceneSpec other = small_scene();
  other.seed = 8;
  CHECK_FALSE(synthesize_scene(other).noise == a.noise);
}

TEST_CASE("the target arrives later at farther microphones", "[evalkit][scene]") {
  SceneSpec spec = small_scene();
  spec.target_azimuth_rate = 0.0;
  spec.target = "chirp";
  const Scene scene = synthesize_scene(spec);
  const auto mics = microphone_positions(spec);
  const double az = spec.target_azimuth * std::numbers::pi / 180.0;
  const Point src{spec.target_distance * std::cos(az), spec.target_distance * std::sin(az), 0.0};
  auto dist = [](const Point& a, const Point& b) {
    return std::sqrt((a[0] - b[0]) * (a[0] - b[0]) + (a[1] - b[1]) * (a[1] - b[1]) +
                     (a[2] - b[2]) * (a[2] - b[2]));
  };
  // Cross-correlation peak between channel 0 and the farthest microphone.
  std::size_t far = 0;
  for (std::size_t m = 1; m < mics.size(); ++m)
    if (dist(mics[m], src) > dist(mics[far], src)) far = m;
  const double expected = (dist(mics[far], src) - dist(mics[0], src)) /
                          kSpeedOfSound * spec.sample_rate;
  int best_lag = 0;
  double best = -1.0;
  for (int lag = -20; lag <= 20; ++lag) {
    double acc = 0.0;
    for (std::size_t n = 100; n + 100 < scene.clean.size(); ++n)
      acc += scene.clean(0, n) * scene.clean(far, static_cast<std::size_t>(static_cast<int>(n) + lag));
    if (acc > best) {
      best = acc;
      best_lag = lag;
    }
  }
  CHECK(std::abs(best_lag - expected) <= 1.0);
}

TEST_CASE("invalid geometry is rejected", "[evalkit][scene]") {
  SceneSpec spec = small_scene();
  spec.array_radius = 0.0;
  CHECK_THROWS_AS(synthesize_scene(spec), InvalidArgument);
  spec = small_scene();
  spec.target_distance = 0.1;
  CHECK_THROWS_AS(synthesize_scene(spec), InvalidArgument);
  spec = small_scene();
  spec.channels = 1;
  CHECK_THROWS_AS(synthesize_scene(spec), InvalidArgument);
}

TEST_CASE("scene specs round trip through text", "[evalkit][scene][io]") {
  SceneSpec spec = small_scene();
  spec.input_snr_db = -3.25;
  spec.target = "multitone";
  spec.seed = 123456789012345ULL;
  spec.array_radius = 0.1 + 0.2;  // not exactly representable in short decimal
  std::istringstream is(to_text(spec));
  const SceneSpec back = parse_scene(is);
  CHECK(to_text(back) == to_text(spec));
  CHECK(back.array_radius == spec.array_radius);
  CHECK(back.seed == spec.seed);
}

TEST_CASE("scene spec parse errors carry the line number", "[evalkit][scene][io]") {
  auto line_of = [](const std::string& text) -> std::size_t {
    std::istringstream is(text);
    try {
      parse_scene(is);
    } catch (const ParseError& e) {
      return e.line();
    }
    return 0;
  };
  CHECK(line_of("egonoise-scene 1\nchannels = 4\nbogus = 1\n") == 3);
  CHECK(line_of("# comment\negonoise-scene 1\n\nduration = abc\n") == 4);
  CHECK(line_of("egonoise-scene 1\nchannels 4\n") == 2);
  CHECK(line_of("egonoise-scene 1\nchannels = -4\n") == 2);
  CHECK(line_of("egonoise-scene 2\n") == 1);
  CHECK(line_of("") == 1);
  std::istringstream ok("egonoise-scene 1\n  channels = 6   # six\n");
  CHECK(parse_scene(ok).channels == 6);
}

TEST_CASE("evaluation decomposes the output exactly", "[evalkit][evaluate]") {
  const Scene scene = synthesize_scene(small_scene());
  const MetricReport r = evaluate_run(scene.mixture, scene.clean, scene.noise, scene_dictionary(), scene_config());
  REQUIRE(r.segments.size() == 6);
  CHECK(r.decomposition_error < 1e-12);
  for (std::size_t n = 0; n < r.enhanced.size(); ++n)
    REQUIRE(std::abs(r.enhanced(0, n) - r.enhanced_clean(0, n) - r.enhanced_noise(0, n)) < 1e-12);
  REQUIRE(r.aggregate.has_value());
  CHECK(r.aggregate->segments > 0);
  // Input metrics read from the reference microphone match an independent computation.
  const auto& s0 = r.segments[1];
  const auto c = s0.comparison_channel;
  const std::vector<double> cs(scene.clean.channel(c).begin() + s0.start,
                               scene.clean.channel(c).begin() + s0.start + s0.length);
  const std::vector<double> ns(scene.noise.channel(c).begin() + s0.start,
                               scene.noise.channel(c).begin() + s0.start + s0.length);
  CHECK(*s0.input_snr == Catch::Approx(oracle_snr_db(cs, ns)).margin(1e-9));
  CHECK(s0.comparison_channel == s0.reference_channel);
}

TEST_CASE("best-channel comparison uses one fixed microphone", "[evalkit][evaluate]") {
  const Scene scene = synthesize_scene(small_scene());
  const MetricReport r = evaluate_run(scene.mixture, scene.clean, scene.noise, scene_dictionary(),
                                      scene_config(), Comparison::best);
  const std::size_t best = best_input_channel(scene.clean, scene.noise);
  for (const auto& s : r.segments) CHECK(s.comparison_channel == best);
}

TEST_CASE("a noise-free mixture passes the target through", "[evalkit][evaluate]") {
  const Scene scene = synthesize_scene(small_scene());
  const MultichannelAudio zero(4, scene.clean.size(), 16000.0);
  const MetricReport r = evaluate_run(scene.clean, scene.clean, zero, scene_dictionary(), scene_config());
  REQUIRE(r.aggregate.has_value());
  CHECK(r.aggregate->input_snr == kMetricCap);
  CHECK(r.aggregate->output_snr == kMetricCap);
  CHECK(r.aggregate->output_sdr > 10.0);
}

TEST_CASE("an all-zero target makes every segment silent", "[evalkit][evaluate]") {
  const Scene scene = synthesize_scene(small_scene());
  const MultichannelAudio zero(4, scene.noise.size(), 16000.0);
  const MetricReport r = evaluate_run(scene.noise, zero, scene.noise, scene_dictionary(), scene_config());
  CHECK_FALSE(r.aggregate.has_value());
  for (const auto& s : r.segments) {
    CHECK(s.silent);
    CHECK_FALSE(s.input_snr.has_value());
  }
}

TEST_CASE("quiet segments are excluded from the aggregate", "[evalkit][evaluate]") {
  const Scene scene = synthesize_scene(small_scene());
  MultichannelAudio clean = scene.clean, mix = scene.mixture;
  for (std::size_t m = 0; m < 4; ++m)
    for (std::size_t n = 8000; n < 16000; ++n) {
      clean(m, n) *= 1e-3;
      mix(m, n) = clean(m, n) + scene.noise(m, n);
    }
  const MetricReport r = evaluate_run(mix, clean, scene.noise, scene_dictionary(), scene_config());
  CHECK(r.segments[1].silent);
  CHECK_FALSE(r.segments[0].silent);
  CHECK(r.aggregate->segments == 5);
}

TEST_CASE("misaligned recordings are rejected", "[evalkit][evaluate]") {
  const Scene scene = synthesize_scene(small_scene());
  CHECK_THROWS_AS(evaluate_run(scene.mixture, scene.clean.slice(0, 40000), scene.noise,
                               scene_dictionary(), scene_config()),
                  LengthMismatch);
}

TEST_CASE("the shipped sample scene spells out the defaults", "[evalkit][scene][io]") {
  const SceneSpec spec = parse_scene_file(std::string(EGONOISE_SAMPLES_DIR) + "/default_scene.cfg");
  CHECK(to_text(spec) == to_text(SceneSpec{}));
  CHECK_THROWS_AS(parse_scene_file(std::string(EGONOISE_SAMPLES_DIR) + "/missing.cfg"), IoError);
}
