#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <vector>

#include "egonoise/stft.hpp"
#include "test_support.hpp"

using namespace egonoise;
using egonoise::testing::white_noise;

namespace {

// Frame count by walking frame starts, independent of frame_count_for().
std::size_t count_frames_by_walking(std::size_t n, std::size_t frame, std::size_t hop) {
  std::size_t count = 0;
  for (std::size_t start = 0; start + frame <= n; start += hop) ++count;
  return count;
}

// O(N^2) DFT of x * hann, bins 0..N/2.
std::vector<std::complex<double>> naive_windowed_dft(const std::vector<double>& x) {
  const std::size_t n = x.size();
  std::vector<std::complex<double>> out(n / 2 + 1);
  for (std::size_t k = 0; k <= n / 2; ++k) {
    std::complex<double> acc = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      const double w = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * t / n);
      acc += w * x[t] * std::polar(1.0, -2.0 * std::numbers::pi * double(k * t % n) / n);
    }
    out[k] = acc;
  }
  return out;
}

double interior_relative_rms(const MultichannelAudio& in, const MultichannelAudio& out,
                             std::size_t frame) {
  double err = 0.0, ref = 0.0;
  for (std::size_t m = 0; m < in.channel_count(); ++m)
    for (std::size_t n = frame; n + frame < in.size(); ++n) {
      const double d = out(m, n) - in(m, n);
      err += d * d;
      ref += in(m, n) * in(m, n);
    }
  return std::sqrt(err / ref);
}

}  // namespace

TEST_CASE("frame count follows floor((n - N) / hop) + 1", "[stft]") {
  REQUIRE(count_frames_by_walking(16000, 2048, 256) == 55);
  const auto audio = white_noise(1, 16000, 1);
  const Spectrogram spec = analyze(audio, 2048, 256);
  CHECK(spec.frame_count() == 55);
  CHECK(spec.bin_count() == 1025);
  for (std::size_t n : {2048u, 2049u, 2303u, 2304u, 9999u})
    CHECK(frame_count_for(n, 2048, 256) == count_frames_by_walking(n, 2048, 256));
}

TEST_CASE("zero signal analyzes to an all-zero spectrogram", "[stft]") {
  const MultichannelAudio zero(3, 5000);
  const Spectrogram spec = analyze(zero, 512, 128);
  for (const auto& v : spec.data()) REQUIRE(v == std::complex<double>(0.0, 0.0));
}

TEST_CASE("bin-centred cosine peaks at its bin and matches a naive DFT", "[stft]") {
  constexpr std::size_t N = 256, H = 64, k0 = 19;
  constexpr double fs = 8000.0;
  MultichannelAudio audio(1, 1024, fs);
  for (std::size_t n = 0; n < audio.size(); ++n)
    audio(0, n) = std::cos(2.0 * std::numbers::pi * (k0 * fs / N) * n / fs);
  const Spectrogram spec = analyze(audio, N, H);
  const double sidelobe = std::pow(10.0, -31.5 / 20.0);
  for (std::size_t l = 0; l < spec.frame_count(); ++l) {
    std::vector<double> frame(audio.channel(0).begin() + l * H, audio.channel(0).begin() + l * H + N);
    const auto oracle = naive_windowed_dft(frame);
    double peak = 0.0;
    std::size_t argmax = 0;
    for (std::size_t k = 0; k < spec.bin_count(); ++k) {
      REQUIRE(std::abs(spec(0, l, k) - oracle[k]) < 1e-9);
      if (std::abs(spec(0, l, k)) > peak) {
        peak = std::abs(spec(0, l, k));
        argmax = k;
      }
    }
    REQUIRE(argmax == k0);
    for (std::size_t k = 0; k < spec.bin_count(); ++k)
      if (k + 1 < k0 || k > k0 + 1) REQUIRE(std::abs(spec(0, l, k)) <= sidelobe * peak);
  }
}

TEST_CASE("analysis rejects inputs shorter than a frame and bad geometry", "[stft]") {
  CHECK_THROWS_AS(analyze(MultichannelAudio(2, 100), 256, 64), TooShortError);
  CHECK_THROWS_AS(analyze(MultichannelAudio(2, 1000), 250, 50), InvalidArgument);
  CHECK_THROWS_AS(analyze(MultichannelAudio(2, 1000), 256, 300), InvalidArgument);
  CHECK_THROWS_AS(analyze(MultichannelAudio(2, 1000), 256, 96), InvalidArgument);
}

TEST_CASE("analyze then synthesize reconstructs the interior", "[stft][property]") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto audio = white_noise(1 + seed % 4, 12000 + 37 * seed, seed);
    for (auto [N, H] : {std::pair<std::size_t, std::size_t>{2048, 256}, {512, 128}, {256, 128}}) {
      const MultichannelAudio out = synthesize(analyze(audio, N, H));
      REQUIRE(out.size() == (frame_count_for(audio.size(), N, H) - 1) * H + N);
      REQUIRE(interior_relative_rms(audio, out, N) < 1e-10);
    }
  }
}

TEST_CASE("synthesis is linear", "[stft]") {
  const auto audio = white_noise(2, 6000, 3);
  Spectrogram spec = analyze(audio, 512, 128);
  const MultichannelAudio base = synthesize(spec);

  Spectrogram zero = spec;
  for (auto& v : zero.data()) v = 0.0;
  for (double v : synthesize(zero).data()) REQUIRE(v == 0.0);

  for (auto& v : spec.data()) v *= 2.0;
  const MultichannelAudio doubled = synthesize(spec);
  for (std::size_t i = 0; i < base.data().size(); ++i)
    REQUIRE(doubled.data()[i] == Catch::Approx(2.0 * base.data()[i]).margin(1e-12));
}

TEST_CASE("synthesizer rejects frames of another layout", "[stft]") {
  StftSynthesizer synth(2, 512, 128);
  CHECK_THROWS_AS(synth.push(Spectrogram(3, 4, 512, 128)), ShapeError);
  CHECK_THROWS_AS(synth.push(Spectrogram(2, 4, 256, 128)), ShapeError);
}

TEST_CASE("analysis is linear", "[stft][property]") {
  const auto u = white_noise(2, 5000, 11);
  const auto v = white_noise(2, 5000, 12);
  const double a = 0.7, b = -1.9;
  MultichannelAudio w(2, 5000);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t n = 0; n < 5000; ++n) w(i, n) = a * u(i, n) + b * v(i, n);
  const auto su = analyze(u, 512, 64), sv = analyze(v, 512, 64), sw = analyze(w, 512, 64);
  for (std::size_t i = 0; i < sw.data().size(); ++i)
    REQUIRE(std::abs(sw.data()[i] - (a * su.data()[i] + b * sv.data()[i])) < 1e-10);
}

TEST_CASE("per-frame Parseval identity", "[stft][property]") {
  const auto audio = white_noise(1, 4096, 21);
  constexpr std::size_t N = 1024, H = 256;
  const Spectrogram spec = analyze(audio, N, H);
  const auto w = hann_window(N);
  for (std::size_t l = 0; l < spec.frame_count(); ++l) {
    double time_energy = 0.0;
    for (std::size_t n = 0; n < N; ++n) time_energy += std::pow(w[n] * audio(0, l * H + n), 2);
    double spectral = 0.0;
    for (std::size_t k = 0; k < spec.bin_count(); ++k) {
      const double weight = (k == 0 || k == N / 2) ? 1.0 : 2.0;
      spectral += weight * std::norm(spec(0, l, k));
    }
    spectral /= N;
    REQUIRE(std::abs(spectral - time_energy) <= 1e-9 * time_energy);
  }
}

TEST_CASE("streaming emits frames as their support completes", "[stft][stream]") {
  const auto audio = white_noise(2, 32000, 5);
  StftAnalyzer stream(2, 2048, 256);
  const Spectrogram first = stream.push(audio.slice(0, 16000));
  const Spectrogram second = stream.push(audio.slice(16000, 16000));
  CHECK(first.frame_count() == 55);
  CHECK(second.frame_count() == 63);
  CHECK(first.frame_count() + second.frame_count() == count_frames_by_walking(32000, 2048, 256));

  const Spectrogram batch = analyze(audio, 2048, 256);
  for (std::size_t m = 0; m < 2; ++m)
    for (std::size_t l = 0; l < batch.frame_count(); ++l) {
      const auto expected = batch.frame(m, l);
      const auto got = l < 55 ? first.frame(m, l) : second.frame(m, l - 55);
      REQUIRE(std::equal(expected.begin(), expected.end(), got.begin()));
    }
}

TEST_CASE("short pushes accumulate in the backlog", "[stft][stream]") {
  StftAnalyzer stream(1, 2048, 256);
  const auto spec = stream.push(white_noise(1, 100, 2));
  CHECK(spec.frame_count() == 0);
  CHECK(stream.backlog() == 100);
  CHECK_THROWS_AS(stream.push(white_noise(2, 10, 2)), ShapeError);
}

TEST_CASE("chunked analysis equals batch analysis for any partition", "[stft][stream][property]") {
  std::mt19937_64 rng(99);
  const auto audio = white_noise(3, 9000, 7);
  const Spectrogram batch = analyze(audio, 512, 128);
  for (int trial = 0; trial < 20; ++trial) {
    StftAnalyzer stream(3, 512, 128);
    std::vector<Spectrogram> parts;
    for (std::size_t pos = 0; pos < audio.size();) {
      const std::size_t len = std::min<std::size_t>(audio.size() - pos, 1 + rng() % 1500);
      parts.push_back(stream.push(audio.slice(pos, len)));
      pos += len;
    }
    std::size_t l = 0;
    for (const auto& p : parts)
      for (std::size_t i = 0; i < p.frame_count(); ++i, ++l)
        for (std::size_t m = 0; m < 3; ++m) {
          const auto a = p.frame(m, i);
          const auto b = batch.frame(m, l);
          REQUIRE(std::equal(a.begin(), a.end(), b.begin()));
        }
    REQUIRE(l == batch.frame_count());
  }
}

TEST_CASE("streaming synthesis matches batch synthesis", "[stft][stream]") {
  const auto audio = white_noise(1, 8000, 8);
  const Spectrogram spec = analyze(audio, 512, 128);
  const MultichannelAudio batch = synthesize(spec);
  StftAnalyzer analyzer(1, 512, 128);
  StftSynthesizer synth(1, 512, 128);
  MultichannelAudio streamed(1, 0);
  for (std::size_t pos = 0; pos < audio.size(); pos += 1000)
    streamed.append(synth.push(analyzer.push(audio.slice(pos, 1000))));
  CHECK(streamed.size() == spec.frame_count() * 128);
  streamed.append(synth.flush());
  REQUIRE(streamed.size() == batch.size());
  for (std::size_t n = 0; n < batch.size(); ++n) REQUIRE(streamed(0, n) == batch(0, n));
}
