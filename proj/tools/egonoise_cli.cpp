// egonoise: calibrate, enhance, eval and synth subcommands.

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "egonoise/egonoise.hpp"
#include "egonoise/evalkit/evaluate.hpp"
#include "egonoise/evalkit/scene.hpp"
#include "egonoise/io/pgm.hpp"
#include "egonoise/io/wav.hpp"

namespace {

using namespace egonoise;

enum ExitCode : int {
  kOk = 0,
  kInternal = 1,
  kUsage = 2,
  kUnreadableInput = 3,
  kTooFewChannels = 4,
  kTooShort = 5,
  kBadDictionary = 6,
  kFingerprint = 7,
  kLengthMismatch = 8,
  kSpecParse = 9,
  kWriteFailed = 10,
  kInvalidArgument = 11,
};

constexpr const char* kExitCodeTable =
    "Exit codes:\n"
    "   0  success\n"
    "   1  internal error\n"
    "   2  usage error (unknown flag, missing or malformed option)\n"
    "   3  input file missing or unreadable\n"
    "   4  too few channels (calibration needs at least 2)\n"
    "   5  recording too short (calibration needs 2 segments)\n"
    "   6  dictionary file invalid (magic, version, truncation, checksum)\n"
    "   7  dictionary fingerprint does not match the input\n"
    "   8  length or shape mismatch between inputs\n"
    "   9  scene spec parse error\n"
    "  10  cannot write output\n"
    "  11  invalid argument value\n"
    "Errors are printed to stderr as '<code>: <message>'.";

struct CliFailure {
  int code;
  std::string message;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string num(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string opt_num(const std::optional<double>& v) { return v ? num(*v) : std::string(); }

MultichannelAudio read_input(const std::string& path) {
  try {
    return io::read_wav(path);
  } catch (const IoError& e) {
    throw CliFailure{kUnreadableInput, e.what()};
  }
}

NoiseDictionary read_dictionary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CliFailure{kUnreadableInput, "cannot open dictionary '" + path + "'"};
  try {
    return load(in);
  } catch (const FormatError& e) {
    throw CliFailure{kBadDictionary, "'" + path + "': " + e.what()};
  }
}

template <typename Fn>
void write_output(const std::string& what, Fn&& fn) {
  try {
    fn();
  } catch (const IoError& e) {
    throw CliFailure{kWriteFailed, what + ": " + e.what()};
  }
}

void write_text(const std::string& path, const std::string& text) {
  write_output(path, [&] {
    std::ofstream os(path);
    if (!os) throw IoError("cannot create file");
    os << text;
    if (!os) throw IoError("write failed");
  });
}

// Enhancement settings for `input` under `dict`; a mismatch surfaces as a
// fingerprint error when the session is created.
EnhancerConfig session_config(const NoiseDictionary& dict, const MultichannelAudio& input,
                              const std::string& reference) {
  EnhancerConfig cfg = config_for(dict);
  cfg.channels = input.channel_count();
  cfg.sample_rate = input.sample_rate();
  if (reference != "auto") {
    try {
      std::size_t used = 0;
      const unsigned long idx = std::stoul(reference, &used);
      if (used != reference.size()) throw std::invalid_argument(reference);
      cfg.fixed_reference = idx;
    } catch (const std::exception&) {
      throw CliFailure{kInvalidArgument, "--reference must be 'auto' or a channel index"};
    }
  }
  return cfg;
}

struct CalibrateArgs {
  std::string noise, out;
  double segment = 0.5;
  std::size_t pca_dims = 32;
  double loading = 1e-3;
  std::size_t frame = 2048;
  std::size_t hop = 256;
  std::optional<double> rate;
};

int cmd_calibrate(const CalibrateArgs& a) {
  auto t0 = std::chrono::steady_clock::now();
  const MultichannelAudio noise = read_input(a.noise);
  const double t_read = seconds_since(t0);
  if (noise.channel_count() < 2)
    throw CliFailure{kTooFewChannels, "'" + a.noise + "' has " +
                                          std::to_string(noise.channel_count()) +
                                          " channel(s), calibration needs at least 2"};
  if (a.rate && std::llround(*a.rate) != std::llround(noise.sample_rate()))
    throw CliFailure{kInvalidArgument, "'" + a.noise + "' is sampled at " +
                                           num(noise.sample_rate(), 0) + " Hz, --rate asks for " +
                                           num(*a.rate, 0)};
  EnhancerConfig cfg;
  cfg.channels = noise.channel_count();
  cfg.sample_rate = noise.sample_rate();
  cfg.segment_length = a.segment;
  cfg.pca_dims = a.pca_dims;
  cfg.loading = a.loading;
  cfg.frame_size = a.frame;
  cfg.hop = a.hop;

  t0 = std::chrono::steady_clock::now();
  const NoiseDictionary dict = calibrate(noise, cfg);
  const double t_cal = seconds_since(t0);

  t0 = std::chrono::steady_clock::now();
  write_output(a.out, [&] {
    std::ofstream os(a.out, std::ios::binary);
    if (!os) throw IoError("cannot create file");
    save(dict, os);
  });
  const double t_write = seconds_since(t0);

  std::cout << "entries (J):    " << dict.size() << "\n"
            << "pca dims (I):   " << dict.pca.component_count() << "\n"
            << "channels (M):   " << dict.channels() << "\n"
            << "bins (K):       " << dict.bins() << "\n"
            << "file bytes:     " << std::filesystem::file_size(a.out) << "\n"
            << "read:           " << num(t_read, 3) << " s\n"
            << "calibrate:      " << num(t_cal, 3) << " s\n"
            << "write:          " << num(t_write, 3) << " s\n";
  return kOk;
}

struct EnhanceArgs {
  std::string input, dict, out, report, spectrograms;
  std::string reference = "auto";
};

int cmd_enhance(const EnhanceArgs& a) {
  const NoiseDictionary dict = read_dictionary(a.dict);
  const MultichannelAudio input = read_input(a.input);
  const EnhancerConfig cfg = session_config(dict, input, a.reference);
  const StreamResult result = enhance_stream(input, dict, cfg);

  write_output(a.out, [&] { io::write_wav(a.out, result.audio); });
  std::string csv = "segment,j_star,reference_channel,distance,wall_ms\n";
  double wall = 0.0;
  for (const auto& r : result.reports) {
    csv += std::to_string(r.segment) + "," + std::to_string(r.selected) + "," +
           std::to_string(r.reference_channel) + "," + num(r.distance, 6) + "," +
           num(r.wall_ms, 3) + "\n";
    wall += r.wall_ms;
  }
  write_text(a.report, csv);

  if (!a.spectrograms.empty()) {
    write_output(a.spectrograms, [&] {
      std::filesystem::create_directories(a.spectrograms);
      const std::filesystem::path dir(a.spectrograms);
      if (input.size() >= cfg.frame_size)
        io::write_spectrogram_pgm((dir / "input.pgm").string(),
                                  analyze(input, cfg.frame_size, cfg.hop), 0);
      if (result.audio.size() >= cfg.frame_size)
        io::write_spectrogram_pgm((dir / "output.pgm").string(),
                                  analyze(result.audio, cfg.frame_size, cfg.hop), 0);
    });
  }
  const double mean_ms = result.reports.empty() ? 0.0 : wall / static_cast<double>(result.reports.size());
  std::cout << "segments:       " << result.reports.size() << "\n"
            << "output samples: " << result.audio.size() << "\n"
            << "mean wall_ms:   " << num(mean_ms, 3) << " (segment is "
            << num(1000.0 * cfg.segment_length, 1) << " ms)\n";
  return kOk;
}

struct EvalArgs {
  std::string mix, clean, noise, dict, out;
  std::string comparison = "reference";
  std::string reference = "auto";
};

int cmd_eval(const EvalArgs& a) {
  const NoiseDictionary dict = read_dictionary(a.dict);
  const MultichannelAudio mix = read_input(a.mix);
  const MultichannelAudio clean = read_input(a.clean);
  const MultichannelAudio noise = read_input(a.noise);
  const EnhancerConfig cfg = session_config(dict, mix, a.reference);
  const auto comparison =
      a.comparison == "best" ? evalkit::Comparison::best : evalkit::Comparison::reference;
  const evalkit::MetricReport rep = evalkit::evaluate_run(mix, clean, noise, dict, cfg, comparison);

  std::string csv =
      "segment,start_s,silent,input_snr_db,output_snr_db,input_sdr_db,output_sdr_db,j_star,"
      "reference_channel,comparison_channel,wall_ms\n";
  for (const auto& s : rep.segments) {
    csv += std::to_string(s.segment) + "," + num(static_cast<double>(s.start) / cfg.sample_rate, 3) +
           "," + (s.silent ? "1" : "0") + "," + opt_num(s.input_snr) + "," + opt_num(s.output_snr) +
           "," + opt_num(s.input_sdr) + "," + opt_num(s.output_sdr) + "," +
           std::to_string(s.selected) + "," + std::to_string(s.reference_channel) + "," +
           std::to_string(s.comparison_channel) + "," + num(s.wall_ms, 3) + "\n";
  }
  // Footer: means over non-silent segments; the silent column holds the count.
  if (rep.aggregate) {
    const auto& g = *rep.aggregate;
    csv += "mean,," + std::to_string(g.segments) + "," + num(g.input_snr) + "," +
           num(g.output_snr) + "," + num(g.input_sdr) + "," + num(g.output_sdr) + ",,,," +
           num(rep.mean_wall_ms, 3) + "\n";
  } else {
    csv += "mean,,0,,,,,,,," + num(rep.mean_wall_ms, 3) + "\n";
  }
  write_text(a.out, csv);

  if (rep.aggregate) {
    const auto& g = *rep.aggregate;
    std::cout << "scored segments: " << g.segments << " of " << rep.segments.size() << "\n"
              << "SNR: " << num(g.input_snr, 2) << " -> " << num(g.output_snr, 2) << " dB ("
              << num(g.snr_gain(), 2) << " dB)\n"
              << "SDR: " << num(g.input_sdr, 2) << " -> " << num(g.output_sdr, 2) << " dB ("
              << num(g.sdr_gain(), 2) << " dB)\n";
  } else {
    std::cerr << "warning: every segment is silent, aggregates are empty\n";
  }
  std::cout << "mean wall_ms: " << num(rep.mean_wall_ms, 3) << "\n";
  return kOk;
}

struct SynthArgs {
  std::string spec, prefix;
  std::optional<std::uint64_t> seed;
  std::optional<double> duration;
  std::optional<double> snr;
};

int cmd_synth(const SynthArgs& a) {
  evalkit::SceneSpec spec;
  if (!a.spec.empty()) {
    try {
      spec = evalkit::parse_scene_file(a.spec);
    } catch (const ParseError& e) {
      throw CliFailure{kSpecParse, "'" + a.spec + "' " + e.what()};
    } catch (const IoError& e) {
      throw CliFailure{kUnreadableInput, e.what()};
    }
  }
  if (a.seed) spec.seed = *a.seed;
  if (a.duration) spec.duration = *a.duration;
  if (a.snr) spec.input_snr_db = *a.snr;
  const evalkit::Scene scene = evalkit::synthesize_scene(spec);
  write_output(a.prefix, [&] {
    io::write_wav(a.prefix + "_mix.wav", scene.mixture);
    io::write_wav(a.prefix + "_clean.wav", scene.clean);
    io::write_wav(a.prefix + "_noise.wav", scene.noise);
  });
  std::cout << "wrote " << a.prefix << "_{mix,clean,noise}.wav (" << spec.channels << " ch, "
            << scene.mixture.size() << " samples)\n"
            << "channel 0 input SNR: "
            << num(evalkit::snr(scene.clean.channel(0), scene.noise.channel(0)), 3) << " dB\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Ego-noise reduction with a PCA-indexed dictionary of noise covariance matrices"};
  app.footer(kExitCodeTable);
  app.require_subcommand(1);

  CalibrateArgs cal;
  auto* c = app.add_subcommand("calibrate", "Build a noise dictionary from an ego-noise recording");
  c->add_option("--noise", cal.noise, "Multichannel ego-noise WAV")->required();
  c->add_option("--out", cal.out, "Dictionary file to write")->required();
  c->add_option("--segment", cal.segment, "Segment length in seconds")->capture_default_str();
  c->add_option("--pca-dims", cal.pca_dims, "PCA components")->capture_default_str();
  c->add_option("--loading", cal.loading, "Relative diagonal loading")->capture_default_str();
  c->add_option("--frame", cal.frame, "STFT frame size (power of two)")->capture_default_str();
  c->add_option("--hop", cal.hop, "STFT hop size")->capture_default_str();
  c->add_option("--rate", cal.rate, "Expected sample rate in Hz");

  EnhanceArgs enh;
  auto* e = app.add_subcommand("enhance", "Enhance a recording with a calibrated dictionary");
  e->add_option("--input", enh.input, "Multichannel input WAV")->required();
  e->add_option("--dict", enh.dict, "Dictionary file")->required();
  e->add_option("--out", enh.out, "Enhanced mono WAV")->required();
  e->add_option("--report", enh.report, "Per-segment CSV report")->required();
  e->add_option("--spectrograms", enh.spectrograms,
                "Directory for input.pgm/output.pgm (channel 0, -80..0 dB)");
  e->add_option("--reference", enh.reference, "Reference microphone: auto or an index")
      ->capture_default_str();

  EvalArgs ev;
  auto* v = app.add_subcommand("eval", "Score enhancement on separately available stems");
  v->add_option("--mix", ev.mix, "Mixture WAV")->required();
  v->add_option("--clean", ev.clean, "Clean target WAV")->required();
  v->add_option("--noise", ev.noise, "Noise-only WAV")->required();
  v->add_option("--dict", ev.dict, "Dictionary file")->required();
  v->add_option("--out", ev.out, "Metrics CSV")->required();
  v->add_option("--comparison", ev.comparison, "Input metric channel: reference or best")
      ->check(CLI::IsMember({"reference", "best"}))
      ->capture_default_str();
  v->add_option("--reference", ev.reference, "Reference microphone: auto or an index")
      ->capture_default_str();

  SynthArgs syn;
  auto* s = app.add_subcommand("synth", "Render a synthetic mixture/clean/noise scene");
  s->add_option("--spec", syn.spec, "Scene spec file (defaults when omitted)");
  s->add_option("--out-prefix", syn.prefix, "Output path prefix")->required();
  s->add_option("--seed", syn.seed, "Override the realization seed");
  s->add_option("--duration", syn.duration, "Override the duration in seconds");
  s->add_option("--snr", syn.snr, "Override the channel-0 input SNR in dB");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& ex) {
    return app.exit(ex);
  } catch (const CLI::CallForAllHelp& ex) {
    return app.exit(ex);
  } catch (const CLI::ParseError& ex) {
    std::cerr << kUsage << ": " << ex.what() << "\n";
    return kUsage;
  }

  try {
    if (*c) return cmd_calibrate(cal);
    if (*e) return cmd_enhance(enh);
    if (*v) return cmd_eval(ev);
    if (*s) return cmd_synth(syn);
  } catch (const CliFailure& f) {
    std::cerr << f.code << ": " << f.message << "\n";
    return f.code;
  } catch (const FingerprintError& ex) {
    std::cerr << kFingerprint << ": " << ex.what() << "\n";
    return kFingerprint;
  } catch (const TooShortError& ex) {
    std::cerr << kTooShort << ": " << ex.what() << "\n";
    return kTooShort;
  } catch (const LengthMismatch& ex) {
    std::cerr << kLengthMismatch << ": " << ex.what() << "\n";
    return kLengthMismatch;
  } catch (const ShapeError& ex) {
    std::cerr << kLengthMismatch << ": " << ex.what() << "\n";
    return kLengthMismatch;
  } catch (const InvalidArgument& ex) {
    std::cerr << kInvalidArgument << ": " << ex.what() << "\n";
    return kInvalidArgument;
  } catch (const std::exception& ex) {
    std::cerr << kInternal << ": " << ex.what() << "\n";
    return kInternal;
  }
  return kUsage;
}
