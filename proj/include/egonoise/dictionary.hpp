#pragma once

#include <zlib.h>

#include <Eigen/Dense>

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <istream>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "egonoise/audio.hpp"
#include "egonoise/config.hpp"
#include "egonoise/error.hpp"
#include "egonoise/pca.hpp"
#include "egonoise/scm.hpp"
#include "egonoise/stft.hpp"

namespace egonoise {

static_assert(std::endian::native == std::endian::little,
              "dictionary serialization assumes a little-endian host");

// Acquisition and model parameters a dictionary was built with.
struct Fingerprint {
  std::uint64_t channels = 0;
  std::uint64_t bins = 0;
  std::uint64_t frame_size = 0;
  std::uint64_t hop = 0;
  std::uint64_t sample_rate = 0;
  std::uint64_t segment_samples = 0;
  double loading = 0.0;
  std::uint64_t pca_dims = 0;
  std::uint64_t entries = 0;

  bool operator==(const Fingerprint&) const = default;

  std::string describe() const {
    return "M=" + std::to_string(channels) + " K=" + std::to_string(bins) +
           " N=" + std::to_string(frame_size) + " hop=" + std::to_string(hop) +
           " rate=" + std::to_string(sample_rate) + " segment=" + std::to_string(segment_samples);
  }
};

struct DictionaryEntry {
  ReducedVector reduced;
  // Loaded inverse noise SCM in the flatten() layout (upper triangles).
  Supervector inverse_upper;
  // Diagonal of the loaded noise SCM, index [k * M + m].
  std::vector<double> noise_diag;
  std::size_t segment_index = 0;

  bool operator==(const DictionaryEntry& o) const {
    return reduced.values == o.reduced.values && inverse_upper.values == o.inverse_upper.values &&
           noise_diag == o.noise_diag && segment_index == o.segment_index;
  }
};

struct NoiseDictionary {
  Fingerprint fingerprint;
  PcaModel pca;
  std::vector<DictionaryEntry> entries;

  std::size_t size() const noexcept { return entries.size(); }
  std::size_t channels() const noexcept { return fingerprint.channels; }
  std::size_t bins() const noexcept { return fingerprint.bins; }

  Scm inverse_scm(std::size_t j) const {
    return unflatten(entries.at(j).inverse_upper, channels(), bins());
  }

  bool operator==(const NoiseDictionary&) const = default;
};

// Throws FingerprintError when `cfg` describes a different acquisition setup
// than the one `dict` was calibrated for. The loading factor and the PCA size
// belong to the dictionary and are not compared.
inline void check_compatible(const NoiseDictionary& dict, const EnhancerConfig& cfg) {
  Fingerprint want = dict.fingerprint;
  want.channels = cfg.channels;
  want.bins = cfg.bin_count();
  want.frame_size = cfg.frame_size;
  want.hop = cfg.hop;
  want.sample_rate = static_cast<std::uint64_t>(std::llround(cfg.sample_rate));
  want.segment_samples = cfg.segment_samples();
  if (want != dict.fingerprint)
    throw FingerprintError("dictionary fingerprint {" + dict.fingerprint.describe() +
                           "} does not match session {" + want.describe() + "}");
}

// Enhancement settings reproducing the dictionary's acquisition setup.
inline EnhancerConfig config_for(const NoiseDictionary& dict) {
  EnhancerConfig cfg;
  const auto& fp = dict.fingerprint;
  cfg.channels = fp.channels;
  cfg.frame_size = fp.frame_size;
  cfg.hop = fp.hop;
  cfg.sample_rate = static_cast<double>(fp.sample_rate);
  cfg.segment_length = static_cast<double>(fp.segment_samples) / cfg.sample_rate;
  cfg.loading = fp.loading;
  cfg.pca_dims = fp.pca_dims;
  return cfg;
}

// Segments the noise recording into J = floor(n / segment_samples)
// non-overlapping segments, each analyzed on its own frame grid starting at
// the segment boundary. The PCA size is clamped to J - 1 when the recording is
// too short for cfg.pca_dims; the fingerprint records the effective value.
inline NoiseDictionary calibrate(const MultichannelAudio& noise, const EnhancerConfig& cfg) {
  cfg.validate();
  if (noise.channel_count() != cfg.channels)
    throw ShapeError("calibration audio has " + std::to_string(noise.channel_count()) +
                     " channels, configuration expects " + std::to_string(cfg.channels));
  if (std::llround(noise.sample_rate()) != std::llround(cfg.sample_rate))
    throw ShapeError("calibration audio sample rate does not match the configuration");
  const std::size_t seg = cfg.segment_samples();
  const std::size_t J = noise.size() / seg;
  if (J < 2)
    throw TooShortError("calibration needs at least 2 segments of " + std::to_string(seg) +
                        " samples, recording has " + std::to_string(noise.size()));

  const std::size_t M = cfg.channels;
  const std::size_t K = cfg.bin_count();
  const std::size_t P = supervector_length(M, K);

  RowMatrix data(static_cast<Eigen::Index>(J), static_cast<Eigen::Index>(P));
  double max_trace = 0.0;
  for (std::size_t j = 0; j < J; ++j) {
    const Spectrogram spec = analyze(noise.slice(j * seg, seg), cfg.frame_size, cfg.hop);
    const Scm phi = estimate(spec);
    max_trace = std::max(max_trace, phi.max_trace());
    data.row(static_cast<Eigen::Index>(j)) = flatten(phi).values.transpose();
  }
  if (!(max_trace > 0.0)) throw InvalidArgument("calibration recording is digitally silent");
  const double floor = 1e-12 * max_trace / static_cast<double>(M);

  NoiseDictionary dict;
  dict.entries.resize(J);
  for (std::size_t j = 0; j < J; ++j) {
    Supervector v{data.row(static_cast<Eigen::Index>(j)).transpose()};
    const Scm phi = unflatten(v, M, K);
    auto& e = dict.entries[j];
    e.segment_index = j;
    e.inverse_upper = flatten(invert_loaded(phi, cfg.loading, floor));
    e.noise_diag.resize(K * M);
    for (std::size_t k = 0; k < K; ++k) {
      const double load = loading_amount(phi.bins[k], cfg.loading, floor);
      for (std::size_t m = 0; m < M; ++m)
        e.noise_diag[k * M + m] =
            phi.bins[k](static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m)).real() + load;
    }
  }

  const std::size_t dims = std::min({cfg.pca_dims, J - 1, P});
  dict.pca = train_in_place(data, dims);
  for (std::size_t j = 0; j < J; ++j) {
    const Eigen::VectorXd centered = data.row(static_cast<Eigen::Index>(j)).transpose();
    dict.entries[j].reduced.values = dict.pca.basis * centered;
  }

  dict.fingerprint = {M,
                      K,
                      cfg.frame_size,
                      cfg.hop,
                      static_cast<std::uint64_t>(std::llround(cfg.sample_rate)),
                      seg,
                      cfg.loading,
                      dims,
                      J};
  return dict;
}

struct Match {
  std::size_t index = 0;
  double squared_distance = 0.0;
};

// Exhaustive nearest-neighbour scan; ties go to the smallest index.
inline Match lookup(const NoiseDictionary& dict, const ReducedVector& observed) {
  if (dict.entries.empty()) throw InvalidArgument("dictionary is empty");
  if (static_cast<std::size_t>(observed.values.size()) != dict.pca.component_count())
    throw ShapeError("observed vector has " + std::to_string(observed.values.size()) +
                     " components, dictionary uses " +
                     std::to_string(dict.pca.component_count()));
  Match best{0, std::numeric_limits<double>::infinity()};
  for (std::size_t j = 0; j < dict.entries.size(); ++j) {
    const double d = (observed.values - dict.entries[j].reduced.values).squaredNorm();
    if (d < best.squared_distance) best = {j, d};
  }
  return best;
}

// ---------------------------------------------------------------------------
// Binary format, little-endian, counts as u64:
//   "EGND" | u32 version = 1
//   M K N hop sample_rate segment_samples | f64 loading | I J
//   mean[P] basis[I*P] (row-major) variance[I]            P = K*M*(M+1)
//   J x { reduced[I] inverse_upper[P] noise_diag[K*M] }
//   u32 CRC-32 of every preceding byte
// ---------------------------------------------------------------------------

inline constexpr std::array<char, 4> kDictionaryMagic{'E', 'G', 'N', 'D'};
inline constexpr std::uint32_t kDictionaryVersion = 1;

namespace detail {

class CrcWriter {
 public:
  explicit CrcWriter(std::ostream& os) : os_(os) {}
  void bytes(const void* p, std::size_t n) {
    os_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
    if (!os_) throw IoError("failed writing dictionary");
    crc_ = ::crc32(crc_, static_cast<const Bytef*>(p), static_cast<uInt>(n));
  }
  template <typename T>
  void pod(T v) { bytes(&v, sizeof(T)); }
  void reals(const double* p, std::size_t n) {
    // zlib takes uInt lengths; chunk large arrays.
    constexpr std::size_t kChunk = 1u << 24;
    for (std::size_t off = 0; off < n; off += kChunk)
      bytes(p + off, sizeof(double) * std::min(kChunk, n - off));
  }
  std::uint32_t crc() const noexcept { return static_cast<std::uint32_t>(crc_); }

 private:
  std::ostream& os_;
  uLong crc_ = ::crc32(0L, Z_NULL, 0);
};

class CrcReader {
 public:
  explicit CrcReader(std::istream& is) : is_(is) {}
  void bytes(void* p, std::size_t n, const char* field) {
    is_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(is_.gcount()) != n)
      throw FormatError("truncated", std::string("file ends inside ") + field);
    crc_ = ::crc32(crc_, static_cast<const Bytef*>(p), static_cast<uInt>(n));
  }
  template <typename T>
  T pod(const char* field) {
    T v;
    bytes(&v, sizeof(T), field);
    return v;
  }
  void reals(double* p, std::size_t n, const char* field) {
    constexpr std::size_t kChunk = 1u << 24;
    for (std::size_t off = 0; off < n; off += kChunk)
      bytes(p + off, sizeof(double) * std::min(kChunk, n - off), field);
  }
  std::uint32_t crc() const noexcept { return static_cast<std::uint32_t>(crc_); }

 private:
  std::istream& is_;
  uLong crc_ = ::crc32(0L, Z_NULL, 0);
};

}  // namespace detail

inline void save(const NoiseDictionary& dict, std::ostream& os) {
  const auto& fp = dict.fingerprint;
  const std::size_t P = supervector_length(fp.channels, fp.bins);
  const std::size_t I = dict.pca.component_count();
  if (fp.entries != dict.entries.size() || fp.pca_dims != I || dict.pca.dimension() != P)
    throw InvalidArgument("dictionary is internally inconsistent");

  detail::CrcWriter w(os);
  w.bytes(kDictionaryMagic.data(), kDictionaryMagic.size());
  w.pod(kDictionaryVersion);
  for (std::uint64_t v : {fp.channels, fp.bins, fp.frame_size, fp.hop, fp.sample_rate,
                          fp.segment_samples})
    w.pod(v);
  w.pod(fp.loading);
  w.pod(fp.pca_dims);
  w.pod(fp.entries);
  w.reals(dict.pca.mean.data(), P);
  w.reals(dict.pca.basis.data(), I * P);
  w.reals(dict.pca.explained_variance.data(), I);
  for (const auto& e : dict.entries) {
    if (static_cast<std::size_t>(e.reduced.values.size()) != I ||
        static_cast<std::size_t>(e.inverse_upper.values.size()) != P ||
        e.noise_diag.size() != fp.bins * fp.channels)
      throw InvalidArgument("dictionary entry has inconsistent sizes");
    w.reals(e.reduced.values.data(), I);
    w.reals(e.inverse_upper.values.data(), P);
    w.reals(e.noise_diag.data(), e.noise_diag.size());
  }
  const std::uint32_t crc = w.crc();
  os.write(reinterpret_cast<const char*>(&crc), sizeof crc);
  if (!os) throw IoError("failed writing dictionary checksum");
}

inline NoiseDictionary load(std::istream& is) {
  detail::CrcReader r(is);
  std::array<char, 4> magic{};
  r.bytes(magic.data(), magic.size(), "magic");
  if (magic != kDictionaryMagic) throw FormatError("magic", "not an EGND dictionary file");
  const auto version = r.pod<std::uint32_t>("version");
  if (version != kDictionaryVersion)
    throw FormatError("version", "unsupported dictionary version " + std::to_string(version));

  NoiseDictionary dict;
  auto& fp = dict.fingerprint;
  fp.channels = r.pod<std::uint64_t>("fingerprint");
  fp.bins = r.pod<std::uint64_t>("fingerprint");
  fp.frame_size = r.pod<std::uint64_t>("fingerprint");
  fp.hop = r.pod<std::uint64_t>("fingerprint");
  fp.sample_rate = r.pod<std::uint64_t>("fingerprint");
  fp.segment_samples = r.pod<std::uint64_t>("fingerprint");
  fp.loading = r.pod<double>("fingerprint");
  fp.pca_dims = r.pod<std::uint64_t>("fingerprint");
  fp.entries = r.pod<std::uint64_t>("fingerprint");
  if (fp.channels == 0 || fp.channels > 1024 || fp.frame_size < 2 || fp.frame_size > (1u << 20) ||
      !std::has_single_bit(fp.frame_size) || fp.bins != fp.frame_size / 2 + 1 || fp.hop == 0 ||
      fp.hop > fp.frame_size || fp.entries == 0 || fp.entries > (1u << 24) || fp.pca_dims == 0 ||
      fp.pca_dims > fp.entries || fp.sample_rate == 0 || !(fp.loading >= 0.0))
    throw FormatError("fingerprint", "implausible header values");

  const std::size_t P = supervector_length(fp.channels, fp.bins);
  const std::size_t I = fp.pca_dims;
  const auto Pi = static_cast<Eigen::Index>(P);
  const auto Ii = static_cast<Eigen::Index>(I);
  dict.pca.mean.resize(Pi);
  dict.pca.basis.resize(Ii, Pi);
  dict.pca.explained_variance.resize(Ii);
  r.reals(dict.pca.mean.data(), P, "PCA mean");
  r.reals(dict.pca.basis.data(), I * P, "PCA basis");
  r.reals(dict.pca.explained_variance.data(), I, "PCA variances");
  dict.entries.resize(fp.entries);
  for (std::size_t j = 0; j < fp.entries; ++j) {
    auto& e = dict.entries[j];
    e.segment_index = j;
    e.reduced.values.resize(Ii);
    e.inverse_upper.values.resize(Pi);
    e.noise_diag.resize(fp.bins * fp.channels);
    r.reals(e.reduced.values.data(), I, "entry");
    r.reals(e.inverse_upper.values.data(), P, "entry");
    r.reals(e.noise_diag.data(), e.noise_diag.size(), "entry");
  }
  const std::uint32_t expected = r.crc();
  std::uint32_t stored = 0;
  is.read(reinterpret_cast<char*>(&stored), sizeof stored);
  if (is.gcount() != sizeof stored) throw FormatError("truncated", "file ends before checksum");
  if (stored != expected) throw FormatError("checksum", "CRC-32 mismatch, file is corrupted");
  return dict;
}

}  // namespace egonoise
