#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <vector>

#include "egonoise/error.hpp"
#include "egonoise/stft.hpp"

namespace egonoise {

// Per-frequency-bin M x M Hermitian spatial covariance matrices.
struct Scm {
  std::size_t channels = 0;
  std::size_t frame_count = 0;  // L frames behind the average, 0 if not estimated
  std::vector<Eigen::MatrixXcd> bins;

  static Scm zeros(std::size_t channels, std::size_t bin_count) {
    Scm s;
    s.channels = channels;
    s.bins.assign(bin_count, Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(channels),
                                                   static_cast<Eigen::Index>(channels)));
    return s;
  }

  std::size_t bin_count() const noexcept { return bins.size(); }

  Scm scaled(double alpha) const {
    Scm s = *this;
    for (auto& b : s.bins) b *= alpha;
    return s;
  }

  double max_trace() const {
    double t = 0.0;
    for (const auto& b : bins) t = std::max(t, b.trace().real());
    return t;
  }

  bool operator==(const Scm& o) const {
    if (channels != o.channels || bins.size() != o.bins.size()) return false;
    for (std::size_t k = 0; k < bins.size(); ++k)
      if (bins[k] != o.bins[k]) return false;
    return true;
  }
};

// Real embedding of the upper triangles of an Scm, see flatten().
struct Supervector {
  Eigen::VectorXd values;
};

constexpr std::size_t triangle_size(std::size_t channels) noexcept {
  return channels * (channels + 1) / 2;
}

// K * M * (M + 1) reals.
constexpr std::size_t supervector_length(std::size_t channels, std::size_t bins) noexcept {
  return 2 * bins * triangle_size(channels);
}

namespace detail {
// Copies the upper triangle onto the lower one and zeroes Im(diagonal), so the
// result is exactly Hermitian.
inline void make_hermitian(Eigen::MatrixXcd& a) {
  const Eigen::Index n = a.rows();
  for (Eigen::Index i = 0; i < n; ++i) {
    a(i, i) = {a(i, i).real(), 0.0};
    for (Eigen::Index j = i + 1; j < n; ++j) a(j, i) = std::conj(a(i, j));
  }
}
}  // namespace detail

// Mean of X[k,l] X[k,l]^H over frames [frame_begin, frame_end).
inline Scm estimate(const Spectrogram& spec, std::size_t frame_begin, std::size_t frame_end) {
  if (frame_end <= frame_begin) throw InvalidArgument("empty frame range");
  if (frame_end > spec.frame_count())
    throw ShapeError("frame range exceeds the spectrogram (" +
                     std::to_string(spec.frame_count()) + " frames)");
  const std::size_t m_count = spec.channel_count();
  const std::size_t k_count = spec.bin_count();
  const std::size_t l_count = frame_end - frame_begin;
  const auto M = static_cast<Eigen::Index>(m_count);
  const auto L = static_cast<Eigen::Index>(l_count);

  Scm out = Scm::zeros(m_count, k_count);
  out.frame_count = l_count;
  Eigen::MatrixXcd x(M, L);
  for (std::size_t k = 0; k < k_count; ++k) {
    for (std::size_t m = 0; m < m_count; ++m)
      for (std::size_t l = 0; l < l_count; ++l)
        x(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(l)) = spec(m, frame_begin + l, k);
    auto& phi = out.bins[k];
    phi.noalias() = x * x.adjoint();
    phi /= static_cast<double>(l_count);
    detail::make_hermitian(phi);
  }
  return out;
}

inline Scm estimate(const Spectrogram& spec) { return estimate(spec, 0, spec.frame_count()); }

// Layout: ascending bin, then row-major upper triangle (i <= j), each entry
// stored as (Re, Im). The Euclidean norm equals the complex norm.
inline Supervector flatten(const Scm& scm) {
  const std::size_t m_count = scm.channels;
  Supervector v;
  v.values.resize(static_cast<Eigen::Index>(supervector_length(m_count, scm.bin_count())));
  Eigen::Index p = 0;
  for (const auto& b : scm.bins) {
    for (Eigen::Index i = 0; i < b.rows(); ++i)
      for (Eigen::Index j = i; j < b.cols(); ++j) {
        v.values[p++] = b(i, j).real();
        v.values[p++] = i == j ? 0.0 : b(i, j).imag();
      }
  }
  return v;
}

inline Scm unflatten(const Supervector& v, std::size_t channels, std::size_t bins) {
  const std::size_t expected = supervector_length(channels, bins);
  if (static_cast<std::size_t>(v.values.size()) != expected)
    throw ShapeError("supervector has length " + std::to_string(v.values.size()) +
                     ", expected " + std::to_string(expected));
  Scm out = Scm::zeros(channels, bins);
  Eigen::Index p = 0;
  for (auto& b : out.bins) {
    for (Eigen::Index i = 0; i < b.rows(); ++i)
      for (Eigen::Index j = i; j < b.cols(); ++j) {
        const double re = v.values[p++];
        const double im = v.values[p++];
        if (i == j && im != 0.0)
          throw InvalidArgument("supervector has a non-zero imaginary diagonal entry");
        b(i, j) = {re, im};
      }
    detail::make_hermitian(b);
  }
  return out;
}

// Diagonal loading applied to one bin: max(delta * tr/M, floor).
inline double loading_amount(const Eigen::MatrixXcd& phi, double delta, double absolute_floor) {
  const double mean_power = phi.trace().real() / static_cast<double>(phi.rows());
  return std::max(delta * mean_power, absolute_floor);
}

// Per bin: Phi + max(delta * tr(Phi)/M, floor) * I.
inline Scm load_diagonal(const Scm& scm, double delta, double absolute_floor = 0.0) {
  if (delta < 0.0 || absolute_floor < 0.0) throw InvalidArgument("loading must be non-negative");
  Scm out = scm;
  for (auto& b : out.bins)
    b.diagonal().array() += loading_amount(b, delta, absolute_floor);
  return out;
}

// Per bin: (Phi + max(delta * tr(Phi)/M, floor) * I)^-1, Hermitian positive
// definite. A bin that is still singular after loading (zero matrix with a
// zero floor, or delta = 0 on a rank-deficient bin) gets its loading raised
// by decades until the Cholesky factorization succeeds.
inline Scm invert_loaded(const Scm& scm, double delta, double absolute_floor = 0.0) {
  if (delta < 0.0 || absolute_floor < 0.0) throw InvalidArgument("loading must be non-negative");
  Scm out = scm;
  out.frame_count = scm.frame_count;
  const auto M = static_cast<Eigen::Index>(scm.channels);
  const Eigen::MatrixXcd eye = Eigen::MatrixXcd::Identity(M, M);
  for (std::size_t k = 0; k < scm.bin_count(); ++k) {
    const auto& phi = scm.bins[k];
    double load = loading_amount(phi, delta, absolute_floor);
    const double mean_power = phi.trace().real() / static_cast<double>(M);
    Eigen::LLT<Eigen::MatrixXcd> llt;
    for (int attempt = 0;; ++attempt) {
      Eigen::MatrixXcd loaded = phi;
      loaded.diagonal().array() += load;
      llt.compute(loaded);
      if (llt.info() == Eigen::Success || attempt == 64) break;
      load = std::max({load * 10.0, 1e-12 * mean_power, 1e-30});
    }
    Eigen::MatrixXcd inv = llt.solve(eye);
    inv = (0.5 * (inv + inv.adjoint())).eval();
    detail::make_hermitian(inv);
    out.bins[k] = std::move(inv);
  }
  return out;
}

inline double hermitian_error(const Eigen::MatrixXcd& a) {
  return (a - a.adjoint()).cwiseAbs().maxCoeff();
}

inline bool is_hermitian(const Scm& scm, double tol = 1e-12) {
  for (const auto& b : scm.bins)
    if (hermitian_error(b) > tol) return false;
  return true;
}

}  // namespace egonoise
