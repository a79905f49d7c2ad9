#pragma once

#include <algorithm>
#include <cmath>
#include <span>

#include "egonoise/error.hpp"

namespace egonoise::evalkit {

// Reports are clamped to +-kMetricCap dB so infinite ratios stay printable.
inline constexpr double kMetricCap = 120.0;

namespace detail {
inline double capped_db(double num, double den) {
  if (den <= 0.0) return num > 0.0 ? kMetricCap : -kMetricCap;
  if (num <= 0.0) return -kMetricCap;
  return std::clamp(10.0 * std::log10(num / den), -kMetricCap, kMetricCap);
}
}  // namespace detail

// 10 log10(sum s^2 / sum e^2).
inline double snr(std::span<const double> signal, std::span<const double> interference) {
  if (signal.size() != interference.size()) throw LengthMismatch("SNR inputs differ in length");
  double es = 0.0, ee = 0.0;
  for (std::size_t i = 0; i < signal.size(); ++i) {
    es += signal[i] * signal[i];
    ee += interference[i] * interference[i];
  }
  if (!(es > 0.0)) throw InvalidArgument("zero reference energy");
  return detail::capped_db(es, ee);
}

// Scale-invariant SDR: alpha = <est, ref> / |ref|^2,
// 10 log10(|alpha ref|^2 / |est - alpha ref|^2).
inline double sdr(std::span<const double> estimate, std::span<const double> reference) {
  if (estimate.size() != reference.size()) throw LengthMismatch("SDR inputs differ in length");
  double dot = 0.0, er = 0.0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    dot += estimate[i] * reference[i];
    er += reference[i] * reference[i];
  }
  if (!(er > 0.0)) throw InvalidArgument("zero reference energy");
  const double alpha = dot / er;
  double target = 0.0, residual = 0.0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    const double t = alpha * reference[i];
    const double r = estimate[i] - t;
    target += t * t;
    residual += r * r;
  }
  return detail::capped_db(target, residual);
}

}  // namespace egonoise::evalkit
