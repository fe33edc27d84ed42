#include "notchkit/notch.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>

#include "notchkit/errors.hpp"
#include "notchkit/fft.hpp"

namespace notchkit {

const char* to_string(WindowKind k) {
  switch (k) {
    case WindowKind::rectangular: return "rectangular";
    case WindowKind::hann: return "hann";
    case WindowKind::blackman_harris_4term: return "blackman_harris_4term";
  }
  return "?";
}

WindowKind window_kind_from_string(const std::string& s) {
  if (s == "rectangular") return WindowKind::rectangular;
  if (s == "hann") return WindowKind::hann;
  if (s == "blackman_harris_4term") return WindowKind::blackman_harris_4term;
  throw DataError("unknown window kind: '" + s + "'");
}

int ExtractionParams::window_samples(double sample_rate_hz) const {
  return static_cast<int>(std::lround(window_length_ms * sample_rate_hz / 1000.0));
}

namespace {

double window_value(WindowKind kind, int n, int length) {
  if (length <= 1) return 1.0;
  const double x = static_cast<double>(n) / static_cast<double>(length - 1);
  const double tau = 2.0 * std::numbers::pi;
  switch (kind) {
    case WindowKind::rectangular:
      return 1.0;
    case WindowKind::hann:
      return 0.5 * (1.0 - std::cos(tau * x));
    case WindowKind::blackman_harris_4term:
      return 0.35875 - 0.48829 * std::cos(tau * x) +
             0.14128 * std::cos(2.0 * tau * x) -
             0.01168 * std::cos(3.0 * tau * x);
  }
  return 1.0;
}

constexpr double kDbEpsilon = 1e-12;  // guards log(0) on exact-zero bins

}  // namespace

std::vector<double> window_around_peak(const Hrir& h, const ExtractionParams& p) {
  if (h.sample_rate_hz <= 0) throw DataError("HRIR sample rate must be positive");
  const int w = p.window_samples(h.sample_rate_hz);
  if (w < 2) throw DataError("window shorter than 2 samples");
  const int n = static_cast<int>(h.samples.size());
  if (n < 2 * w) {
    throw DataError("HRIR too short: " + std::to_string(n) + " samples for a " +
                    std::to_string(w) + "-sample window");
  }

  int peak = -1;
  double peak_abs = 0.0;
  for (int i = 0; i < n; ++i) {
    const double a = std::abs(h.samples[i]);
    if (a > peak_abs) {
      peak_abs = a;
      peak = i;
    }
  }
  if (peak < 0) throw DataError("all-zero HRIR has no peak");

  const int start = peak - w / 2;
  std::vector<double> out(static_cast<std::size_t>(w));
  for (int i = 0; i < w; ++i) {
    const int idx = start + i;
    const double x = (idx >= 0 && idx < n) ? h.samples[idx] : 0.0;
    out[i] = x * window_value(p.window_kind, i, w);
  }
  return out;
}

Spectrum magnitude_spectrum(const std::vector<double>& w, std::size_t fft_size,
                            double sample_rate_hz) {
  if (!is_power_of_two(fft_size)) {
    throw DataError("fft_size must be a power of two, got " +
                    std::to_string(fft_size));
  }
  if (fft_size < w.size()) {
    throw DataError("fft_size smaller than the windowed segment");
  }
  std::vector<std::complex<double>> buf(fft_size, {0.0, 0.0});
  for (std::size_t i = 0; i < w.size(); ++i) buf[i] = {w[i], 0.0};
  fft_radix2(buf);

  Spectrum s;
  s.bin_hz = sample_rate_hz / static_cast<double>(fft_size);
  s.magnitude_db.resize(fft_size / 2 + 1);
  for (std::size_t k = 0; k <= fft_size / 2; ++k) {
    s.magnitude_db[k] = 20.0 * std::log10(std::abs(buf[k]) + kDbEpsilon);
  }
  return s;
}

std::pair<double, double> find_p1(const Spectrum& s, const ExtractionParams& p) {
  if (s.bin_hz <= 0 || s.magnitude_db.size() < 2) {
    throw DataError("invalid spectrum");
  }
  const std::size_t last = s.magnitude_db.size() - 1;
  const double nyquist = static_cast<double>(last) * s.bin_hz;
  if (p.search_max_hz > nyquist * (1.0 + 1e-12)) {
    throw DataError("search_max_hz exceeds the Nyquist frequency");
  }
  std::size_t best = 0;
  double best_db = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k <= last; ++k) {  // DC excluded: P1 is a resonance
    const double f = static_cast<double>(k) * s.bin_hz;
    if (f > p.search_max_hz) break;
    if (s.magnitude_db[k] > best_db) {  // strict: ties keep the lower bin
      best_db = s.magnitude_db[k];
      best = k;
    }
  }
  if (best == 0) throw DataError("no spectrum bins below search_max_hz");
  return {static_cast<double>(best) * s.bin_hz, best_db};
}

NotchFeatures find_n1(const Spectrum& s, std::pair<double, double> p1,
                      const ExtractionParams& p) {
  NotchFeatures out;
  out.p1_hz = p1.first;
  out.p1_db = p1.second;

  const auto& m = s.magnitude_db;
  const std::size_t last = m.size() - 1;

  // First bin strictly above the P1 frequency (P1 sits on the bin grid).
  std::size_t k0 = static_cast<std::size_t>(std::lround(p1.first / s.bin_hz)) + 1;
  if (k0 < 2) k0 = 2;  // needs a left neighbor above DC

  for (std::size_t k = k0; k + 1 <= last; ++k) {
    const double f = static_cast<double>(k) * s.bin_hz;
    if (f >= p.search_max_hz) break;
    if (!(m[k] < m[k - 1] && m[k] < m[k + 1])) continue;

    // Walk each flank uphill to its nearest local maximum.
    std::size_t j = k - 1;
    while (j > 0 && m[j - 1] > m[j]) --j;
    const double left_max = m[j];
    j = k + 1;
    while (j + 1 <= last && m[j + 1] > m[j]) ++j;
    const double right_max = m[j];

    const double depth = std::min(left_max, right_max) - m[k];
    if (depth < p.prominence_db) continue;

    // 3-point parabolic refinement in dB. The curvature is strictly
    // positive at a strict local minimum, and |delta| < 0.5 bin.
    const double denom = m[k - 1] - 2.0 * m[k] + m[k + 1];
    const double delta = 0.5 * (m[k - 1] - m[k + 1]) / denom;
    out.n1_hz = (static_cast<double>(k) + delta) * s.bin_hz;
    out.n1_db = m[k] - 0.25 * (m[k - 1] - m[k + 1]) * delta;
    out.n1_depth_db = depth;
    out.prominent = true;
    return out;
  }
  return out;  // no qualifying minimum: prominent stays false
}

NotchFeatures extract_n1(const Hrir& h, const ExtractionParams& p) {
  const auto w = window_around_peak(h, p);
  const auto s = magnitude_spectrum(w, p.fft_size, h.sample_rate_hz);
  const auto p1 = find_p1(s, p);
  return find_n1(s, p1, p);
}

}  // namespace notchkit
