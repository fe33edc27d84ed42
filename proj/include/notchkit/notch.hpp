#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace notchkit {

// One ear's impulse response, linear amplitude.
struct Hrir {
  std::vector<double> samples;
  double sample_rate_hz = 0;
  double azimuth_deg = 0;
  double elevation_deg = 0;

  bool operator==(const Hrir&) const = default;
};

enum class WindowKind { rectangular, hann, blackman_harris_4term };

const char* to_string(WindowKind k);
WindowKind window_kind_from_string(const std::string& s);

// Parameters of the notch-extraction procedure. Defaults: 2 ms 4-term
// Blackman-Harris window around the impulse peak isolates the pinna response
// (later head/torso reflections fall outside it); a 4096-point FFT at 48 kHz
// gives ~11.7 Hz bins, well under the audible notch-frequency difference.
struct ExtractionParams {
  double window_length_ms = 2.0;
  WindowKind window_kind = WindowKind::blackman_harris_4term;
  std::size_t fft_size = 4096;
  double prominence_db = 5.0;
  double search_max_hz = 16000.0;

  int window_samples(double sample_rate_hz) const;
};

// One-sided magnitude spectrum, bins 0..fft_size/2 inclusive.
struct Spectrum {
  std::vector<double> magnitude_db;
  double bin_hz = 0;
};

// Extracted first peak (P1) and first notch (N1). The n1 fields stay unset
// when no sufficiently deep minimum exists above P1.
struct NotchFeatures {
  double p1_hz = 0;
  double p1_db = 0;
  std::optional<double> n1_hz;
  std::optional<double> n1_db;
  std::optional<double> n1_depth_db;
  bool prominent = false;

  bool operator==(const NotchFeatures&) const = default;
};

// Clips a window of round(window_length_ms * fs / 1000) samples centered on
// the index of max |samples|, zero-padding past the edges, and applies the
// window function. Throws DataError on an all-zero HRIR or one shorter than
// twice the window.
std::vector<double> window_around_peak(const Hrir& h, const ExtractionParams& p);

// Zero-pads to fft_size and returns 20*log10(|X_k| + 1e-12) over bins
// 0..fft_size/2. fft_size must be a power of two and >= the input length.
Spectrum magnitude_spectrum(const std::vector<double>& w, std::size_t fft_size,
                            double sample_rate_hz);

// Global maximum over (0, search_max_hz]; DC excluded, ties go to the lower
// frequency. Returns (frequency, level).
std::pair<double, double> find_p1(const Spectrum& s, const ExtractionParams& p);

// First strict local minimum at a frequency above P1 whose depth below the
// lower of its flanking maxima reaches prominence_db, refined by 3-point
// parabolic interpolation. Absence of a qualifying minimum is a valid
// outcome (prominent=false), not an error.
NotchFeatures find_n1(const Spectrum& s, std::pair<double, double> p1,
                      const ExtractionParams& p);

// window_around_peak -> magnitude_spectrum -> find_p1 -> find_n1.
NotchFeatures extract_n1(const Hrir& h, const ExtractionParams& p);

}  // namespace notchkit
