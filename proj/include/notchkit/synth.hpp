#pragma once

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

#include "notchkit/dataset.hpp"

namespace notchkit {

enum class MappingKind { linear, nonlinear };

const char* to_string(MappingKind m);
MappingKind mapping_kind_from_string(const std::string& s);

struct FeatureRange {
  double lo = 0, hi = 1;
};

// Generator settings for synthetic feature->N1 datasets with known ground
// truth. Targets are kept inside [5.5, 11.5] kHz by redrawing violating
// examples.
struct GenerativeSpec {
  int n_examples = 100;
  std::array<FeatureRange, 9> feature_ranges = default_feature_ranges();
  MappingKind mapping = MappingKind::nonlinear;
  double noise_std_hz = 0;
  std::uint64_t seed = 1;
  double sample_rate_hz = 48000;
  double reflection_gain = 0.9;
  int hrir_length = 512;

  static std::array<FeatureRange, 9> default_feature_ranges();
};

inline constexpr double kSynthN1MinHz = 5500;
inline constexpr double kSynthN1MaxHz = 11500;

// Impulse plus a delayed reflection: h = delta(t) + gain*delta(t - tau) with
// tau = fs / (2 * n1_hz) samples, so the first magnitude minimum sits at
// n1_hz. Fractional delays use a 32-tap Blackman-windowed sinc. Samples are
// quantized to float32 (the on-disk format), so manifests round-trip
// exactly. gain = 0 yields a plain impulse.
Hrir comb_hrir(double n1_hz, double gain, double sample_rate_hz, int length);

// Closed-form feature->N1 mapping with coefficients derived from the seed.
// Features enter rescaled to z in [-1, 1] over their ranges.
//   linear:    N1 = base + sum_i a_i z_i
//   nonlinear: N1 = base + sum_i a_i z_i + sum_p b_p z_ip z_jp
//                       + sat * tanh(2 z_1)
struct MappingCoefficients {
  double base_hz = 0;
  std::array<double, 9> linear_hz{};
  std::array<double, 3> pair_hz{};
  std::array<std::pair<int, int>, 3> pairs{{{0, 1}, {2, 3}, {4, 5}}};
  double sat_hz = 0;
  double sat_slope = 2.0;
};

MappingCoefficients derive_mapping(const GenerativeSpec& spec);
double mapping_value_hz(const MappingCoefficients& c, MappingKind kind,
                        const std::array<double, 9>& z);

struct SynthDataset {
  Dataset data;
  std::vector<double> clean_n1_hz;  // noiseless targets, record order
};

// Features uniform over the ranges; label = mapping(features) + Gaussian
// noise; each record carries a comb HRIR realizing the noiseless target, so
// extraction and prediction cross-validate end to end. Bit-identical for
// identical specs.
SynthDataset synth_dataset(const GenerativeSpec& spec);

}  // namespace notchkit
