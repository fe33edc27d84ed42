#include "notchkit/synth.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>

#include "notchkit/errors.hpp"
#include "notchkit/rng.hpp"

namespace notchkit {

const char* to_string(MappingKind m) {
  return m == MappingKind::linear ? "linear" : "nonlinear";
}

MappingKind mapping_kind_from_string(const std::string& s) {
  if (s == "linear") return MappingKind::linear;
  if (s == "nonlinear") return MappingKind::nonlinear;
  throw DataError("unknown mapping kind: '" + s + "'");
}

std::array<FeatureRange, 9> GenerativeSpec::default_feature_ranges() {
  // CIPIC-like scales: distances in cm, angles in degrees.
  return {{{1.2, 2.4},    // d1 cavum concha height
           {0.5, 1.2},    // d2 cymba concha height
           {1.2, 2.2},    // d3 cavum concha width
           {1.0, 2.2},    // d4 fossa height
           {5.0, 7.5},    // d5 pinna height
           {2.5, 4.0},    // d6 pinna width
           {0.6, 1.4},    // d7 intertragal incisure width
           {-15.0, 30.0}, // rotation
           {10.0, 45.0}}}; // flare
}

namespace {

constexpr int kSincHalfWidth = 16;  // 32-tap windowed sinc

double sinc(double u) {
  if (std::abs(u) < 1e-12) return 1.0;
  const double pu = std::numbers::pi * u;
  return std::sin(pu) / pu;
}

// Blackman window over |u| <= kSincHalfWidth, centered on the fractional
// delay so the tap set has exactly linear phase up to the sinc truncation.
double sinc_window(double u) {
  if (std::abs(u) >= kSincHalfWidth) return 0.0;
  const double x = std::numbers::pi * u / kSincHalfWidth;
  return 0.42 + 0.5 * std::cos(x) + 0.08 * std::cos(2.0 * x);
}

// Mild symmetric smoothing [b, 1-2b, b] on the reflection. Exactly linear
// phase, so it leaves the notch position intact (shift ~1 Hz), while its
// gentle high-frequency rolloff keeps the comb's low-frequency lobe strictly
// the tallest; otherwise the lobe at 2*n1 ties with it analytically and P1
// would land above the notch on bin-sampling noise.
constexpr double kReflectionSmoothing = 6e-4;

}  // namespace

Hrir comb_hrir(double n1_hz, double gain, double sample_rate_hz, int length) {
  if (sample_rate_hz <= 0) throw DataError("sample rate must be positive");
  if (n1_hz <= 0 || n1_hz >= sample_rate_hz / 2) {
    throw DataError("comb n1 frequency must lie in (0, fs/2)");
  }
  if (gain < 0 || gain >= 1) throw DataError("comb gain must lie in [0, 1)");

  Hrir h;
  h.sample_rate_hz = sample_rate_hz;
  h.samples.assign(static_cast<std::size_t>(length), 0.0);

  const int lead = length / 4;
  const double tau = sample_rate_hz / (2.0 * n1_hz);
  h.samples[static_cast<std::size_t>(lead)] = 1.0;
  if (gain > 0) {
    if (tau < 1.0) throw DataError("comb delay shorter than one sample");
    const int center = static_cast<int>(std::lround(tau));
    if (lead + center + kSincHalfWidth + 1 >= length ||
        lead + center - kSincHalfWidth - 1 < 0) {
      throw DataError("comb delay does not fit the HRIR length");
    }
    auto add_smoothed = [&](int k, double v) {
      const double b = kReflectionSmoothing;
      h.samples[static_cast<std::size_t>(lead + k - 1)] += b * v;
      h.samples[static_cast<std::size_t>(lead + k)] += (1.0 - 2.0 * b) * v;
      h.samples[static_cast<std::size_t>(lead + k + 1)] += b * v;
    };
    if (std::abs(tau - center) < 1e-9) {
      add_smoothed(center, gain);
    } else {
      for (int k = center - kSincHalfWidth; k <= center + kSincHalfWidth; ++k) {
        const double u = static_cast<double>(k) - tau;
        add_smoothed(k, gain * sinc(u) * sinc_window(u));
      }
    }
  }

  // Quantize to the on-disk float32 format so save/load round-trips exactly.
  for (auto& s : h.samples) s = static_cast<double>(static_cast<float>(s));
  return h;
}

MappingCoefficients derive_mapping(const GenerativeSpec& spec) {
  Rng rng(mix_seed(spec.seed, 1));
  MappingCoefficients c;
  c.base_hz = 8600.0;
  for (int i = 0; i < 9; ++i) {
    const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
    c.linear_hz[i] = sign * rng.uniform(290.0, 460.0);
  }
  for (int p = 0; p < 3; ++p) {
    const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
    c.pair_hz[p] = sign * rng.uniform(1030.0, 1260.0);
  }
  const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
  c.sat_hz = sign * rng.uniform(345.0, 460.0);
  c.sat_slope = 2.0;
  return c;
}

double mapping_value_hz(const MappingCoefficients& c, MappingKind kind,
                        const std::array<double, 9>& z) {
  double v = c.base_hz;
  for (int i = 0; i < 9; ++i) v += c.linear_hz[i] * z[i];
  if (kind == MappingKind::nonlinear) {
    for (int p = 0; p < 3; ++p) {
      v += c.pair_hz[p] * z[c.pairs[p].first] * z[c.pairs[p].second];
    }
    v += c.sat_hz * std::tanh(c.sat_slope * z[0]);
  }
  return v;
}

SynthDataset synth_dataset(const GenerativeSpec& spec) {
  if (spec.n_examples <= 0) throw DataError("n_examples must be positive");
  for (const auto& r : spec.feature_ranges) {
    if (!(r.hi > r.lo)) throw DataError("feature range must have hi > lo");
  }

  const MappingCoefficients coeff = derive_mapping(spec);
  Rng rng(mix_seed(spec.seed, 2));

  SynthDataset out;
  out.data.name = std::string("synth-") + to_string(spec.mapping);
  out.data.acquisition = Acquisition::simulated;
  out.data.sample_rate_hz = spec.sample_rate_hz;
  out.data.direction = {0.0, 0.0};
  out.data.deduplicate_identical = false;

  for (int i = 0; i < spec.n_examples; ++i) {
    AnthroVector anthro;
    double clean = 0, label = 0;
    bool ok = false;
    for (int attempt = 0; attempt < 1000 && !ok; ++attempt) {
      std::array<double, 9> x{}, z{};
      for (int f = 0; f < 9; ++f) {
        const auto& fr = spec.feature_ranges[f];
        x[f] = rng.uniform(fr.lo, fr.hi);
        z[f] = 2.0 * (x[f] - fr.lo) / (fr.hi - fr.lo) - 1.0;
      }
      clean = mapping_value_hz(coeff, spec.mapping, z);
      label = clean + (spec.noise_std_hz > 0
                           ? rng.gaussian(0.0, spec.noise_std_hz)
                           : 0.0);
      if (clean < kSynthN1MinHz || clean > kSynthN1MaxHz) continue;
      if (label < kSynthN1MinHz || label > kSynthN1MaxHz) continue;
      for (int f = 0; f < 7; ++f) anthro.d[f] = x[f];
      anthro.rotation_deg = x[7];
      anthro.flare_deg = x[8];
      ok = true;
    }
    if (!ok) {
      throw NumericError("synth mapping cannot satisfy the target range; "
                         "check feature ranges and noise");
    }

    SubjectRecord r;
    char id[16];
    std::snprintf(id, sizeof(id), "s%04d", i);
    r.subject_id = id;
    r.ear = Ear::left;
    r.anthro = anthro;
    r.hrir = comb_hrir(clean, spec.reflection_gain, spec.sample_rate_hz,
                       spec.hrir_length);
    r.hrir->azimuth_deg = out.data.direction.azimuth_deg;
    r.hrir->elevation_deg = out.data.direction.elevation_deg;
    r.n1_label_hz = label;
    r.prominent = true;
    out.data.records.push_back(std::move(r));
    out.clean_n1_hz.push_back(clean);
  }
  return out;
}

}  // namespace notchkit
