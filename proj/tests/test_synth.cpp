#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "notchkit/anthro.hpp"
#include "notchkit/errors.hpp"
#include "notchkit/experiment.hpp"
#include "notchkit/model.hpp"
#include "notchkit/notch.hpp"
#include "notchkit/synth.hpp"

using namespace notchkit;

namespace {

// (features, labels) -> normalized design matrix + target vector
std::pair<Eigen::MatrixXd, Eigen::VectorXd> design(const Dataset& d,
                                                   const Normalizer& norm) {
  Eigen::MatrixXd X(static_cast<Eigen::Index>(d.records.size()), 9);
  Eigen::VectorXd y(static_cast<Eigen::Index>(d.records.size()));
  for (std::size_t i = 0; i < d.records.size(); ++i) {
    const auto z = norm.apply(*d.records[i].anthro);
    for (int c = 0; c < 9; ++c) X(static_cast<Eigen::Index>(i), c) = z[c];
    y(static_cast<Eigen::Index>(i)) = *d.records[i].n1_label_hz;
  }
  return {X, y};
}

std::vector<AnthroVector> anthros(const Dataset& d) {
  std::vector<AnthroVector> out;
  for (const auto& r : d.records) out.push_back(*r.anthro);
  return out;
}

}  // namespace

TEST_CASE("comb_hrir integer delay places exact taps") {
  // n1 = 8000 at 48 kHz: tau = 48000 / 16000 = 3 samples exactly
  const Hrir h = comb_hrir(8000.0, 0.9, 48000.0, 512);
  const int lead = 512 / 4;
  CHECK(h.samples[lead] == 1.0);
  CHECK(h.samples[lead + 3] ==
        doctest::Approx(0.9).epsilon(2e-3));  // smoothing spreads ~0.12%
  CHECK(h.samples[lead + 2] == doctest::Approx(0.0).scale(1).epsilon(1e-3));
  int nonzero = 0;
  for (double s : h.samples) nonzero += s != 0.0;
  CHECK(nonzero == 4);  // lead tap + smoothed reflection triple
}

TEST_CASE("comb_hrir fractional delay is recovered by extraction") {
  const Hrir h = comb_hrir(7000.0, 0.9, 48000.0, 512);  // tau ~ 3.4286
  const ExtractionParams p;
  const NotchFeatures nf = extract_n1(h, p);
  REQUIRE(nf.prominent);
  CHECK(std::abs(*nf.n1_hz - 7000.0) <= 25.0);
}

TEST_CASE("comb_hrir with zero gain is a plain impulse without a notch") {
  const Hrir h = comb_hrir(8000.0, 0.0, 48000.0, 512);
  int nonzero = 0;
  for (double s : h.samples) nonzero += s != 0.0;
  CHECK(nonzero == 1);
  const ExtractionParams p;
  CHECK_FALSE(extract_n1(h, p).prominent);
}

TEST_CASE("comb_hrir rejects infeasible parameters") {
  CHECK_THROWS_AS(comb_hrir(30000.0, 0.9, 48000.0, 512), DataError);  // >= fs/2
  CHECK_THROWS_AS(comb_hrir(8000.0, 1.0, 48000.0, 512), DataError);   // gain >= 1
  CHECK_THROWS_AS(comb_hrir(8000.0, -0.1, 48000.0, 512), DataError);
  CHECK_THROWS_AS(comb_hrir(8000.0, 0.9, 48000.0, 20), DataError);  // no room
}

TEST_CASE("synth_dataset is bit-identical for identical specs") {
  GenerativeSpec spec;
  spec.n_examples = 40;
  spec.noise_std_hz = 150.0;
  spec.seed = 99;
  const SynthDataset a = synth_dataset(spec);
  const SynthDataset b = synth_dataset(spec);
  CHECK(a.data == b.data);
  CHECK(a.clean_n1_hz == b.clean_n1_hz);

  spec.seed = 100;
  const SynthDataset c = synth_dataset(spec);
  CHECK_FALSE(a.data == c.data);
}

TEST_CASE("synth_dataset keeps labels inside the target band") {
  GenerativeSpec spec;
  spec.n_examples = 300;
  spec.noise_std_hz = 400.0;
  spec.seed = 3;
  const SynthDataset s = synth_dataset(spec);
  REQUIRE(s.data.records.size() == 300);
  for (std::size_t i = 0; i < s.data.records.size(); ++i) {
    CHECK(*s.data.records[i].n1_label_hz >= kSynthN1MinHz);
    CHECK(*s.data.records[i].n1_label_hz <= kSynthN1MaxHz);
    CHECK(s.clean_n1_hz[i] >= kSynthN1MinHz);
    CHECK(s.clean_n1_hz[i] <= kSynthN1MaxHz);
  }
}

TEST_CASE("noiseless linear mapping is fit exactly by the linear model") {
  GenerativeSpec spec;
  spec.mapping = MappingKind::linear;
  spec.n_examples = 80;
  spec.noise_std_hz = 0.0;
  spec.seed = 17;
  const SynthDataset s = synth_dataset(spec);

  const Normalizer norm = Normalizer::fit(anthros(s.data));
  const auto [X, y] = design(s.data, norm);
  const TrainedModel m = train_linear(X, y, 1e-10);
  const Eigen::VectorXd resid =
      X * m.linear_weights + Eigen::VectorXd::Constant(y.size(), m.linear_bias) - y;
  const double rel = std::sqrt(resid.squaredNorm() / y.squaredNorm());
  CHECK(rel < 1e-6);
}

TEST_CASE("noiseless nonlinear labels match extraction over the generated HRIRs") {
  GenerativeSpec spec;
  spec.mapping = MappingKind::nonlinear;
  spec.n_examples = 60;
  spec.noise_std_hz = 0.0;
  spec.seed = 21;
  const SynthDataset s = synth_dataset(spec);
  const ExtractionParams p;
  for (std::size_t i = 0; i < s.data.records.size(); ++i) {
    const NotchFeatures nf = extract_n1(*s.data.records[i].hrir, p);
    REQUIRE(nf.prominent);
    CHECK(std::abs(*nf.n1_hz - s.clean_n1_hz[i]) <= 25.0);
    // with zero noise, label == clean target
    CHECK(*s.data.records[i].n1_label_hz == s.clean_n1_hz[i]);
  }
}

TEST_CASE("nonlinear mapping is not affinely fittable") {
  // Frozen regression: with the default coefficients the best linear fit
  // leaves at least 3x the label noise on the table.
  GenerativeSpec spec;
  spec.mapping = MappingKind::nonlinear;
  spec.n_examples = 600;
  spec.noise_std_hz = 100.0;
  spec.seed = 1;
  const SynthDataset s = synth_dataset(spec);

  const Normalizer norm = Normalizer::fit(anthros(s.data));
  const auto [X, y] = design(s.data, norm);
  const TrainedModel m = train_linear(X, y, 1e-8);
  const Eigen::VectorXd resid =
      X * m.linear_weights + Eigen::VectorXd::Constant(y.size(), m.linear_bias) - y;
  const double rms = std::sqrt(resid.squaredNorm() / static_cast<double>(y.size()));
  CHECK(rms >= 3.0 * spec.noise_std_hz);
}

TEST_CASE("nonlinear mapping output spans most of an octave") {
  GenerativeSpec spec;
  spec.mapping = MappingKind::nonlinear;
  spec.n_examples = 800;
  spec.seed = 5;
  const SynthDataset s = synth_dataset(spec);
  double lo = 1e9, hi = 0;
  for (double v : s.clean_n1_hz) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  const double span_octaves = std::log2(hi / lo);
  CHECK(span_octaves > 0.6);
  CHECK(span_octaves <= std::log2(kSynthN1MaxHz / kSynthN1MinHz));
}

TEST_CASE("synth manifests round-trip through dataset io") {
  GenerativeSpec spec;
  spec.n_examples = 12;
  spec.noise_std_hz = 80.0;
  spec.seed = 8;
  const SynthDataset s = synth_dataset(spec);

  const auto dir = std::filesystem::temp_directory_path() / "notchkit_synth_rt";
  std::filesystem::remove_all(dir);
  const auto manifest = save_manifest(s.data, dir);
  const Dataset loaded = load_manifest(manifest);
  CHECK(loaded == s.data);
  std::filesystem::remove_all(dir);
}
