#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <set>

#include "notchkit/errors.hpp"
#include "notchkit/experiment.hpp"
#include "notchkit/rng.hpp"
#include "notchkit/synth.hpp"

using namespace notchkit;

namespace {

Dataset labeled_dataset(int n_subjects, int ears_per_subject, std::uint64_t seed) {
  Rng rng(seed);
  Dataset d;
  d.name = "lab";
  for (int s = 0; s < n_subjects; ++s) {
    for (int e = 0; e < ears_per_subject; ++e) {
      SubjectRecord r;
      r.subject_id = "s" + std::to_string(s);
      r.ear = e == 0 ? Ear::left : Ear::right;
      AnthroVector v;
      for (int i = 0; i < 7; ++i) v.d[i] = rng.uniform(0.5, 6.0);
      v.rotation_deg = rng.uniform(-30, 30);
      v.flare_deg = rng.uniform(5, 50);
      r.anthro = v;
      r.n1_label_hz = rng.uniform(6000.0, 11000.0);
      d.records.push_back(std::move(r));
    }
  }
  return d;
}

ModelSpec naive_spec() {
  ModelSpec s;
  s.kind = ModelKind::naive;
  return s;
}

ModelSpec linear_spec(double ridge = 1e-8) {
  ModelSpec s;
  s.kind = ModelKind::linear;
  s.ridge = ridge;
  return s;
}

ModelSpec small_mlp(std::uint64_t seed = 1) {
  ModelSpec s;
  s.kind = ModelKind::mlp;
  s.hidden_units = 20;
  s.max_epochs = 40;
  s.patience = 40;
  s.seed = seed;
  return s;
}

}  // namespace

TEST_CASE("make_split honors the floor-then-train-remainder rule") {
  const Dataset d100 = labeled_dataset(100, 1, 1);
  const Split s100 = make_split(d100, SplitRatios{}, 5);
  CHECK(s100.train.size() == 60);
  CHECK(s100.validation.size() == 20);
  CHECK(s100.test.size() == 20);

  const Dataset d182 = labeled_dataset(182, 1, 2);
  const Split s182 = make_split(d182, SplitRatios{}, 5);
  CHECK(s182.train.size() == 110);
  CHECK(s182.validation.size() == 36);
  CHECK(s182.test.size() == 36);
}

TEST_CASE("make_split is deterministic, disjoint, complete") {
  const Dataset d = labeled_dataset(50, 2, 3);
  const Split a = make_split(d, SplitRatios{}, 11);
  const Split b = make_split(d, SplitRatios{}, 11);
  CHECK(a.train == b.train);
  CHECK(a.validation == b.validation);
  CHECK(a.test == b.test);

  const Split c = make_split(d, SplitRatios{}, 12);
  CHECK_FALSE(a.train == c.train);

  std::set<int> all;
  for (int i : a.train) all.insert(i);
  for (int i : a.validation) all.insert(i);
  for (int i : a.test) all.insert(i);
  CHECK(all.size() == d.records.size());
}

TEST_CASE("make_split keeps both ears of a subject in one part") {
  const Dataset d = labeled_dataset(30, 2, 4);
  const Split s = make_split(d, SplitRatios{}, 7);
  auto part_of = [&](int idx) {
    for (int i : s.train) if (i == idx) return 0;
    for (int i : s.validation) if (i == idx) return 1;
    return 2;
  };
  for (std::size_t i = 0; i + 1 < d.records.size(); i += 2) {
    CHECK(part_of(static_cast<int>(i)) == part_of(static_cast<int>(i + 1)));
  }
  // subject pairs shift parts by at most one example from the targets
  CHECK(std::abs(static_cast<int>(s.validation.size()) - 12) <= 1);
  CHECK(std::abs(static_cast<int>(s.test.size()) - 12) <= 1);
}

TEST_CASE("make_split rejects datasets too small for the ratios") {
  const Dataset d = labeled_dataset(4, 1, 5);
  CHECK_THROWS_AS(make_split(d, SplitRatios{}, 1), DataError);
}

TEST_CASE("rms_hz basics and second-implementation oracle") {
  const std::vector<double> t = {7000, 8000, 9000};
  CHECK(rms_hz(t, t) == 0.0);
  CHECK(rms_hz(std::vector<double>{8000, 7000}, std::vector<double>{7000, 8000}) ==
        doctest::Approx(1000.0));

  Rng rng(6);
  std::vector<double> pred, truth;
  for (int i = 0; i < 200; ++i) {
    pred.push_back(rng.uniform(6000, 11000));
    truth.push_back(rng.uniform(6000, 11000));
  }
  // independent recomputation, accumulated in reverse with a running mean
  double mean_sq = 0.0;
  int count = 0;
  for (int i = 199; i >= 0; --i) {
    const double e = pred[static_cast<std::size_t>(i)] - truth[static_cast<std::size_t>(i)];
    ++count;
    mean_sq += (e * e - mean_sq) / count;
  }
  CHECK(rms_hz(pred, truth) == doctest::Approx(std::sqrt(mean_sq)).epsilon(1e-9));

  CHECK_THROWS_AS(rms_hz(pred, t), DataError);
  CHECK_THROWS_AS(rms_hz(std::vector<double>{}, std::vector<double>{}), DataError);
}

TEST_CASE("rms_octave definition and invariances") {
  const std::vector<double> t = {6000, 8000, 10000};
  CHECK(rms_octave(t, t) == 0.0);

  std::vector<double> doubled;
  for (double v : t) doubled.push_back(2.0 * v);
  CHECK(std::abs(rms_octave(doubled, t) - 1.0) <= 1e-12);

  std::vector<double> nudged;
  for (double v : t) nudged.push_back(v * std::pow(2.0, 0.05));
  CHECK(rms_octave(nudged, t) == doctest::Approx(0.05).epsilon(1e-9));

  // scale invariance of the log ratio
  Rng rng(7);
  std::vector<double> pred, truth;
  for (int i = 0; i < 50; ++i) {
    pred.push_back(rng.uniform(6000, 11000));
    truth.push_back(rng.uniform(6000, 11000));
  }
  const double base = rms_octave(pred, truth);
  for (double c : {0.25, 3.0, 1e3}) {
    std::vector<double> cp, ct;
    for (double v : pred) cp.push_back(c * v);
    for (double v : truth) ct.push_back(c * v);
    CHECK(rms_octave(cp, ct) == doctest::Approx(base).epsilon(1e-12));
  }

  CHECK_THROWS_AS(rms_octave(std::vector<double>{-1.0}, std::vector<double>{1.0}),
                  DataError);
}

TEST_CASE("jnd annotation bands") {
  CHECK(jnd_annotation(0.05) == "below_jnd_lower");
  CHECK(jnd_annotation(0.10) == "within_jnd_range");
  CHECK(jnd_annotation(0.20) == "within_jnd_range");
  CHECK(jnd_annotation(0.21) == "above_jnd_upper");
}

TEST_CASE("naive run matches the closed form on every seed") {
  const Dataset d = labeled_dataset(60, 1, 8);
  const ErrorReport rep = run_repeated(d, naive_spec(), 5, 100);
  REQUIRE(rep.per_run.size() == 5);

  for (const auto& run : rep.per_run) {
    const Split s = make_split(d, SplitRatios{}, run.seed);
    double mean = 0;
    for (int i : s.train) mean += *d.records[static_cast<std::size_t>(i)].n1_label_hz;
    mean /= static_cast<double>(s.train.size());
    double sq = 0;
    for (int i : s.test) {
      const double e = *d.records[static_cast<std::size_t>(i)].n1_label_hz - mean;
      sq += e * e;
    }
    const double expect = std::sqrt(sq / static_cast<double>(s.test.size()));
    CHECK(run.rms_hz == doctest::Approx(expect).epsilon(1e-9));
  }
}

TEST_CASE("report headline is the arithmetic mean of per-run values") {
  const Dataset d = labeled_dataset(60, 1, 9);
  const ErrorReport rep = run_repeated(d, linear_spec(), 4, 7);
  double hz = 0, oct = 0;
  for (const auto& r : rep.per_run) {
    hz += r.rms_hz;
    oct += r.rms_octave;
  }
  CHECK(rep.rms_hz == doctest::Approx(hz / 4.0).epsilon(1e-12));
  CHECK(rep.rms_octave == doctest::Approx(oct / 4.0).epsilon(1e-12));
  CHECK(rep.n_test == rep.per_run.front().n_test);
  CHECK(rep.seeds.size() == 4);
}

TEST_CASE("one repetition equals a single run") {
  const Dataset d = labeled_dataset(60, 1, 10);
  const ErrorReport rep = run_repeated(d, naive_spec(), 1, 42);
  const RunResult single = run_single(d, naive_spec(), 42);
  CHECK(rep.per_run.size() == 1);
  CHECK(rep.rms_hz == single.rms_hz);
  CHECK(rep.rms_octave == single.rms_octave);
}

TEST_CASE("test indices never reach normalizer fitting or training") {
  const Dataset d = labeled_dataset(40, 2, 11);
  for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
    std::set<int> fit_or_train, test_seen;
    RunHooks hooks;
    hooks.on_access = [&](int idx, DataPhase phase) {
      if (phase == DataPhase::test) {
        test_seen.insert(idx);
      } else {
        // normalizer fit, training, and validation all shape the model
        fit_or_train.insert(idx);
      }
    };
    (void)run_single(d, small_mlp(seed), seed, &hooks);
    REQUIRE_FALSE(test_seen.empty());
    REQUIRE_FALSE(fit_or_train.empty());
    for (int idx : test_seen) CHECK(fit_or_train.count(idx) == 0);
  }
}

TEST_CASE("leave_one_out matches hand-computed naive predictions") {
  Dataset d = labeled_dataset(3, 1, 12);
  d.records[0].n1_label_hz = 7000.0;
  d.records[1].n1_label_hz = 8000.0;
  d.records[2].n1_label_hz = 9000.0;

  std::vector<std::pair<double, double>> per_example;
  const ErrorReport rep = leave_one_out(d, naive_spec(), 0, &per_example);
  REQUIRE(per_example.size() == 3);
  CHECK(per_example[0].first == doctest::Approx(8500.0));
  CHECK(per_example[1].first == doctest::Approx(8000.0));
  CHECK(per_example[2].first == doctest::Approx(7500.0));
  // rms = sqrt((1500^2 + 0 + 1500^2) / 3)
  CHECK(rep.rms_hz == doctest::Approx(std::sqrt(1.5) * 1000.0).epsilon(1e-9));
  CHECK(rep.per_run.size() == 1);
  CHECK(rep.note.find("not directly comparable") != std::string::npos);
}

TEST_CASE("leave_one_out on identical examples is exact, and reports the pool size") {
  Dataset d = labeled_dataset(4, 1, 13);
  for (auto& r : d.records) r.n1_label_hz = 8000.0;
  const ErrorReport rep = leave_one_out(d, naive_spec(), 0);
  CHECK(rep.rms_hz == 0.0);
  CHECK(rep.rms_octave == 0.0);

  const Dataset big = labeled_dataset(181, 1, 14);
  const ErrorReport rep181 = leave_one_out(big, naive_spec(), 0);
  CHECK(rep181.per_run.front().n_train == 180);
  CHECK(rep181.n_test == 181);

  const Dataset two = labeled_dataset(2, 1, 15);
  CHECK_THROWS_AS(leave_one_out(two, naive_spec(), 0), DataError);
}

TEST_CASE("domain_mix training pool is source train plus twice the target train") {
  const Dataset source = labeled_dataset(90, 1, 16);
  const Dataset target = labeled_dataset(40, 1, 17);
  const ErrorReport rep = domain_mix(source, target, linear_spec(), 3, 5);
  for (const auto& run : rep.per_run) {
    const auto strain = make_split(source, SplitRatios{}, run.seed).train.size();
    const auto ttrain = make_split(target, SplitRatios{}, run.seed).train.size();
    CHECK(run.n_train == static_cast<int>(strain + 2 * ttrain));
  }
}

TEST_CASE("domain_mix with an empty source equals target-only training") {
  const Dataset target = labeled_dataset(50, 1, 18);
  Dataset empty;
  empty.name = "empty";

  const ErrorReport mixed_naive = domain_mix(empty, target, naive_spec(), 4, 9);
  const ErrorReport plain_naive = run_repeated(target, naive_spec(), 4, 9);
  for (std::size_t k = 0; k < 4; ++k) {
    // duplicating every training example leaves the mean untouched
    CHECK(mixed_naive.per_run[k].rms_hz ==
          doctest::Approx(plain_naive.per_run[k].rms_hz).epsilon(1e-12));
    CHECK(mixed_naive.per_run[k].n_train == 2 * plain_naive.per_run[k].n_train);
  }

  const ErrorReport mixed_lin = domain_mix(empty, target, linear_spec(0.0), 4, 9);
  const ErrorReport plain_lin = run_repeated(target, linear_spec(0.0), 4, 9);
  for (std::size_t k = 0; k < 4; ++k) {
    // duplicated rows scale both sides of the normal equations
    CHECK(mixed_lin.per_run[k].rms_hz ==
          doctest::Approx(plain_lin.per_run[k].rms_hz).epsilon(1e-9));
  }
}

TEST_CASE("size_sweep validates sizes and reports one point per size") {
  const Dataset d = labeled_dataset(300, 1, 19);
  CHECK_THROWS_AS(size_sweep(d, {290}, 25, naive_spec(), 2, 1), DataError);
  CHECK_THROWS_AS(size_sweep(d, {0}, 25, naive_spec(), 2, 1), DataError);

  const auto points = size_sweep(d, {30, 60, 120}, 25, linear_spec(), 3, 1);
  REQUIRE(points.size() == 3);
  for (const auto& p : points) {
    CHECK(p.report.per_run.size() == 3);
    for (const auto& run : p.report.per_run) {
      CHECK(run.n_train == p.train_size);  // singleton subjects: exact
      CHECK(run.n_test == 25);
    }
    CHECK_FALSE(p.jnd_note.empty());
  }
  // disjointness is structural; sizes grow monotonically in the output
  CHECK(points[0].train_size == 30);
  CHECK(points[2].train_size == 120);
}

TEST_CASE("feature overlap is 1 on identical data and 0 on disjoint data") {
  const Dataset a = labeled_dataset(120, 1, 20);
  const auto self = feature_overlap_report(a, a);
  REQUIRE(self.size() == 9);
  for (const auto& f : self) {
    CHECK(f.coefficient == doctest::Approx(1.0).epsilon(1e-12));
  }

  Dataset b = a;
  for (auto& r : b.records) {
    AnthroVector v = *r.anthro;
    for (int i = 0; i < 7; ++i) v.d[i] += 100.0;  // far outside a's support
    v.rotation_deg += 500.0;
    v.flare_deg += 500.0;
    r.anthro = v;
  }
  for (const auto& f : feature_overlap_report(a, b)) {
    CHECK(f.coefficient == 0.0);
  }
}

TEST_CASE("feature overlap reproduces the analytic gaussian value") {
  // Unit-variance gaussians with means 0 and 0.5 overlap by
  // 2 * Phi(-0.25) = erfc(0.25 / sqrt(2)) = 0.802587.
  const double expected = std::erfc(0.25 / std::numbers::sqrt2);
  Rng rng(21);
  auto gaussian_dataset = [&](double mean, int n) {
    Dataset d;
    d.name = "g";
    for (int i = 0; i < n; ++i) {
      SubjectRecord r;
      r.subject_id = "s" + std::to_string(i);
      r.ear = Ear::left;
      AnthroVector v;
      for (int f = 0; f < 7; ++f) v.d[f] = rng.gaussian(mean, 1.0);
      v.rotation_deg = rng.gaussian(mean, 1.0);
      v.flare_deg = rng.gaussian(mean, 1.0);
      r.anthro = v;
      r.n1_label_hz = 8000.0;
      d.records.push_back(std::move(r));
    }
    return d;
  };
  const Dataset a = gaussian_dataset(0.0, 100000);
  const Dataset b = gaussian_dataset(0.5, 100000);
  for (const auto& f : feature_overlap_report(a, b)) {
    CHECK(f.coefficient == doctest::Approx(expected).epsilon(0.0125));
  }
}

TEST_CASE("failed runs name their seed") {
  Dataset d = labeled_dataset(60, 1, 22);
  d.records[3].n1_label_hz.reset();  // poison one record
  d.records[3].prominent = true;
  try {
    (void)run_repeated(d, naive_spec(), 9, 1234);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("seed") != std::string::npos);
  }
}
