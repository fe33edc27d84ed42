#include "notchkit/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "notchkit/errors.hpp"
#include "notchkit/rng.hpp"

namespace notchkit {

std::string jnd_annotation(double rms_octave) {
  if (rms_octave < kJndOctaveLower) return "below_jnd_lower";
  if (rms_octave <= kJndOctaveUpper) return "within_jnd_range";
  return "above_jnd_upper";
}

double rms_hz(std::span<const double> pred, std::span<const double> truth) {
  if (pred.size() != truth.size()) throw DataError("rms_hz: length mismatch");
  if (pred.empty()) throw DataError("rms_hz: empty input");
  double sum = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double e = pred[i] - truth[i];
    sum += e * e;
  }
  return std::sqrt(sum / static_cast<double>(pred.size()));
}

double rms_octave(std::span<const double> pred, std::span<const double> truth) {
  if (pred.size() != truth.size()) throw DataError("rms_octave: length mismatch");
  if (pred.empty()) throw DataError("rms_octave: empty input");
  double sum = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i] <= 0 || truth[i] <= 0) {
      throw DataError("rms_octave: nonpositive frequency");
    }
    const double e = std::log2(pred[i] / truth[i]);
    sum += e * e;
  }
  return std::sqrt(sum / static_cast<double>(pred.size()));
}

namespace {

// Record indices grouped by subject, in order of first appearance.
std::vector<std::vector<int>> subject_groups(const Dataset& d) {
  std::vector<std::vector<int>> groups;
  std::map<std::string, std::size_t> by_subject;
  for (int i = 0; i < static_cast<int>(d.records.size()); ++i) {
    const auto& id = d.records[static_cast<std::size_t>(i)].subject_id;
    auto it = by_subject.find(id);
    if (it == by_subject.end()) {
      by_subject.emplace(id, groups.size());
      groups.push_back({i});
    } else {
      groups[it->second].push_back(i);
    }
  }
  return groups;
}

double label_at(const Dataset& d, int i) {
  const auto& r = d.records[static_cast<std::size_t>(i)];
  if (!r.n1_label_hz) {
    throw DataError("record (" + r.subject_id + ", " + to_string(r.ear) +
                    ") has no n1 label; run extraction and filtering first");
  }
  return *r.n1_label_hz;
}

const AnthroVector& anthro_at(const Dataset& d, int i) {
  const auto& r = d.records[static_cast<std::size_t>(i)];
  if (!r.anthro) {
    throw DataError("record (" + r.subject_id + ", " + to_string(r.ear) +
                    ") has no anthropometry");
  }
  return *r.anthro;
}

void touch(const RunHooks* hooks, int index, DataPhase phase) {
  if (hooks && hooks->on_access) hooks->on_access(index, phase);
}

std::vector<double> labels_at(const Dataset& d, const std::vector<int>& idx,
                              const RunHooks* hooks, DataPhase phase) {
  std::vector<double> out;
  out.reserve(idx.size());
  for (int i : idx) {
    touch(hooks, i, phase);
    out.push_back(label_at(d, i));
  }
  return out;
}

std::vector<AnthroVector> anthros_at(const Dataset& d, const std::vector<int>& idx,
                                     const RunHooks* hooks, DataPhase phase) {
  std::vector<AnthroVector> out;
  out.reserve(idx.size());
  for (int i : idx) {
    touch(hooks, i, phase);
    out.push_back(anthro_at(d, i));
  }
  return out;
}

Eigen::MatrixXd normalized_matrix(const std::vector<AnthroVector>& vs,
                                  const Normalizer& n) {
  Eigen::MatrixXd X(static_cast<Eigen::Index>(vs.size()), 9);
  for (std::size_t r = 0; r < vs.size(); ++r) {
    const auto z = n.apply(vs[r]);
    for (int c = 0; c < 9; ++c) X(static_cast<Eigen::Index>(r), c) = z[c];
  }
  return X;
}

Eigen::VectorXd to_vector(const std::vector<double>& v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out(static_cast<Eigen::Index>(i)) = v[i];
  return out;
}

// Trains per the model spec on explicit index sets of one dataset. The normalizer
// is fitted on the train indices only.
TrainedModel train_on(const Dataset& d, const std::vector<int>& train_idx,
                      const std::vector<int>& val_idx, const ModelSpec& spec,
                      std::uint64_t seed, const RunHooks* hooks) {
  TrainedModel model;
  switch (spec.kind) {
    case ModelKind::naive: {
      model = train_naive(labels_at(d, train_idx, hooks, DataPhase::train));
      break;
    }
    case ModelKind::linear: {
      const auto train_anthro =
          anthros_at(d, train_idx, hooks, DataPhase::normalizer_fit);
      const Normalizer norm = Normalizer::fit(train_anthro);
      const auto y = labels_at(d, train_idx, hooks, DataPhase::train);
      model = train_linear(normalized_matrix(train_anthro, norm), to_vector(y),
                           spec.ridge);
      model.spec.seed = seed;
      model.normalizer = norm;
      break;
    }
    case ModelKind::mlp: {
      const auto train_anthro =
          anthros_at(d, train_idx, hooks, DataPhase::normalizer_fit);
      const Normalizer norm = Normalizer::fit(train_anthro);
      const auto y = labels_at(d, train_idx, hooks, DataPhase::train);
      const auto val_anthro = anthros_at(d, val_idx, hooks, DataPhase::validation);
      const auto y_val = labels_at(d, val_idx, hooks, DataPhase::validation);
      ModelSpec run_spec = spec;
      run_spec.seed = seed;
      model = train_mlp(normalized_matrix(train_anthro, norm), to_vector(y),
                        normalized_matrix(val_anthro, norm), to_vector(y_val),
                        run_spec);
      model.normalizer = norm;
      break;
    }
  }
  return model;
}

double predict_record(const TrainedModel& model, const Dataset& d, int i) {
  return model.spec.kind == ModelKind::naive ? model.naive_mean_hz
                                             : predict(model, anthro_at(d, i));
}

RunResult train_and_eval(const Dataset& d, const std::vector<int>& train_idx,
                         const std::vector<int>& val_idx,
                         const std::vector<int>& test_idx, const ModelSpec& spec,
                         std::uint64_t seed, const RunHooks* hooks) {
  const TrainedModel model = train_on(d, train_idx, val_idx, spec, seed, hooks);

  std::vector<double> pred, truth;
  pred.reserve(test_idx.size());
  truth.reserve(test_idx.size());
  for (int i : test_idx) {
    touch(hooks, i, DataPhase::test);
    truth.push_back(label_at(d, i));
    pred.push_back(predict_record(model, d, i));
  }

  RunResult r;
  r.seed = seed;
  r.rms_hz = rms_hz(pred, truth);
  r.rms_octave = rms_octave(pred, truth);
  r.n_test = static_cast<int>(test_idx.size());
  r.n_train = static_cast<int>(train_idx.size());
  r.n_validation = static_cast<int>(val_idx.size());
  return r;
}

ErrorReport aggregate(std::vector<RunResult> runs, const ModelSpec& spec,
                      std::string note = {}) {
  ErrorReport rep;
  rep.model_summary = spec.summary();
  rep.note = std::move(note);
  double sum_hz = 0, sum_oct = 0;
  for (const auto& r : runs) {
    sum_hz += r.rms_hz;
    sum_oct += r.rms_octave;
    rep.seeds.push_back(r.seed);
  }
  rep.rms_hz = sum_hz / static_cast<double>(runs.size());
  rep.rms_octave = sum_oct / static_cast<double>(runs.size());
  rep.n_test = runs.front().n_test;
  rep.per_run = std::move(runs);
  return rep;
}

[[noreturn]] void rethrow_with_seed(std::uint64_t seed) {
  try {
    throw;
  } catch (const NumericError& e) {
    throw NumericError("run with seed " + std::to_string(seed) +
                       " failed: " + e.what());
  } catch (const DataError& e) {
    throw DataError("run with seed " + std::to_string(seed) +
                    " failed: " + e.what());
  }
}

}  // namespace

Split make_split(const Dataset& d, const SplitRatios& ratios, std::uint64_t seed) {
  if (ratios.train < 0 || ratios.validation < 0 || ratios.test < 0 ||
      std::abs(ratios.train + ratios.validation + ratios.test - 1.0) > 1e-9) {
    throw DataError("split ratios must be nonnegative and sum to 1");
  }
  const int n = static_cast<int>(d.records.size());
  const int n_val = static_cast<int>(std::floor(ratios.validation * n));
  const int n_test = static_cast<int>(std::floor(ratios.test * n));
  if ((ratios.validation > 0 && n_val == 0) || (ratios.test > 0 && n_test == 0) ||
      n - n_val - n_test <= 0) {
    throw DataError("dataset too small to split: " + std::to_string(n) +
                    " records");
  }

  auto groups = subject_groups(d);
  Rng rng(seed);
  rng.shuffle(groups);

  Split s;
  for (const auto& g : groups) {
    auto& part = static_cast<int>(s.validation.size()) < n_val ? s.validation
                 : static_cast<int>(s.test.size()) < n_test    ? s.test
                                                               : s.train;
    part.insert(part.end(), g.begin(), g.end());
  }
  if (s.train.empty() || (ratios.validation > 0 && s.validation.empty()) ||
      (ratios.test > 0 && s.test.empty())) {
    throw DataError("dataset too small to split: " + std::to_string(n) +
                    " records");
  }
  return s;
}

RunResult run_single(const Dataset& d, const ModelSpec& spec, std::uint64_t seed,
                     const RunHooks* hooks) {
  const Split s = make_split(d, SplitRatios{}, seed);
  return train_and_eval(d, s.train, s.validation, s.test, spec, seed, hooks);
}

ErrorReport run_repeated(const Dataset& d, const ModelSpec& spec, int n_runs,
                         std::uint64_t base_seed, const RunHooks* hooks) {
  if (n_runs < 1) throw DataError("n_runs must be >= 1");
  std::vector<RunResult> runs;
  runs.reserve(static_cast<std::size_t>(n_runs));
  for (int k = 0; k < n_runs; ++k) {
    const std::uint64_t seed = base_seed + static_cast<std::uint64_t>(k);
    try {
      runs.push_back(run_single(d, spec, seed, hooks));
    } catch (...) {
      rethrow_with_seed(seed);
    }
  }
  return aggregate(std::move(runs), spec);
}

std::vector<SweepPoint> size_sweep(const Dataset& d,
                                   const std::vector<int>& train_sizes,
                                   int test_size, const ModelSpec& spec,
                                   int n_runs, std::uint64_t base_seed) {
  const int n = static_cast<int>(d.records.size());
  if (test_size < 1) throw DataError("test_size must be >= 1");
  if (n_runs < 1) throw DataError("n_runs must be >= 1");
  for (int s : train_sizes) {
    if (s < 1 || s + test_size > n) {
      throw DataError("infeasible train size " + std::to_string(s) + " with " +
                      std::to_string(test_size) + " test examples on " +
                      std::to_string(n) + " records");
    }
  }

  std::vector<SweepPoint> out;
  for (std::size_t si = 0; si < train_sizes.size(); ++si) {
    const int size = train_sizes[si];
    std::vector<RunResult> runs;
    for (int k = 0; k < n_runs; ++k) {
      const std::uint64_t seed = base_seed + static_cast<std::uint64_t>(k);
      try {
        auto groups = subject_groups(d);
        Rng rng(mix_seed(seed, static_cast<std::uint64_t>(size)));
        rng.shuffle(groups);

        // Disjoint pools: test first, then train, then the mlp validation
        // pool at 25% of the train size; leftover groups stay unused.
        std::vector<int> test_idx, train_idx, val_idx;
        const int val_target = std::max(1, size / 4);
        for (const auto& g : groups) {
          if (static_cast<int>(test_idx.size()) < test_size) {
            test_idx.insert(test_idx.end(), g.begin(), g.end());
          } else if (static_cast<int>(train_idx.size()) < size) {
            train_idx.insert(train_idx.end(), g.begin(), g.end());
          } else if (static_cast<int>(val_idx.size()) < val_target) {
            val_idx.insert(val_idx.end(), g.begin(), g.end());
          } else {
            break;
          }
        }
        if (spec.kind == ModelKind::mlp && val_idx.empty()) {
          throw DataError("no validation examples left at train size " +
                          std::to_string(size));
        }
        runs.push_back(
            train_and_eval(d, train_idx, val_idx, test_idx, spec, seed, nullptr));
      } catch (...) {
        rethrow_with_seed(seed);
      }
    }
    SweepPoint p;
    p.train_size = size;
    p.report = aggregate(std::move(runs), spec);
    p.jnd_note = jnd_annotation(p.report.rms_octave);
    out.push_back(std::move(p));
  }
  return out;
}

ErrorReport leave_one_out(const Dataset& d, const ModelSpec& spec,
                          std::uint64_t base_seed,
                          std::vector<std::pair<double, double>>* per_example) {
  const int n = static_cast<int>(d.records.size());
  if (n < 3) throw DataError("leave-one-out needs at least 3 records");

  std::vector<double> pred, truth;
  pred.reserve(static_cast<std::size_t>(n));
  truth.reserve(static_cast<std::size_t>(n));

  for (int i = 0; i < n; ++i) {
    const std::uint64_t seed = base_seed + static_cast<std::uint64_t>(i);
    std::vector<int> train_idx;
    train_idx.reserve(static_cast<std::size_t>(n - 1));
    for (int j = 0; j < n; ++j) {
      if (j != i) train_idx.push_back(j);
    }

    std::vector<int> val_idx;
    if (spec.kind == ModelKind::mlp) {
      // The mlp carves its validation set out of the training pool.
      Rng rng(seed);
      rng.shuffle(train_idx);
      const int n_val = std::max(1, static_cast<int>(train_idx.size()) / 5);
      val_idx.assign(train_idx.end() - n_val, train_idx.end());
      train_idx.resize(train_idx.size() - static_cast<std::size_t>(n_val));
    }

    try {
      const TrainedModel model = train_on(d, train_idx, val_idx, spec, seed, nullptr);
      truth.push_back(label_at(d, i));
      pred.push_back(predict_record(model, d, i));
    } catch (...) {
      rethrow_with_seed(seed);
    }
  }

  if (per_example) {
    per_example->clear();
    for (int i = 0; i < n; ++i) {
      per_example->push_back({pred[static_cast<std::size_t>(i)],
                              truth[static_cast<std::size_t>(i)]});
    }
  }

  RunResult agg;
  agg.seed = base_seed;
  agg.rms_hz = rms_hz(pred, truth);
  agg.rms_octave = rms_octave(pred, truth);
  agg.n_test = n;
  agg.n_train = n - 1;  // training pool; the mlp carves validation from it
  agg.n_validation = spec.kind == ModelKind::mlp ? std::max(1, (n - 1) / 5) : 0;
  return aggregate({agg}, spec,
                   "leave-one-out point; not directly comparable to fixed-split "
                   "sweep points");
}

ErrorReport domain_mix(const Dataset& source, const Dataset& target,
                       const ModelSpec& spec, int n_runs, std::uint64_t base_seed,
                       const RunHooks* hooks) {
  if (n_runs < 1) throw DataError("n_runs must be >= 1");
  std::vector<RunResult> runs;
  for (int k = 0; k < n_runs; ++k) {
    const std::uint64_t seed = base_seed + static_cast<std::uint64_t>(k);
    try {
      const Split tsplit = make_split(target, SplitRatios{}, seed);
      std::vector<int> source_train;
      if (!source.records.empty()) {
        source_train = make_split(source, SplitRatios{}, seed).train;
      }

      // Mixed pool: source train block, then the target train block twice.
      std::vector<AnthroVector> train_anthro;
      std::vector<double> train_labels;
      const bool needs_features = spec.kind != ModelKind::naive;
      for (int i : source_train) {
        if (needs_features) train_anthro.push_back(anthro_at(source, i));
        train_labels.push_back(label_at(source, i));
      }
      for (int rep = 0; rep < 2; ++rep) {
        for (int i : tsplit.train) {
          touch(hooks, i, spec.kind == ModelKind::naive ? DataPhase::train
                                                        : DataPhase::normalizer_fit);
          if (needs_features) train_anthro.push_back(anthro_at(target, i));
          train_labels.push_back(label_at(target, i));
        }
      }

      TrainedModel model;
      if (spec.kind == ModelKind::naive) {
        model = train_naive(train_labels);
      } else {
        const Normalizer norm = Normalizer::fit(train_anthro);
        const Eigen::MatrixXd X = normalized_matrix(train_anthro, norm);
        const Eigen::VectorXd y = to_vector(train_labels);
        if (spec.kind == ModelKind::linear) {
          model = train_linear(X, y, spec.ridge);
        } else {
          const auto val_anthro =
              anthros_at(target, tsplit.validation, hooks, DataPhase::validation);
          const auto y_val =
              labels_at(target, tsplit.validation, hooks, DataPhase::validation);
          ModelSpec run_spec = spec;
          run_spec.seed = seed;
          model = train_mlp(X, y, normalized_matrix(val_anthro, norm),
                            to_vector(y_val), run_spec);
        }
        model.spec.seed = seed;
        model.normalizer = norm;
      }

      std::vector<double> pred, truth;
      for (int i : tsplit.test) {
        touch(hooks, i, DataPhase::test);
        truth.push_back(label_at(target, i));
        pred.push_back(spec.kind == ModelKind::naive
                           ? model.naive_mean_hz
                           : predict(model, anthro_at(target, i)));
      }

      RunResult r;
      r.seed = seed;
      r.rms_hz = rms_hz(pred, truth);
      r.rms_octave = rms_octave(pred, truth);
      r.n_test = static_cast<int>(tsplit.test.size());
      r.n_train = static_cast<int>(train_labels.size());
      r.n_validation = static_cast<int>(tsplit.validation.size());
      runs.push_back(r);
    } catch (...) {
      rethrow_with_seed(seed);
    }
  }
  return aggregate(std::move(runs), spec,
                   "mixed training: source train + 2x target train");
}

std::vector<FeatureOverlap> feature_overlap_report(const Dataset& a,
                                                   const Dataset& b) {
  auto values_of = [](const Dataset& d, int feature) {
    std::vector<double> out;
    out.reserve(d.records.size());
    for (int i = 0; i < static_cast<int>(d.records.size()); ++i) {
      out.push_back(anthro_at(d, i).as_array()[static_cast<std::size_t>(feature)]);
    }
    return out;
  };
  auto quantile = [](std::vector<double> sorted, double p) {
    const double pos = p * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const double frac = pos - static_cast<double>(lo);
    if (lo + 1 >= sorted.size()) return sorted.back();
    return sorted[lo] + (sorted[lo + 1] - sorted[lo]) * frac;
  };

  if (a.records.empty() || b.records.empty()) {
    throw DataError("overlap report needs nonempty datasets");
  }

  std::vector<FeatureOverlap> out;
  for (int f = 0; f < 9; ++f) {
    const auto va = values_of(a, f);
    const auto vb = values_of(b, f);
    std::vector<double> pooled = va;
    pooled.insert(pooled.end(), vb.begin(), vb.end());
    std::sort(pooled.begin(), pooled.end());

    FeatureOverlap fo;
    fo.feature = AnthroVector::feature_names()[static_cast<std::size_t>(f)];
    auto stats = [](const std::vector<double>& v, double& mn, double& mx,
                    double& mean) {
      mn = *std::min_element(v.begin(), v.end());
      mx = *std::max_element(v.begin(), v.end());
      mean = std::accumulate(v.begin(), v.end(), 0.0) /
             static_cast<double>(v.size());
    };
    stats(va, fo.a_min, fo.a_max, fo.a_mean);
    stats(vb, fo.b_min, fo.b_max, fo.b_mean);

    const double lo = pooled.front(), hi = pooled.back();
    const double range = hi - lo;
    if (range == 0) {
      // Both datasets constant at the same value: full overlap.
      fo.coefficient = 1.0;
      fo.n_bins = 1;
      fo.bin_width = 0;
      out.push_back(fo);
      continue;
    }

    const double n_pooled = static_cast<double>(pooled.size());
    const double iqr = quantile(pooled, 0.75) - quantile(pooled, 0.25);
    double h = 2.0 * iqr / std::cbrt(n_pooled);  // Freedman-Diaconis
    if (h <= 0) h = range / std::ceil(std::sqrt(n_pooled));
    int n_bins = static_cast<int>(std::ceil(range / h));
    n_bins = std::clamp(n_bins, 1, 100000);
    const double width = range / n_bins;

    auto histogram = [&](const std::vector<double>& v) {
      std::vector<double> hist(static_cast<std::size_t>(n_bins), 0.0);
      for (double x : v) {
        auto bin = static_cast<int>(std::floor((x - lo) / width));
        bin = std::clamp(bin, 0, n_bins - 1);
        hist[static_cast<std::size_t>(bin)] += 1.0;
      }
      for (auto& c : hist) c /= static_cast<double>(v.size());
      return hist;
    };
    const auto ha = histogram(va);
    const auto hb = histogram(vb);
    double inter = 0;
    for (int k = 0; k < n_bins; ++k) {
      inter += std::min(ha[static_cast<std::size_t>(k)],
                        hb[static_cast<std::size_t>(k)]);
    }
    fo.coefficient = inter;
    fo.n_bins = n_bins;
    fo.bin_width = width;
    out.push_back(fo);
  }
  return out;
}

}  // namespace notchkit
