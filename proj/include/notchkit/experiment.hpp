#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "notchkit/dataset.hpp"
#include "notchkit/model.hpp"

namespace notchkit {

// Just-noticeable difference band for N1 frequency, in octaves. Used only to
// annotate reports.
inline constexpr double kJndOctaveLower = 0.1;
inline constexpr double kJndOctaveUpper = 0.2;

std::string jnd_annotation(double rms_octave);

struct SplitRatios {
  double train = 0.6, validation = 0.2, test = 0.2;
};

struct Split {
  std::vector<int> train, validation, test;
};

// Seeded, subject-grouped split: both ears of a subject land in the same
// part, so twin-ear leakage cannot occur. Part sizes are floor(ratio * n)
// for validation and test with the remainder going to train; subject groups
// can shift a part by at most one example.
Split make_split(const Dataset& d, const SplitRatios& ratios, std::uint64_t seed);

// sqrt(mean((pred - true)^2))
double rms_hz(std::span<const double> pred, std::span<const double> truth);

// sqrt(mean(log2(pred / true)^2)); requires positive frequencies.
double rms_octave(std::span<const double> pred, std::span<const double> truth);

struct RunResult {
  std::uint64_t seed = 0;
  double rms_hz = 0;
  double rms_octave = 0;
  int n_test = 0;
  int n_train = 0;
  int n_validation = 0;
};

struct ErrorReport {
  double rms_hz = 0;       // arithmetic mean of the per-run values
  double rms_octave = 0;
  int n_test = 0;          // test size of the first run
  std::string model_summary;
  std::vector<std::uint64_t> seeds;
  std::vector<RunResult> per_run;
  std::string note;
};

// Access instrumentation: invoked with the record index whenever a record's
// features or label are materialized for a phase. Lets tests assert that
// test indices never reach normalizer fitting or training. domain_mix
// reports target-dataset indices only.
enum class DataPhase { normalizer_fit, train, validation, test };
struct RunHooks {
  std::function<void(int record_index, DataPhase phase)> on_access;
};

// One seeded 60/20/20 protocol run: split, fit the normalizer on the train
// part, train, evaluate on the test part. Naive and linear ignore the
// validation part but train on the same 60%.
RunResult run_single(const Dataset& d, const ModelSpec& spec, std::uint64_t seed,
                     const RunHooks* hooks = nullptr);

// run_single over seeds base_seed..base_seed+n_runs-1; headline numbers are
// the arithmetic means of the per-run RMS values. A failing run aborts the
// batch naming its seed.
ErrorReport run_repeated(const Dataset& d, const ModelSpec& spec, int n_runs,
                         std::uint64_t base_seed, const RunHooks* hooks = nullptr);

struct SweepPoint {
  int train_size = 0;
  ErrorReport report;
  std::string jnd_note;
};

// Error versus training-set size with a fixed-size test set. Per size and
// seed, disjoint test/train/validation pools are drawn subject-grouped; the
// mlp validation pool is 25% of the train size, capped by availability.
std::vector<SweepPoint> size_sweep(const Dataset& d,
                                   const std::vector<int>& train_sizes,
                                   int test_size, const ModelSpec& spec,
                                   int n_runs, std::uint64_t base_seed);

// Train on all examples but one, predict the held-out example, repeat for
// every example, and pool all errors into one report. The result is a single
// aggregate entry in per_run; the report notes that leave-one-out points are
// not directly comparable to fixed-split sweep points.
ErrorReport leave_one_out(const Dataset& d, const ModelSpec& spec,
                          std::uint64_t base_seed,
                          std::vector<std::pair<double, double>>* per_example = nullptr);

// Domain mixing: per seed, the target splits 60/20/20; the training set is
// the source's train part plus the target train part duplicated (each
// example twice). The normalizer is fitted on that mixed training set;
// validation and test come from the target only. An empty source degrades to
// target-only training with duplicated examples.
ErrorReport domain_mix(const Dataset& source, const Dataset& target,
                       const ModelSpec& spec, int n_runs, std::uint64_t base_seed,
                       const RunHooks* hooks = nullptr);

struct FeatureOverlap {
  std::string feature;
  double coefficient = 0;  // normalized histogram intersection in [0, 1]
  double bin_width = 0;
  int n_bins = 0;
  double a_min = 0, a_max = 0, a_mean = 0;
  double b_min = 0, b_max = 0, b_mean = 0;
};

// Per-feature distribution overlap between two datasets: shared
// Freedman-Diaconis binning on the pooled sample, histogram intersection of
// the normalized histograms.
std::vector<FeatureOverlap> feature_overlap_report(const Dataset& a,
                                                   const Dataset& b);

}  // namespace notchkit
