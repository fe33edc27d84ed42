// notchkit: extract the first pinna spectral notch (N1) from HRIRs and
// predict its frequency from pinna anthropometry.
//
// Subcommands: synth, extract, run, table1, overlap.
// Exit codes: 0 ok, 1 usage, 2 data error, 3 numeric failure.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "notchkit/csv.hpp"
#include "notchkit/dataset.hpp"
#include "notchkit/errors.hpp"
#include "notchkit/experiment.hpp"
#include "notchkit/model.hpp"
#include "notchkit/notch.hpp"
#include "notchkit/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using namespace notchkit;

namespace {

constexpr const char* kCsvSchemaVersion = "notchkit-csv v1";

struct CliConfig {
  std::string dataset_path;
  std::string source_path;   // domain-mix source / overlap second dataset
  std::string out_dir = "out";
  std::string protocol = "repeated";

  ExtractionParams extraction;
  double min_n1_hz = 5000.0;
  bool require_prominent = true;

  ModelSpec model;
  int n_runs = 9;
  std::uint64_t base_seed = 1;

  std::vector<int> train_sizes = {50, 100, 150};
  int test_size = 25;

  GenerativeSpec synth;

  std::vector<std::string> table_datasets;
  std::vector<std::string> table_mixes;  // "source_manifest=target_manifest"
};

// Layered configuration: defaults, then the JSON config file, then CLI flags.
void apply_config_file(CliConfig& c, const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config file: " + path.string());
  ordered_json j;
  try {
    j = ordered_json::parse(in);
  } catch (const std::exception& e) {
    throw DataError("malformed config " + path.string() + ": " + e.what());
  }
  if (j.contains("out_dir")) c.out_dir = j["out_dir"].get<std::string>();
  if (j.contains("base_seed")) c.base_seed = j["base_seed"].get<std::uint64_t>();
  if (j.contains("runs")) c.n_runs = j["runs"].get<int>();
  if (j.contains("protocol")) c.protocol = j["protocol"].get<std::string>();
  if (j.contains("extraction")) {
    const auto& e = j["extraction"];
    if (e.contains("window_length_ms")) c.extraction.window_length_ms = e["window_length_ms"].get<double>();
    if (e.contains("window_kind")) c.extraction.window_kind = window_kind_from_string(e["window_kind"].get<std::string>());
    if (e.contains("fft_size")) c.extraction.fft_size = e["fft_size"].get<std::size_t>();
    if (e.contains("prominence_db")) c.extraction.prominence_db = e["prominence_db"].get<double>();
    if (e.contains("search_max_hz")) c.extraction.search_max_hz = e["search_max_hz"].get<double>();
  }
  if (j.contains("filter")) {
    const auto& f = j["filter"];
    if (f.contains("min_n1_hz")) c.min_n1_hz = f["min_n1_hz"].get<double>();
    if (f.contains("require_prominent")) c.require_prominent = f["require_prominent"].get<bool>();
  }
  if (j.contains("model")) {
    const auto& m = j["model"];
    if (m.contains("kind")) c.model.kind = model_kind_from_string(m["kind"].get<std::string>());
    if (m.contains("hidden_units")) c.model.hidden_units = m["hidden_units"].get<int>();
    if (m.contains("hidden_layers")) c.model.hidden_layers = m["hidden_layers"].get<int>();
    if (m.contains("activation")) c.model.activation = activation_from_string(m["activation"].get<std::string>());
    if (m.contains("learning_rate")) c.model.learning_rate = m["learning_rate"].get<double>();
    if (m.contains("batch_size")) c.model.batch_size = m["batch_size"].get<int>();
    if (m.contains("max_epochs")) c.model.max_epochs = m["max_epochs"].get<int>();
    if (m.contains("patience")) c.model.patience = m["patience"].get<int>();
    if (m.contains("ridge")) c.model.ridge = m["ridge"].get<double>();
  }
  if (j.contains("sweep")) {
    const auto& s = j["sweep"];
    if (s.contains("train_sizes")) c.train_sizes = s["train_sizes"].get<std::vector<int>>();
    if (s.contains("test_size")) c.test_size = s["test_size"].get<int>();
  }
  if (j.contains("synth")) {
    const auto& s = j["synth"];
    if (s.contains("n_examples")) c.synth.n_examples = s["n_examples"].get<int>();
    if (s.contains("mapping")) c.synth.mapping = mapping_kind_from_string(s["mapping"].get<std::string>());
    if (s.contains("noise_std_hz")) c.synth.noise_std_hz = s["noise_std_hz"].get<double>();
    if (s.contains("seed")) c.synth.seed = s["seed"].get<std::uint64_t>();
    if (s.contains("sample_rate_hz")) c.synth.sample_rate_hz = s["sample_rate_hz"].get<double>();
    if (s.contains("reflection_gain")) c.synth.reflection_gain = s["reflection_gain"].get<double>();
    if (s.contains("hrir_length")) c.synth.hrir_length = s["hrir_length"].get<int>();
  }
}

ordered_json extraction_to_json(const ExtractionParams& p) {
  return {{"window_length_ms", p.window_length_ms},
          {"window_kind", to_string(p.window_kind)},
          {"fft_size", p.fft_size},
          {"prominence_db", p.prominence_db},
          {"search_max_hz", p.search_max_hz}};
}

ordered_json model_to_json(const ModelSpec& m) {
  return {{"kind", to_string(m.kind)},
          {"hidden_units", m.hidden_units},
          {"hidden_layers", m.hidden_layers},
          {"activation", to_string(m.activation)},
          {"learning_rate", m.learning_rate},
          {"batch_size", m.batch_size},
          {"max_epochs", m.max_epochs},
          {"patience", m.patience},
          {"ridge", m.ridge}};
}

// The comment header every CSV carries: schema line plus the semantic config
// (no filesystem paths, so identical runs produce identical bytes).
std::vector<std::string> csv_header(const std::string& schema,
                                    const ordered_json& config_echo) {
  return {std::string(kCsvSchemaVersion) + " " + schema,
          "config: " + config_echo.dump()};
}

std::string fmt_bool(bool b) { return b ? "true" : "false"; }

int cmd_synth(const CliConfig& c) {
  const SynthDataset s = synth_dataset(c.synth);
  fs::create_directories(c.out_dir);
  const auto manifest = save_manifest(s.data, c.out_dir);

  // Noiseless targets alongside the manifest, for verification.
  std::vector<std::vector<std::string>> rows;
  for (std::size_t i = 0; i < s.data.records.size(); ++i) {
    rows.push_back({s.data.records[i].subject_id,
                    to_string(s.data.records[i].ear),
                    fmt_double(s.clean_n1_hz[i]),
                    fmt_double(*s.data.records[i].n1_label_hz)});
  }
  ordered_json echo = {{"command", "synth"},
                       {"n_examples", c.synth.n_examples},
                       {"mapping", to_string(c.synth.mapping)},
                       {"noise_std_hz", c.synth.noise_std_hz},
                       {"seed", c.synth.seed},
                       {"sample_rate_hz", c.synth.sample_rate_hz},
                       {"reflection_gain", c.synth.reflection_gain},
                       {"hrir_length", c.synth.hrir_length}};
  write_csv_atomic(fs::path(c.out_dir) / "synth_truth.csv",
                   csv_header("synth_truth", echo),
                   {"subject_id", "ear", "clean_n1_hz", "label_n1_hz"}, rows);

  std::cout << "wrote " << s.data.records.size() << " records to "
            << manifest.string() << "\n";
  return 0;
}

int cmd_extract(const CliConfig& c) {
  if (c.dataset_path.empty()) throw UsageError("extract requires --dataset");
  Dataset d = load_manifest(c.dataset_path);
  d = merge_ears(d);
  const auto features = extract_labels(d, c.extraction);

  ordered_json echo = {{"command", "extract"},
                       {"dataset", d.name},
                       {"extraction", extraction_to_json(c.extraction)},
                       {"min_n1_hz", c.min_n1_hz},
                       {"require_prominent", c.require_prominent}};

  std::vector<std::vector<std::string>> rows;
  for (std::size_t i = 0; i < d.records.size(); ++i) {
    const auto& r = d.records[i];
    const auto& f = features[i];
    rows.push_back({r.subject_id, to_string(r.ear), fmt_double(f.p1_hz),
                    fmt_double(f.p1_db),
                    f.n1_hz ? fmt_double(*f.n1_hz) : "",
                    f.n1_db ? fmt_double(*f.n1_db) : "",
                    f.n1_depth_db ? fmt_double(*f.n1_depth_db) : "",
                    fmt_bool(f.prominent)});
  }
  fs::create_directories(c.out_dir);
  write_csv_atomic(fs::path(c.out_dir) / "extraction.csv",
                   csv_header("extraction", echo),
                   {"subject_id", "ear", "p1_hz", "p1_db", "n1_hz", "n1_db",
                    "n1_depth_db", "prominent"},
                   rows);

  const Dataset filtered = filter_records(d, c.min_n1_hz, c.require_prominent);
  save_manifest(filtered, fs::path(c.out_dir) / "filtered");

  std::cout << "retained " << filtered.records.size() << " of "
            << d.records.size() << " records (removed "
            << d.records.size() - filtered.records.size() << ")\n";
  return 0;
}

int cmd_overlap(const CliConfig& c);

void write_runs_csv(const fs::path& path, const ordered_json& echo,
                    const std::string& dataset, const std::string& protocol,
                    const ModelSpec& spec, const std::vector<SweepPoint>& points) {
  std::vector<std::vector<std::string>> rows;
  for (const auto& p : points) {
    for (const auto& r : p.report.per_run) {
      rows.push_back({dataset, to_string(spec.kind), protocol,
                      std::to_string(p.train_size), std::to_string(r.seed),
                      fmt_double(r.rms_hz), fmt_double(r.rms_octave),
                      std::to_string(r.n_test)});
    }
  }
  write_csv_atomic(path, csv_header("runs", echo),
                   {"dataset", "model", "protocol", "train_size", "seed",
                    "rms_hz", "rms_octave", "n_test"},
                   rows);
}

void write_summary_csv(const fs::path& path, const ordered_json& echo,
                       const std::string& dataset, const std::string& protocol,
                       const ModelSpec& spec,
                       const std::vector<SweepPoint>& points) {
  std::vector<std::vector<std::string>> rows;
  for (const auto& p : points) {
    rows.push_back({dataset, to_string(spec.kind), protocol,
                    std::to_string(p.train_size),
                    fmt_double(p.report.rms_hz), fmt_double(p.report.rms_octave),
                    std::to_string(p.report.n_test),
                    jnd_annotation(p.report.rms_octave), p.report.note});
  }
  write_csv_atomic(path, csv_header("summary", echo),
                   {"dataset", "model", "protocol", "train_size", "mean_rms_hz",
                    "mean_rms_octave", "n_test", "vs_jnd", "note"},
                   rows);
}

int cmd_run(const CliConfig& c) {
  if (c.dataset_path.empty()) throw UsageError("run requires --dataset");
  const Dataset target = load_manifest(c.dataset_path);

  ordered_json echo = {{"command", "run"},
                       {"dataset", target.name},
                       {"protocol", c.protocol},
                       {"model", model_to_json(c.model)},
                       {"runs", c.n_runs},
                       {"base_seed", c.base_seed}};

  fs::create_directories(c.out_dir);
  const fs::path runs_path = fs::path(c.out_dir) / "runs.csv";
  const fs::path summary_path = fs::path(c.out_dir) / "summary.csv";

  if (c.protocol == "single" || c.protocol == "repeated") {
    const int runs = c.protocol == "single" ? 1 : c.n_runs;
    ErrorReport rep = run_repeated(target, c.model, runs, c.base_seed);
    SweepPoint p{/*train_size=*/rep.per_run.front().n_train, std::move(rep), ""};
    write_runs_csv(runs_path, echo, target.name, c.protocol, c.model, {p});
    write_summary_csv(summary_path, echo, target.name, c.protocol, c.model, {p});
    std::cout << c.protocol << ": mean rms " << p.report.rms_hz << " Hz, "
              << p.report.rms_octave << " octave ("
              << jnd_annotation(p.report.rms_octave) << ")\n";
  } else if (c.protocol == "sweep") {
    const auto points = size_sweep(target, c.train_sizes, c.test_size, c.model,
                                   c.n_runs, c.base_seed);
    echo["sweep"] = {{"train_sizes", c.train_sizes}, {"test_size", c.test_size}};
    write_runs_csv(runs_path, echo, target.name, "sweep", c.model, points);
    write_summary_csv(summary_path, echo, target.name, "sweep", c.model, points);
    for (const auto& p : points) {
      std::cout << "size " << p.train_size << ": mean rms " << p.report.rms_hz
                << " Hz, " << p.report.rms_octave << " octave (" << p.jnd_note
                << ")\n";
    }
  } else if (c.protocol == "loo") {
    std::vector<std::pair<double, double>> per_example;
    ErrorReport rep = leave_one_out(target, c.model, c.base_seed, &per_example);
    std::vector<std::vector<std::string>> rows;
    for (std::size_t i = 0; i < per_example.size(); ++i) {
      rows.push_back({target.records[i].subject_id, to_string(target.records[i].ear),
                      fmt_double(per_example[i].first),
                      fmt_double(per_example[i].second)});
    }
    write_csv_atomic(runs_path, csv_header("loo_predictions", echo),
                     {"subject_id", "ear", "pred_hz", "true_hz"}, rows);
    SweepPoint p{rep.per_run.front().n_train, std::move(rep), ""};
    write_summary_csv(summary_path, echo, target.name, "loo", c.model, {p});
    std::cout << "loo: rms " << p.report.rms_hz << " Hz, " << p.report.rms_octave
              << " octave; " << p.report.note << "\n";
  } else if (c.protocol == "mix") {
    if (c.source_path.empty()) throw UsageError("protocol mix requires --source");
    const Dataset source = load_manifest(c.source_path);
    echo["source"] = source.name;
    ErrorReport rep = domain_mix(source, target, c.model, c.n_runs, c.base_seed);
    SweepPoint p{rep.per_run.front().n_train, std::move(rep), ""};
    write_runs_csv(runs_path, echo, target.name, "mix", c.model, {p});
    write_summary_csv(summary_path, echo, target.name, "mix", c.model, {p});
    std::cout << "mix " << source.name << " -> " << target.name << ": mean rms "
              << p.report.rms_hz << " Hz, " << p.report.rms_octave << " octave\n";
  } else if (c.protocol == "overlap") {
    if (c.source_path.empty()) throw UsageError("protocol overlap requires --source");
    return cmd_overlap(c);
  } else {
    throw UsageError("unknown protocol: " + c.protocol);
  }
  return 0;
}

int cmd_overlap(const CliConfig& c) {
  if (c.dataset_path.empty() || c.source_path.empty()) {
    throw UsageError("overlap requires --dataset and --second");
  }
  const Dataset a = load_manifest(c.dataset_path);
  const Dataset b = load_manifest(c.source_path);
  const auto overlaps = feature_overlap_report(a, b);

  ordered_json echo = {{"command", "overlap"}, {"a", a.name}, {"b", b.name}};
  std::vector<std::vector<std::string>> rows;
  for (const auto& o : overlaps) {
    rows.push_back({o.feature, fmt_double(o.coefficient),
                    std::to_string(o.n_bins), fmt_double(o.bin_width),
                    fmt_double(o.a_min), fmt_double(o.a_max), fmt_double(o.a_mean),
                    fmt_double(o.b_min), fmt_double(o.b_max), fmt_double(o.b_mean)});
  }
  fs::create_directories(c.out_dir);
  write_csv_atomic(fs::path(c.out_dir) / "overlap.csv",
                   csv_header("overlap", echo),
                   {"feature", "coefficient", "n_bins", "bin_width", "a_min",
                    "a_max", "a_mean", "b_min", "b_max", "b_mean"},
                   rows);
  for (const auto& o : overlaps) {
    std::cout << o.feature << ": overlap " << o.coefficient << "\n";
  }
  return 0;
}

int cmd_table1(const CliConfig& c) {
  if (c.table_datasets.empty()) throw UsageError("table1 requires --dataset");

  std::vector<Dataset> datasets;
  for (const auto& path : c.table_datasets) datasets.push_back(load_manifest(path));

  struct MixJob {
    Dataset source;
    std::size_t target_index;
  };
  std::vector<MixJob> mixes;
  for (const auto& spec : c.table_mixes) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos) {
      throw UsageError("--mix expects source_manifest=target_manifest");
    }
    const std::string src = spec.substr(0, eq), tgt = spec.substr(eq + 1);
    std::size_t target_index = datasets.size();
    for (std::size_t i = 0; i < c.table_datasets.size(); ++i) {
      if (c.table_datasets[i] == tgt) target_index = i;
    }
    if (target_index == datasets.size()) {
      throw UsageError("--mix target must be one of the --dataset manifests");
    }
    mixes.push_back({load_manifest(src), target_index});
  }

  ModelSpec naive = c.model, linear = c.model, neural = c.model;
  naive.kind = ModelKind::naive;
  linear.kind = ModelKind::linear;
  neural.kind = ModelKind::mlp;

  ordered_json echo = {{"command", "table1"},
                       {"runs", c.n_runs},
                       {"base_seed", c.base_seed},
                       {"model", model_to_json(neural)}};
  {
    ordered_json names = ordered_json::array();
    for (const auto& d : datasets) names.push_back(d.name);
    echo["datasets"] = std::move(names);
    ordered_json mix_names = ordered_json::array();
    for (const auto& m : mixes) {
      mix_names.push_back(m.source.name + "->" + datasets[m.target_index].name);
    }
    echo["mixes"] = std::move(mix_names);
  }

  // rows: method x (per dataset: rms_hz, rms_octave)
  std::vector<std::string> columns = {"method"};
  for (const auto& d : datasets) {
    columns.push_back(d.name + "_rms_hz");
    columns.push_back(d.name + "_rms_octave");
  }

  std::vector<std::vector<std::string>> rows;
  std::vector<std::vector<std::string>> run_rows;
  auto collect_runs = [&](const std::string& method, const std::string& dataset,
                          const ErrorReport& rep) {
    for (const auto& r : rep.per_run) {
      run_rows.push_back({method, dataset, std::to_string(r.seed),
                          fmt_double(r.rms_hz), fmt_double(r.rms_octave),
                          std::to_string(r.n_test)});
    }
  };

  for (const auto& [label, spec] :
       std::vector<std::pair<std::string, ModelSpec>>{
           {"naive", naive}, {"linear", linear}, {"neural", neural}}) {
    std::vector<std::string> row = {label};
    for (const auto& d : datasets) {
      const ErrorReport rep = run_repeated(d, spec, c.n_runs, c.base_seed);
      collect_runs(label, d.name, rep);
      row.push_back(fmt_double(rep.rms_hz));
      row.push_back(fmt_double(rep.rms_octave));
    }
    rows.push_back(std::move(row));
  }
  for (const auto& m : mixes) {
    const std::string label = "mix(" + m.source.name + ")";
    std::vector<std::string> row = {label};
    for (std::size_t i = 0; i < datasets.size(); ++i) {
      if (i == m.target_index) {
        const ErrorReport rep = domain_mix(m.source, datasets[i], neural,
                                           c.n_runs, c.base_seed);
        collect_runs(label, datasets[i].name, rep);
        row.push_back(fmt_double(rep.rms_hz));
        row.push_back(fmt_double(rep.rms_octave));
      } else {
        row.push_back("NA");
        row.push_back("NA");
      }
    }
    rows.push_back(std::move(row));
  }

  fs::create_directories(c.out_dir);
  write_csv_atomic(fs::path(c.out_dir) / "table1.csv",
                   csv_header("table1", echo), columns, rows);
  write_csv_atomic(fs::path(c.out_dir) / "table1_runs.csv",
                   csv_header("table1_runs", echo),
                   {"method", "dataset", "seed", "rms_hz", "rms_octave", "n_test"},
                   run_rows);

  std::cout << "wrote " << (fs::path(c.out_dir) / "table1.csv").string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"N1 pinna-notch extraction and anthropometry-based prediction"};
  app.require_subcommand(1);

  CliConfig cfg;

  // The config file is applied before flag parsing so flags win.
  std::string config_path;
  for (int i = 1; i + 1 < argc; ++i) {
    if (std::string(argv[i]) == "--config") config_path = argv[i + 1];
  }
  try {
    if (!config_path.empty()) apply_config_file(cfg, config_path);
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  std::string window_kind_str, model_kind_str, activation_str, mapping_str;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON config file (flags override)");
    sub->add_option("--out-dir", cfg.out_dir, "output directory");
    sub->add_option("--seed", cfg.base_seed, "base seed; all randomness derives from it");
  };
  auto add_extraction = [&](CLI::App* sub) {
    sub->add_option("--window-ms", cfg.extraction.window_length_ms, "window length (ms)");
    sub->add_option("--window", window_kind_str,
                    "window kind: rectangular|hann|blackman_harris_4term");
    sub->add_option("--fft-size", cfg.extraction.fft_size, "FFT size (power of two)");
    sub->add_option("--prominence-db", cfg.extraction.prominence_db,
                    "minimum notch depth (dB)");
    sub->add_option("--search-max-hz", cfg.extraction.search_max_hz,
                    "upper frequency bound of the P1/N1 search");
  };
  auto add_model = [&](CLI::App* sub) {
    sub->add_option("--model", model_kind_str, "naive|linear|mlp");
    sub->add_option("--hidden-units", cfg.model.hidden_units, "mlp units per hidden layer");
    sub->add_option("--hidden-layers", cfg.model.hidden_layers, "mlp hidden layer count");
    sub->add_option("--activation", activation_str, "relu|tanh");
    sub->add_option("--learning-rate", cfg.model.learning_rate, "mlp learning rate");
    sub->add_option("--batch-size", cfg.model.batch_size, "mlp batch size");
    sub->add_option("--max-epochs", cfg.model.max_epochs, "mlp epoch cap");
    sub->add_option("--patience", cfg.model.patience, "early-stop patience (epochs)");
    sub->add_option("--ridge", cfg.model.ridge, "linear model L2 penalty");
    sub->add_option("--runs", cfg.n_runs, "number of seeded repetitions");
  };

  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  add_common(synth);
  synth->add_option("--n", cfg.synth.n_examples, "number of examples");
  synth->add_option("--mapping", mapping_str, "linear|nonlinear");
  synth->add_option("--noise-std-hz", cfg.synth.noise_std_hz, "label noise std (Hz)");
  synth->add_option("--synth-seed", cfg.synth.seed, "generator seed");
  synth->add_option("--sample-rate", cfg.synth.sample_rate_hz, "sample rate (Hz)");
  synth->add_option("--reflection-gain", cfg.synth.reflection_gain,
                    "comb reflection gain in [0,1)");
  synth->add_option("--hrir-length", cfg.synth.hrir_length, "HRIR length (samples)");

  CLI::App* extract = app.add_subcommand("extract", "extract N1 labels and filter");
  add_common(extract);
  add_extraction(extract);
  extract->add_option("--dataset", cfg.dataset_path, "dataset manifest")->required();
  extract->add_option("--min-n1-hz", cfg.min_n1_hz, "keep records with n1 >= this");
  extract->add_flag("--require-prominent,!--no-require-prominent",
                    cfg.require_prominent, "require a prominent notch");

  CLI::App* run = app.add_subcommand("run", "run a prediction protocol");
  add_common(run);
  add_model(run);
  run->add_option("--dataset", cfg.dataset_path, "labeled dataset manifest")->required();
  run->add_option("--source", cfg.source_path, "source dataset (protocol mix)");
  run->add_option("--protocol", cfg.protocol, "single|repeated|sweep|loo|mix");
  run->add_option("--train-sizes", cfg.train_sizes, "sweep train sizes")
      ->delimiter(',');
  run->add_option("--test-size", cfg.test_size, "sweep fixed test size");

  CLI::App* table1 = app.add_subcommand(
      "table1", "naive/linear/neural (and mixes) across datasets");
  add_common(table1);
  add_model(table1);
  table1->add_option("--dataset", cfg.table_datasets, "dataset manifests (repeatable)")
      ->required();
  table1->add_option("--mix", cfg.table_mixes,
                     "domain mix source_manifest=target_manifest (repeatable)");

  CLI::App* overlap = app.add_subcommand("overlap", "feature distribution overlap");
  add_common(overlap);
  overlap->add_option("--dataset", cfg.dataset_path, "first dataset manifest")->required();
  overlap->add_option("--second", cfg.source_path, "second dataset manifest")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  }

  try {
    if (!window_kind_str.empty()) {
      cfg.extraction.window_kind = window_kind_from_string(window_kind_str);
    }
    if (!model_kind_str.empty()) cfg.model.kind = model_kind_from_string(model_kind_str);
    if (!activation_str.empty()) cfg.model.activation = activation_from_string(activation_str);
    if (!mapping_str.empty()) cfg.synth.mapping = mapping_kind_from_string(mapping_str);

    if (synth->parsed()) return cmd_synth(cfg);
    if (extract->parsed()) return cmd_extract(cfg);
    if (run->parsed()) return cmd_run(cfg);
    if (table1->parsed()) return cmd_table1(cfg);
    if (overlap->parsed()) return cmd_overlap(cfg);
    throw UsageError("no subcommand given");
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
