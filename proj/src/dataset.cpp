#include "notchkit/dataset.hpp"

#include <bit>
#include <fstream>
#include <map>
#include <set>

#include <nlohmann/json.hpp>

#include "notchkit/csv.hpp"
#include "notchkit/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "HRIR files are little-endian; byte swapping is not implemented");

namespace notchkit {

using ordered_json = nlohmann::ordered_json;

const char* to_string(Ear e) { return e == Ear::left ? "left" : "right"; }

const char* to_string(Acquisition a) {
  return a == Acquisition::simulated ? "simulated" : "measured";
}

Ear ear_from_string(const std::string& s) {
  if (s == "left") return Ear::left;
  if (s == "right") return Ear::right;
  throw DataError("unknown ear: '" + s + "'");
}

Acquisition acquisition_from_string(const std::string& s) {
  if (s == "simulated") return Acquisition::simulated;
  if (s == "measured") return Acquisition::measured;
  throw DataError("unknown acquisition: '" + s + "'");
}

std::vector<double> read_hrir_samples(const std::filesystem::path& path,
                                      std::size_t expected_count) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open HRIR file: " + path.string());
  in.seekg(0, std::ios::end);
  const auto bytes = static_cast<std::size_t>(in.tellg());
  if (bytes != expected_count * sizeof(float)) {
    throw DataError("HRIR file " + path.string() + " holds " +
                    std::to_string(bytes / sizeof(float)) +
                    " samples, manifest declares " +
                    std::to_string(expected_count));
  }
  in.seekg(0);
  std::vector<float> raw(expected_count);
  in.read(reinterpret_cast<char*>(raw.data()),
          static_cast<std::streamsize>(bytes));
  if (!in) throw DataError("short read on HRIR file: " + path.string());
  return std::vector<double>(raw.begin(), raw.end());
}

void write_hrir_samples(const std::filesystem::path& path,
                        const std::vector<double>& samples) {
  std::vector<float> raw(samples.begin(), samples.end());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write HRIR file: " + path.string());
  out.write(reinterpret_cast<const char*>(raw.data()),
            static_cast<std::streamsize>(raw.size() * sizeof(float)));
  if (!out) throw DataError("write failed: " + path.string());
}

KeypointMapping load_keypoint_mapping(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open keypoint mapping: " + path.string());
  ordered_json j;
  try {
    j = ordered_json::parse(in);
  } catch (const std::exception& e) {
    throw DataError("malformed keypoint mapping " + path.string() + ": " +
                    e.what());
  }
  KeypointMapping m;
  for (int i = 0; i < 7; ++i) {
    const std::string key = "d" + std::to_string(i + 1);
    if (!j.contains(key) || !j[key].is_array() || j[key].size() != 2) {
      throw DataError("keypoint mapping missing pair for " + key);
    }
    m.distance_pairs[i] = {j[key][0].get<int>(), j[key][1].get<int>()};
  }
  for (const char* key : {"rotation", "flare"}) {
    auto& slot = std::string(key) == "rotation" ? m.rotation_fixed : m.flare_fixed;
    if (!j.contains(key)) {
      throw DataError(std::string("keypoint mapping missing ") + key);
    }
    if (j[key].is_string()) {
      if (j[key].get<std::string>() != "provided") {
        throw DataError(std::string("keypoint mapping ") + key +
                        " must be a number or \"provided\"");
      }
      slot = std::nullopt;
    } else {
      slot = j[key].get<double>();
    }
  }
  return m;
}

void save_keypoint_mapping(const KeypointMapping& m,
                           const std::filesystem::path& path) {
  ordered_json j;
  for (int i = 0; i < 7; ++i) {
    j["d" + std::to_string(i + 1)] = {m.distance_pairs[i].first,
                                      m.distance_pairs[i].second};
  }
  if (m.rotation_fixed) j["rotation"] = *m.rotation_fixed;
  else j["rotation"] = "provided";
  if (m.flare_fixed) j["flare"] = *m.flare_fixed;
  else j["flare"] = "provided";
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write keypoint mapping: " + path.string());
  out << j.dump(2) << "\n";
}

namespace {

const std::vector<std::string> kAnthroColumns = {
    "d1", "d2", "d3", "d4", "d5", "d6", "d7", "rotation", "flare"};

std::vector<AnthroVector> read_anthro_csv(const std::filesystem::path& path) {
  const CsvTable t = read_csv(path);
  if (t.columns != kAnthroColumns) {
    throw DataError("anthropometry CSV " + path.string() +
                    " must have header d1..d7,rotation,flare");
  }
  std::vector<AnthroVector> out;
  out.reserve(t.rows.size());
  for (const auto& row : t.rows) {
    AnthroVector v;
    for (int i = 0; i < 7; ++i) v.d[i] = parse_double(row[i]);
    v.rotation_deg = parse_double(row[7]);
    v.flare_deg = parse_double(row[8]);
    out.push_back(v);
  }
  return out;
}

std::vector<Point3> read_keypoints_csv(const std::filesystem::path& path) {
  const CsvTable t = read_csv(path);
  if (t.columns != std::vector<std::string>{"x", "y", "z"}) {
    throw DataError("keypoints CSV " + path.string() + " must have header x,y,z");
  }
  std::vector<Point3> out;
  out.reserve(t.rows.size());
  for (const auto& row : t.rows) {
    out.push_back({parse_double(row[0]), parse_double(row[1]),
                   parse_double(row[2])});
  }
  return out;
}

std::vector<Point3> mirror_x(const std::vector<Point3>& pts) {
  std::vector<Point3> out = pts;
  for (auto& p : out) p.x = -p.x;
  return out;
}

}  // namespace

Dataset load_manifest(const std::filesystem::path& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw DataError("cannot open manifest: " + manifest_path.string());
  ordered_json j;
  try {
    j = ordered_json::parse(in);
  } catch (const std::exception& e) {
    throw DataError("malformed manifest " + manifest_path.string() + ": " +
                    e.what());
  }
  const auto base = manifest_path.parent_path();

  Dataset d;
  try {
    d.name = j.at("name").get<std::string>();
    d.acquisition = acquisition_from_string(j.at("acquisition").get<std::string>());
    d.sample_rate_hz = j.at("sample_rate_hz").get<double>();
    d.direction.azimuth_deg = j.at("direction").at("azimuth_deg").get<double>();
    d.direction.elevation_deg = j.at("direction").at("elevation_deg").get<double>();
    d.deduplicate_identical = j.value("deduplicate_identical", false);
    if (!j.contains("records") || !j["records"].is_array()) {
      throw DataError("manifest has no records array");
    }
  } catch (const DataError&) {
    throw;
  } catch (const std::exception& e) {
    throw DataError("malformed manifest " + manifest_path.string() + ": " +
                    e.what());
  }
  if (d.sample_rate_hz <= 0) throw DataError("sample_rate_hz must be positive");

  if (j.contains("keypoint_mapping")) {
    d.keypoint_mapping =
        load_keypoint_mapping(base / j["keypoint_mapping"].get<std::string>());
  }

  std::map<std::filesystem::path, std::vector<AnthroVector>> anthro_cache;
  std::set<std::pair<std::string, std::string>> seen;

  for (const auto& rj : j["records"]) {
    SubjectRecord r;
    try {
      r.subject_id = rj.at("subject_id").get<std::string>();
      r.ear = ear_from_string(rj.at("ear").get<std::string>());
    } catch (const DataError&) {
      throw;
    } catch (const std::exception& e) {
      throw DataError("malformed record in manifest: " + std::string(e.what()));
    }

    if (!seen.insert({r.subject_id, to_string(r.ear)}).second) {
      throw DataError("duplicate record (" + r.subject_id + ", " +
                      to_string(r.ear) + ")");
    }

    if (rj.contains("sample_rate_hz") &&
        rj["sample_rate_hz"].get<double>() != d.sample_rate_hz) {
      throw DataError("sample-rate mismatch for (" + r.subject_id + ", " +
                      to_string(r.ear) + ")");
    }

    if (rj.contains("anthro_csv_row") && rj.contains("keypoints_file")) {
      throw DataError("record (" + r.subject_id +
                      ") has both anthro_csv_row and keypoints_file");
    }

    if (rj.contains("anthro_csv_row")) {
      const auto& a = rj["anthro_csv_row"];
      const auto file = base / a.at("file").get<std::string>();
      const auto row = a.at("row").get<std::size_t>();
      auto it = anthro_cache.find(file);
      if (it == anthro_cache.end()) {
        it = anthro_cache.emplace(file, read_anthro_csv(file)).first;
      }
      if (row >= it->second.size()) {
        throw DataError("anthro row " + std::to_string(row) +
                        " out of range in " + file.string());
      }
      r.anthro = it->second[row];
    } else if (rj.contains("keypoints_file")) {
      if (!d.keypoint_mapping) {
        throw DataError("record (" + r.subject_id +
                        ") uses keypoints but the manifest names no keypoint_mapping");
      }
      r.keypoints = read_keypoints_csv(base / rj["keypoints_file"].get<std::string>());
      const auto& m = *d.keypoint_mapping;
      double rotation = 0, flare = 0;
      if (m.rotation_fixed) {
        rotation = *m.rotation_fixed;
      } else if (rj.contains("rotation_deg")) {
        rotation = rj["rotation_deg"].get<double>();
      } else {
        throw DataError("record (" + r.subject_id + ") missing rotation_deg");
      }
      if (m.flare_fixed) {
        flare = *m.flare_fixed;
      } else if (rj.contains("flare_deg")) {
        flare = rj["flare_deg"].get<double>();
      } else {
        throw DataError("record (" + r.subject_id + ") missing flare_deg");
      }
      // Right-ear point sets are mirrored so both ears share one geometric
      // orientation; the distances themselves are reflection-invariant.
      const auto pts = r.ear == Ear::right ? mirror_x(*r.keypoints) : *r.keypoints;
      r.anthro = distances_from_keypoints(pts, m, rotation, flare);
    }

    if (rj.contains("hrir_file")) {
      if (!rj.contains("hrir_samples")) {
        throw DataError("record (" + r.subject_id +
                        ") has hrir_file but no hrir_samples count");
      }
      Hrir h;
      h.samples = read_hrir_samples(base / rj["hrir_file"].get<std::string>(),
                                    rj["hrir_samples"].get<std::size_t>());
      h.sample_rate_hz = d.sample_rate_hz;
      h.azimuth_deg = d.direction.azimuth_deg;
      h.elevation_deg = d.direction.elevation_deg;
      r.hrir = std::move(h);
    }
    if (rj.contains("n1_hz")) {
      r.n1_label_hz = rj["n1_hz"].get<double>();
    }
    r.prominent = rj.value("prominent", true);

    if (!r.hrir && !r.n1_label_hz) {
      throw DataError("record (" + r.subject_id + ", " + to_string(r.ear) +
                      ") has neither an HRIR nor an n1_hz label");
    }
    d.records.push_back(std::move(r));
  }
  return d;
}

std::filesystem::path save_manifest(const Dataset& d,
                                    const std::filesystem::path& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);

  ordered_json j;
  j["name"] = d.name;
  j["acquisition"] = to_string(d.acquisition);
  j["sample_rate_hz"] = d.sample_rate_hz;
  j["direction"] = {{"azimuth_deg", d.direction.azimuth_deg},
                    {"elevation_deg", d.direction.elevation_deg}};
  j["deduplicate_identical"] = d.deduplicate_identical;
  if (d.keypoint_mapping) {
    save_keypoint_mapping(*d.keypoint_mapping, out_dir / "keypoint_mapping.json");
    j["keypoint_mapping"] = "keypoint_mapping.json";
  }

  // Anthropometry rows for records that carry a vector but no keypoints
  // (keypoint records recompute their distances at load time).
  std::vector<std::vector<std::string>> anthro_rows;
  ordered_json records = ordered_json::array();
  std::size_t idx = 0;
  for (const auto& r : d.records) {
    ordered_json rj;
    rj["subject_id"] = r.subject_id;
    rj["ear"] = to_string(r.ear);

    if (r.keypoints) {
      const std::string kp_name = "keypoints_" + std::to_string(idx) + ".csv";
      std::vector<std::vector<std::string>> rows;
      rows.reserve(r.keypoints->size());
      for (const auto& p : *r.keypoints) {
        rows.push_back({fmt_double(p.x), fmt_double(p.y), fmt_double(p.z)});
      }
      write_csv_atomic(out_dir / kp_name, {}, {"x", "y", "z"}, rows);
      rj["keypoints_file"] = kp_name;
      const auto& m = d.keypoint_mapping;
      if (!m) throw DataError("dataset has keypoint records but no mapping");
      if (!m->rotation_fixed) rj["rotation_deg"] = r.anthro ? r.anthro->rotation_deg : 0.0;
      if (!m->flare_fixed) rj["flare_deg"] = r.anthro ? r.anthro->flare_deg : 0.0;
    } else if (r.anthro) {
      std::vector<std::string> row;
      for (double x : r.anthro->as_array()) row.push_back(fmt_double(x));
      rj["anthro_csv_row"] = {{"file", "anthro.csv"}, {"row", anthro_rows.size()}};
      anthro_rows.push_back(std::move(row));
    }

    if (r.hrir) {
      const std::string hrir_name = "hrir_" + std::to_string(idx) + ".f32";
      write_hrir_samples(out_dir / hrir_name, r.hrir->samples);
      rj["hrir_file"] = hrir_name;
      rj["hrir_samples"] = r.hrir->samples.size();
    }
    if (r.n1_label_hz) rj["n1_hz"] = *r.n1_label_hz;
    rj["prominent"] = r.prominent;

    records.push_back(std::move(rj));
    ++idx;
  }
  j["records"] = std::move(records);

  if (!anthro_rows.empty()) {
    write_csv_atomic(out_dir / "anthro.csv", {}, kAnthroColumns, anthro_rows);
  }

  const fs::path manifest = out_dir / "manifest.json";
  const fs::path tmp = manifest.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw DataError("cannot write manifest: " + manifest.string());
    out << j.dump(2) << "\n";
  }
  fs::rename(tmp, manifest);
  return manifest;
}

Dataset filter_records(const Dataset& d, double min_n1_hz,
                       bool require_prominent) {
  Dataset out = d;
  out.records.clear();
  for (const auto& r : d.records) {
    if (!r.n1_label_hz) {
      if (!r.prominent) continue;  // no notch found: nothing to keep
      throw DataError("record (" + r.subject_id + ", " + to_string(r.ear) +
                      ") lacks an extracted n1 label");
    }
    if (require_prominent && !r.prominent) continue;
    if (*r.n1_label_hz >= min_n1_hz) out.records.push_back(r);
  }
  return out;
}

namespace {

// Everything except identity: two ears with equal payloads are duplicates.
bool same_payload(const SubjectRecord& a, const SubjectRecord& b) {
  bool hrir_equal = a.hrir.has_value() == b.hrir.has_value();
  if (hrir_equal && a.hrir) hrir_equal = a.hrir->samples == b.hrir->samples;
  return hrir_equal && a.anthro == b.anthro && a.keypoints == b.keypoints &&
         a.n1_label_hz == b.n1_label_hz && a.prominent == b.prominent;
}

}  // namespace

Dataset merge_ears(const Dataset& d) {
  if (!d.deduplicate_identical) return d;
  Dataset out = d;
  out.records.clear();
  for (std::size_t i = 0; i < d.records.size(); ++i) {
    const auto& r = d.records[i];
    if (r.ear == Ear::right) {
      bool dup_of_left = false;
      for (const auto& other : d.records) {
        if (other.subject_id == r.subject_id && other.ear == Ear::left &&
            same_payload(other, r)) {
          dup_of_left = true;
          break;
        }
      }
      if (dup_of_left) continue;
    }
    out.records.push_back(r);
  }
  return out;
}

std::vector<NotchFeatures> extract_labels(Dataset& d, const ExtractionParams& p) {
  std::vector<NotchFeatures> out;
  out.reserve(d.records.size());
  for (auto& r : d.records) {
    if (r.hrir) {
      NotchFeatures nf = extract_n1(*r.hrir, p);
      if (nf.prominent) {
        r.n1_label_hz = *nf.n1_hz;
        r.prominent = true;
      } else {
        r.n1_label_hz = std::nullopt;
        r.prominent = false;
      }
      out.push_back(std::move(nf));
    } else {
      // Precomputed label: pass it through as the notch estimate.
      NotchFeatures nf;
      nf.prominent = r.prominent;
      if (r.n1_label_hz) nf.n1_hz = *r.n1_label_hz;
      out.push_back(std::move(nf));
    }
  }
  return out;
}

Dataset take_records(const Dataset& d, const std::vector<int>& indices) {
  Dataset out = d;
  out.records.clear();
  out.records.reserve(indices.size());
  for (int i : indices) {
    if (i < 0 || i >= static_cast<int>(d.records.size())) {
      throw DataError("record index out of range: " + std::to_string(i));
    }
    out.records.push_back(d.records[static_cast<std::size_t>(i)]);
  }
  return out;
}

}  // namespace notchkit
