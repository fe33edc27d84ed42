#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "notchkit/anthro.hpp"
#include "notchkit/notch.hpp"

namespace notchkit {

enum class Ear { left, right };
enum class Acquisition { simulated, measured };

const char* to_string(Ear e);
const char* to_string(Acquisition a);
Ear ear_from_string(const std::string& s);
Acquisition acquisition_from_string(const std::string& s);

struct Direction {
  double azimuth_deg = 0;
  double elevation_deg = 0;
  bool operator==(const Direction&) const = default;
};

// One labeled example. Each ear is an independent example; at least one of
// hrir / n1_label_hz is present. Keypoints are kept as acquired (right-ear
// mirroring happens inside the distance computation, not here).
struct SubjectRecord {
  std::string subject_id;
  Ear ear = Ear::left;
  std::optional<AnthroVector> anthro;
  std::optional<std::vector<Point3>> keypoints;  // millimeters
  std::optional<Hrir> hrir;
  std::optional<double> n1_label_hz;
  bool prominent = true;

  bool operator==(const SubjectRecord&) const = default;
};

struct Dataset {
  std::string name;
  Acquisition acquisition = Acquisition::simulated;
  double sample_rate_hz = 48000;
  Direction direction;
  bool deduplicate_identical = false;
  std::optional<KeypointMapping> keypoint_mapping;
  std::vector<SubjectRecord> records;

  bool operator==(const Dataset&) const = default;
};

// Loads a dataset manifest (JSON, format documented in the README) and every
// per-record resource it references. Keypoint records get their CIPIC
// distances computed here, with right-ear x coordinates mirrored first.
// Throws DataError on malformed manifests, duplicate (subject, ear) pairs,
// missing files, or sample-rate mismatches.
Dataset load_manifest(const std::filesystem::path& manifest_path);

// Writes manifest.json plus per-record HRIR/anthropometry/keypoint files
// into out_dir. load_manifest(save_manifest(d)) reproduces d field for
// field. Returns the manifest path.
std::filesystem::path save_manifest(const Dataset& d,
                                    const std::filesystem::path& out_dir);

// Keeps records with n1_label_hz >= min_n1_hz (inclusive: the removal rule
// drops strictly-lower notches) and, when require_prominent, a prominent
// notch. Records flagged not-prominent may lack a label and are removed;
// a missing label on a prominent record is an error. Order preserved.
Dataset filter_records(const Dataset& d, double min_n1_hz, bool require_prominent);

// Ears are already independent examples; when the dataset declares
// deduplicate_identical, subjects whose two ears carry identical payloads
// keep only the left one.
Dataset merge_ears(const Dataset& d);

// Runs extract_n1 over every record with an HRIR and stores n1_label_hz /
// prominent on the record. Returns the per-record features in record order.
std::vector<NotchFeatures> extract_labels(Dataset& d, const ExtractionParams& p);

// Subset by record indices, order as given.
Dataset take_records(const Dataset& d, const std::vector<int>& indices);

// Reads/writes HRIR sample files: raw 32-bit IEEE-754 little-endian floats.
std::vector<double> read_hrir_samples(const std::filesystem::path& path,
                                      std::size_t expected_count);
void write_hrir_samples(const std::filesystem::path& path,
                        const std::vector<double>& samples);

// Keypoint-to-CIPIC mapping config (JSON: feature -> [index_a, index_b],
// rotation/flare -> "provided" or a fixed angle).
KeypointMapping load_keypoint_mapping(const std::filesystem::path& path);
void save_keypoint_mapping(const KeypointMapping& m,
                           const std::filesystem::path& path);

}  // namespace notchkit
