#pragma once

#include <array>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace notchkit {

struct Point3 {
  double x = 0, y = 0, z = 0;
  bool operator==(const Point3&) const = default;
};

// The nine CIPIC pinna features: seven distances d1..d7 in centimeters plus
// the rotation and flare angles in degrees. Feature order is fixed so that
// trained weights stay portable across runs.
struct AnthroVector {
  std::array<double, 7> d{};  // centimeters
  double rotation_deg = 0;
  double flare_deg = 0;

  std::array<double, 9> as_array() const {
    return {d[0], d[1], d[2], d[3], d[4], d[5], d[6], rotation_deg, flare_deg};
  }

  static const std::array<std::string, 9>& feature_names();

  bool operator==(const AnthroVector&) const = default;
};

// Names the keypoint pair approximating each CIPIC distance. The angles are
// either fixed in the mapping or supplied per record ("provided").
struct KeypointMapping {
  std::array<std::pair<int, int>, 7> distance_pairs{};
  std::optional<double> rotation_fixed;  // nullopt: record provides the angle
  std::optional<double> flare_fixed;

  bool operator==(const KeypointMapping&) const = default;
};

// Euclidean pair distances over the keypoints, mm converted to cm; the two
// angles pass through. Throws DataError on out-of-range indices or
// coincident points.
AnthroVector distances_from_keypoints(const std::vector<Point3>& points_mm,
                                      const KeypointMapping& mapping,
                                      double rotation_deg, double flare_deg);

// Per-feature z-score statistics. Fit on training data only; never on
// validation or test examples.
class Normalizer {
 public:
  Normalizer() = default;
  Normalizer(const std::array<double, 9>& mean, const std::array<double, 9>& stddev);

  // Population mean/std (1/n) per feature. Throws DataError on fewer than
  // two vectors or on a constant feature, naming the feature.
  static Normalizer fit(const std::vector<AnthroVector>& train);

  // (x - mean) / std in the fixed feature order.
  std::array<double, 9> apply(const AnthroVector& v) const;

  const std::array<double, 9>& mean() const { return mean_; }
  const std::array<double, 9>& stddev() const { return stddev_; }

  bool operator==(const Normalizer&) const = default;

 private:
  std::array<double, 9> mean_{};
  std::array<double, 9> stddev_{1, 1, 1, 1, 1, 1, 1, 1, 1};
};

}  // namespace notchkit
