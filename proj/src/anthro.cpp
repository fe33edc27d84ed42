#include "notchkit/anthro.hpp"

#include <cmath>

#include "notchkit/errors.hpp"

namespace notchkit {

const std::array<std::string, 9>& AnthroVector::feature_names() {
  static const std::array<std::string, 9> names = {
      "d1", "d2", "d3", "d4", "d5", "d6", "d7", "rotation", "flare"};
  return names;
}

AnthroVector distances_from_keypoints(const std::vector<Point3>& points_mm,
                                      const KeypointMapping& mapping,
                                      double rotation_deg, double flare_deg) {
  AnthroVector out;
  const int n = static_cast<int>(points_mm.size());
  for (int i = 0; i < 7; ++i) {
    const auto [ia, ib] = mapping.distance_pairs[i];
    if (ia < 0 || ia >= n || ib < 0 || ib >= n) {
      throw DataError("keypoint index out of range for " +
                      AnthroVector::feature_names()[i] + ": [" +
                      std::to_string(ia) + ", " + std::to_string(ib) +
                      "] with " + std::to_string(n) + " points");
    }
    const Point3& a = points_mm[ia];
    const Point3& b = points_mm[ib];
    const double dx = a.x - b.x, dy = a.y - b.y, dz = a.z - b.z;
    const double dist_mm = std::sqrt(dx * dx + dy * dy + dz * dz);
    if (dist_mm == 0.0) {
      throw DataError("coincident keypoints for " +
                      AnthroVector::feature_names()[i]);
    }
    out.d[i] = dist_mm / 10.0;  // mm -> cm
  }
  out.rotation_deg = rotation_deg;
  out.flare_deg = flare_deg;
  return out;
}

Normalizer::Normalizer(const std::array<double, 9>& mean,
                       const std::array<double, 9>& stddev)
    : mean_(mean), stddev_(stddev) {}

Normalizer Normalizer::fit(const std::vector<AnthroVector>& train) {
  if (train.size() < 2) {
    throw DataError("normalizer needs at least 2 training vectors, got " +
                    std::to_string(train.size()));
  }
  const double n = static_cast<double>(train.size());
  std::array<double, 9> mean{};
  for (const auto& v : train) {
    const auto x = v.as_array();
    for (int i = 0; i < 9; ++i) mean[i] += x[i];
  }
  for (int i = 0; i < 9; ++i) mean[i] /= n;

  std::array<double, 9> stddev{};
  for (const auto& v : train) {
    const auto x = v.as_array();
    for (int i = 0; i < 9; ++i) {
      const double c = x[i] - mean[i];
      stddev[i] += c * c;
    }
  }
  for (int i = 0; i < 9; ++i) {
    stddev[i] = std::sqrt(stddev[i] / n);
    if (stddev[i] <= 1e-12 * std::max(1.0, std::abs(mean[i]))) {
      throw DataError("degenerate (constant) feature: " +
                      AnthroVector::feature_names()[i]);
    }
  }
  return Normalizer(mean, stddev);
}

std::array<double, 9> Normalizer::apply(const AnthroVector& v) const {
  const auto x = v.as_array();
  std::array<double, 9> out{};
  for (int i = 0; i < 9; ++i) out[i] = (x[i] - mean_[i]) / stddev_[i];
  return out;
}

}  // namespace notchkit
