#ifndef LIGHTTRACK_GEOMETRY_HPP
#define LIGHTTRACK_GEOMETRY_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "lighttrack/errors.hpp"

namespace lighttrack {

// Fraction of the tight keypoint box added on each side when inferring a
// bounding box from a pose (0.2 grows each axis by 40% in total).
inline constexpr double kBoxEnlargement = 0.2;

// Joints scoring below this floor are excluded from box fitting and masked
// out of normalized poses.
inline constexpr double kJointScoreFloor = 0.05;

struct Keypoint {
  double x = 0.0;
  double y = 0.0;
  double score = 0.0;
};

// Ordered joint list; the order must match the topology in use.
struct Pose {
  std::vector<Keypoint> joints;

  std::size_t size() const { return joints.size(); }
  bool empty() const { return joints.empty(); }
};

struct BoundingBox {
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 0.0;
  double y_max = 0.0;

  double width() const { return x_max - x_min; }
  double height() const { return y_max - y_min; }
  double area() const { return std::max(0.0, width()) * std::max(0.0, height()); }
  double center_x() const { return (x_min + x_max) / 2.0; }
  double center_y() const { return (y_min + y_max) / 2.0; }
  double diagonal() const { return std::hypot(width(), height()); }
};

// Unitless pose coordinates in [-1, 1], joint-wise validity mask.
struct NormalizedPose {
  std::vector<std::array<double, 2>> coords;
  std::vector<bool> valid;

  std::size_t size() const { return coords.size(); }
  std::size_t valid_count() const {
    return static_cast<std::size_t>(std::count(valid.begin(), valid.end(), true));
  }
};

// Tight box over joints with score >= score_floor, enlarged by
// kBoxEnlargement of the tight width/height on each side.
inline BoundingBox bbox_from_pose(const Pose& pose,
                                  double score_floor = kJointScoreFloor) {
  double x_min = std::numeric_limits<double>::infinity();
  double y_min = std::numeric_limits<double>::infinity();
  double x_max = -std::numeric_limits<double>::infinity();
  double y_max = -std::numeric_limits<double>::infinity();
  std::size_t qualifying = 0;
  for (const Keypoint& kp : pose.joints) {
    if (kp.score < score_floor) continue;
    ++qualifying;
    x_min = std::min(x_min, kp.x);
    x_max = std::max(x_max, kp.x);
    y_min = std::min(y_min, kp.y);
    y_max = std::max(y_max, kp.y);
  }
  if (qualifying < 2) {
    throw DegeneratePose("bbox_from_pose: fewer than 2 qualifying joints");
  }
  const double w = x_max - x_min;
  const double h = y_max - y_min;
  if (w == 0.0 && h == 0.0) {
    throw DegeneratePose("bbox_from_pose: zero-extent keypoint span");
  }
  return BoundingBox{x_min - kBoxEnlargement * w, y_min - kBoxEnlargement * h,
                     x_max + kBoxEnlargement * w, y_max + kBoxEnlargement * h};
}

// Intersection over union. Pairs whose union has zero area yield 0, so
// point- and line-boxes never produce NaN.
inline double iou(const BoundingBox& a, const BoundingBox& b) {
  const double ix = std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min);
  const double iy = std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min);
  if (ix <= 0.0 || iy <= 0.0) return 0.0;
  const double inter = ix * iy;
  const double uni = a.area() + b.area() - inter;
  if (uni <= 0.0) return 0.0;
  return inter / uni;
}

// Mean joint confidence s-bar.
inline double mean_confidence(const Pose& pose) {
  if (pose.empty()) throw EmptyPose("mean_confidence: empty pose");
  double sum = 0.0;
  for (const Keypoint& kp : pose.joints) sum += kp.score;
  return sum / static_cast<double>(pose.size());
}

// Maps joints into the box frame: center to (0,0), edges to +-1, clamped.
// Translating or uniformly scaling pose and box together leaves the result
// unchanged.
inline NormalizedPose normalize_pose(const Pose& pose, const BoundingBox& box,
                                     double score_floor = kJointScoreFloor) {
  const double w = box.width();
  const double h = box.height();
  if (w <= 0.0 || h <= 0.0) {
    throw DegenerateBox("normalize_pose: box has non-positive extent");
  }
  const double cx = box.center_x();
  const double cy = box.center_y();
  NormalizedPose out;
  out.coords.reserve(pose.size());
  out.valid.reserve(pose.size());
  for (const Keypoint& kp : pose.joints) {
    const double nx = std::clamp((kp.x - cx) / (w / 2.0), -1.0, 1.0);
    const double ny = std::clamp((kp.y - cy) / (h / 2.0), -1.0, 1.0);
    out.coords.push_back({nx, ny});
    out.valid.push_back(kp.score >= score_floor);
  }
  return out;
}

}  // namespace lighttrack

#endif  // LIGHTTRACK_GEOMETRY_HPP
