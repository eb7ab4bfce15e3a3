#ifndef LIGHTTRACK_SKELETON_HPP
#define LIGHTTRACK_SKELETON_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cstddef>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "lighttrack/errors.hpp"
#include "lighttrack/geometry.hpp"

namespace lighttrack {

// Joint graph: named nodes plus undirected limb edges. Edges are stored
// with the smaller index first and kept sorted, so topologies built from
// reordered edge lists compare equal.
struct SkeletonTopology {
  std::string name;
  std::vector<std::string> joint_names;
  std::vector<std::pair<int, int>> edges;

  int joint_count() const { return static_cast<int>(joint_names.size()); }

  int joint_index(const std::string& joint) const {
    for (std::size_t i = 0; i < joint_names.size(); ++i) {
      if (joint_names[i] == joint) return static_cast<int>(i);
    }
    return -1;
  }

  bool adjacent(int i, int j) const {
    for (const auto& [a, b] : edges) {
      if ((a == i && b == j) || (a == j && b == i)) return true;
    }
    return false;
  }

  std::vector<int> neighbors(int i) const {
    std::vector<int> out;
    for (const auto& [a, b] : edges) {
      if (a == i) out.push_back(b);
      if (b == i) out.push_back(a);
    }
    std::sort(out.begin(), out.end());
    return out;
  }

  bool operator==(const SkeletonTopology&) const = default;
};

// Per-joint mean distance from the skeleton gravity center, estimated over
// a training set of normalized poses.
struct ReferenceRadii {
  std::vector<double> r;
};

// One JxJ operator per partition class. Class 0 holds the root itself plus
// equal-radius neighbors, class 1 the centripetal neighbors (closer to the
// gravity center than the root), class 2 the centrifugal ones. Non-zero
// entries already carry the 1/Z normalization.
struct PartitionedAdjacency {
  std::array<Eigen::MatrixXd, 3> ops;

  int joint_count() const { return static_cast<int>(ops[0].rows()); }
};

inline void validate_topology(const SkeletonTopology& topo) {
  const int j = topo.joint_count();
  if (j == 0) throw ValidationError("topology: no joints");
  std::set<std::string> names(topo.joint_names.begin(), topo.joint_names.end());
  if (static_cast<int>(names.size()) != j) {
    throw ValidationError("topology: duplicate joint name");
  }
  std::set<std::pair<int, int>> seen;
  for (const auto& [a, b] : topo.edges) {
    if (a < 0 || a >= j || b < 0 || b >= j) {
      throw ValidationError("topology: edge index out of range");
    }
    if (a == b) throw ValidationError("topology: self-loop edge");
    if (!seen.insert({std::min(a, b), std::max(a, b)}).second) {
      throw ValidationError("topology: duplicate edge");
    }
  }
  // connectivity (single joint is trivially connected)
  std::vector<bool> visited(j, false);
  std::vector<int> stack{0};
  visited[0] = true;
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    for (int n : topo.neighbors(v)) {
      if (!visited[n]) {
        visited[n] = true;
        stack.push_back(n);
      }
    }
  }
  if (std::find(visited.begin(), visited.end(), false) != visited.end()) {
    throw ValidationError("topology: graph is not connected");
  }
}

inline SkeletonTopology make_topology(std::string name,
                                      std::vector<std::string> joint_names,
                                      std::vector<std::pair<int, int>> edges) {
  for (auto& [a, b] : edges) {
    if (a > b) std::swap(a, b);
  }
  std::sort(edges.begin(), edges.end());
  SkeletonTopology topo{std::move(name), std::move(joint_names), std::move(edges)};
  validate_topology(topo);
  return topo;
}

// Canonical joint order used by sequence files and the bundled skeleton.
inline const std::vector<std::string>& canonical_joint_order() {
  static const std::vector<std::string> order = {
      "head_top",     "neck",          "nose",
      "left_shoulder", "right_shoulder",
      "left_elbow",   "right_elbow",
      "left_wrist",   "right_wrist",
      "left_hip",     "right_hip",
      "left_knee",    "right_knee",
      "left_ankle",   "right_ankle"};
  return order;
}

// The bundled 15-joint skeleton with 14 limb edges.
inline SkeletonTopology posetrack15_topology() {
  const auto& n = canonical_joint_order();
  auto idx = [&](const char* joint) {
    return static_cast<int>(std::find(n.begin(), n.end(), joint) - n.begin());
  };
  std::vector<std::pair<int, int>> edges = {
      {idx("head_top"), idx("nose")},
      {idx("nose"), idx("neck")},
      {idx("neck"), idx("left_shoulder")},
      {idx("neck"), idx("right_shoulder")},
      {idx("left_shoulder"), idx("left_elbow")},
      {idx("left_elbow"), idx("left_wrist")},
      {idx("right_shoulder"), idx("right_elbow")},
      {idx("right_elbow"), idx("right_wrist")},
      {idx("neck"), idx("left_hip")},
      {idx("neck"), idx("right_hip")},
      {idx("left_hip"), idx("left_knee")},
      {idx("left_knee"), idx("left_ankle")},
      {idx("right_hip"), idx("right_knee")},
      {idx("right_knee"), idx("right_ankle")}};
  return make_topology("posetrack15", n, std::move(edges));
}

// --- topology text format (version 1) ---
//
//   # comments and blank lines are ignored
//   version 1
//   name <identifier>
//   joint <name>            (one line per joint, declaration order matters)
//   edge <name_a> <name_b>
//
// See docs/file_formats.md.

inline SkeletonTopology parse_topology(std::istream& in) {
  std::string line;
  int line_no = 0;
  bool saw_version = false;
  std::string name;
  std::vector<std::string> joints;
  std::vector<std::pair<std::string, std::string>> edge_names;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    std::istringstream ls(line);
    std::string keyword;
    if (!(ls >> keyword)) continue;
    auto fail = [&](const std::string& what) {
      throw ParseError("topology line " + std::to_string(line_no) + ": " + what);
    };
    if (keyword == "version") {
      int v = 0;
      if (!(ls >> v)) fail("missing version number");
      if (v != 1) {
        throw SchemaVersionError("topology: unsupported version " + std::to_string(v));
      }
      saw_version = true;
    } else if (keyword == "name") {
      if (!(ls >> name)) fail("missing name");
    } else if (keyword == "joint") {
      std::string joint;
      if (!(ls >> joint)) fail("missing joint name");
      joints.push_back(joint);
    } else if (keyword == "edge") {
      std::string a, b;
      if (!(ls >> a >> b)) fail("edge needs two joint names");
      edge_names.emplace_back(a, b);
    } else {
      fail("unknown keyword '" + keyword + "'");
    }
  }
  if (!saw_version) throw ParseError("topology: missing 'version' line");
  SkeletonTopology tmp{name, joints, {}};
  std::vector<std::pair<int, int>> edges;
  for (const auto& [a, b] : edge_names) {
    const int ia = tmp.joint_index(a);
    const int ib = tmp.joint_index(b);
    if (ia < 0) throw ParseError("topology: edge references unknown joint '" + a + "'");
    if (ib < 0) throw ParseError("topology: edge references unknown joint '" + b + "'");
    edges.emplace_back(ia, ib);
  }
  return make_topology(name, joints, std::move(edges));
}

inline SkeletonTopology load_topology(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("topology: cannot open " + path);
  return parse_topology(in);
}

inline void emit_topology(const SkeletonTopology& topo, std::ostream& out) {
  out << "version 1\n";
  out << "name " << topo.name << "\n";
  for (const auto& joint : topo.joint_names) out << "joint " << joint << "\n";
  for (const auto& [a, b] : topo.edges) {
    out << "edge " << topo.joint_names[a] << " " << topo.joint_names[b] << "\n";
  }
}

// Mean of the valid joint coordinates.
inline std::array<double, 2> gravity_center(const NormalizedPose& pose) {
  double sx = 0.0, sy = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < pose.size(); ++i) {
    if (!pose.valid[i]) continue;
    sx += pose.coords[i][0];
    sy += pose.coords[i][1];
    ++n;
  }
  if (n == 0) throw EmptyPose("gravity_center: no valid joints");
  return {sx / static_cast<double>(n), sy / static_cast<double>(n)};
}

// r_i = mean over poses of the distance from each pose's gravity center to
// joint i; poses where joint i is invalid are skipped for that joint.
inline ReferenceRadii compute_reference_radii(
    const std::vector<NormalizedPose>& poses, const SkeletonTopology& topo) {
  if (poses.empty()) throw NoValidSamples("compute_reference_radii: no poses");
  const std::size_t j = static_cast<std::size_t>(topo.joint_count());
  std::vector<double> sum(j, 0.0);
  std::vector<std::size_t> count(j, 0);
  for (const NormalizedPose& pose : poses) {
    if (pose.size() != j) {
      throw ShapeMismatch("compute_reference_radii: pose size mismatch");
    }
    const auto gc = gravity_center(pose);
    for (std::size_t i = 0; i < j; ++i) {
      if (!pose.valid[i]) continue;
      sum[i] += std::hypot(pose.coords[i][0] - gc[0], pose.coords[i][1] - gc[1]);
      ++count[i];
    }
  }
  ReferenceRadii radii;
  radii.r.resize(j);
  for (std::size_t i = 0; i < j; ++i) {
    if (count[i] == 0) {
      throw NoValidSamples("compute_reference_radii: joint " + topo.joint_names[i] +
                           " is invalid in every pose");
    }
    radii.r[i] = sum[i] / static_cast<double>(count[i]);
  }
  return radii;
}

// Spatial-configuration partition label of neighbor j seen from root i:
// 0 equal radius (always the case for j == i), 1 centripetal, 2 centrifugal.
inline int partition_label(const SkeletonTopology& topo, const ReferenceRadii& radii,
                           int i, int j) {
  if (i != j && !topo.adjacent(i, j)) {
    throw NotNeighbors("partition_label: joint " + std::to_string(j) +
                       " is not in the neighborhood of " + std::to_string(i));
  }
  const double ri = radii.r[static_cast<std::size_t>(i)];
  const double rj = radii.r[static_cast<std::size_t>(j)];
  if (rj == ri) return 0;
  return rj < ri ? 1 : 2;
}

// Places 1/Z_i(v_j) into ops[label(i,j)](i,j) for every j in the 1-hop
// neighborhood of i (the root included), where Z_i(v_j) counts the
// neighborhood members sharing j's partition class.
inline PartitionedAdjacency build_partitioned_adjacency(
    const SkeletonTopology& topo, const ReferenceRadii& radii) {
  const int j = topo.joint_count();
  if (static_cast<int>(radii.r.size()) != j) {
    throw ShapeMismatch("build_partitioned_adjacency: radii size mismatch");
  }
  PartitionedAdjacency adj;
  for (auto& op : adj.ops) op = Eigen::MatrixXd::Zero(j, j);
  for (int root = 0; root < j; ++root) {
    std::vector<int> hood = topo.neighbors(root);
    hood.push_back(root);
    std::array<int, 3> class_size = {0, 0, 0};
    for (int n : hood) {
      ++class_size[static_cast<std::size_t>(partition_label(topo, radii, root, n))];
    }
    for (int n : hood) {
      const int label = partition_label(topo, radii, root, n);
      adj.ops[static_cast<std::size_t>(label)](root, n) =
          1.0 / static_cast<double>(class_size[static_cast<std::size_t>(label)]);
    }
  }
  return adj;
}

}  // namespace lighttrack

#endif  // LIGHTTRACK_SKELETON_HPP
