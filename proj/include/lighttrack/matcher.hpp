#ifndef LIGHTTRACK_MATCHER_HPP
#define LIGHTTRACK_MATCHER_HPP

#include <cmath>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "lighttrack/errors.hpp"
#include "lighttrack/gcn.hpp"
#include "lighttrack/geometry.hpp"
#include "lighttrack/sequence.hpp"
#include "lighttrack/skeleton.hpp"

namespace lighttrack {

inline constexpr int kWeightsFormatVersion = 1;

// Everything needed to run the matcher at inference time: the skeleton, the
// reference radii baked in at training time, the trained weights, and the
// calibrated decision threshold.
struct MatcherModel {
  SkeletonTopology topology;
  ReferenceRadii radii;
  GcnWeights weights;
  double margin = 1.0;
  double match_threshold = 0.5;
};

namespace detail {

using nlohmann::json;

inline json tensor_to_json(const Eigen::MatrixXd& m) {
  json t;
  t["shape"] = json::array({m.rows(), m.cols()});
  json data = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
  }
  t["data"] = data;
  return t;
}

inline json tensor_to_json(const Eigen::VectorXd& v) {
  json t;
  t["shape"] = json::array({v.size()});
  json data = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) data.push_back(v(i));
  t["data"] = data;
  return t;
}

inline Eigen::MatrixXd matrix_from_json(const json& t, const std::string& name) {
  const auto& shape = t.at("shape");
  if (shape.size() != 2) throw ValidationError("weights: " + name + " must be rank 2");
  const Eigen::Index rows = shape[0].get<Eigen::Index>();
  const Eigen::Index cols = shape[1].get<Eigen::Index>();
  const auto& data = t.at("data");
  if (static_cast<Eigen::Index>(data.size()) != rows * cols) {
    throw ValidationError("weights: " + name + " data length does not match shape");
  }
  Eigen::MatrixXd m(rows, cols);
  std::size_t k = 0;
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = data[k++].get<double>();
  }
  return m;
}

inline Eigen::VectorXd vector_from_json(const json& t, const std::string& name) {
  const auto& shape = t.at("shape");
  if (shape.size() != 1) throw ValidationError("weights: " + name + " must be rank 1");
  const Eigen::Index n = shape[0].get<Eigen::Index>();
  const auto& data = t.at("data");
  if (static_cast<Eigen::Index>(data.size()) != n) {
    throw ValidationError("weights: " + name + " data length does not match shape");
  }
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = data[i].get<double>();
  return v;
}

inline void layer_to_json(json& tensors, const std::string& prefix,
                          const GcnLayerWeights& layer) {
  for (int c = 0; c < 3; ++c) {
    tensors[prefix + ".w" + std::to_string(c)] =
        tensor_to_json(layer.w[static_cast<std::size_t>(c)]);
  }
  tensors[prefix + ".bias"] = tensor_to_json(layer.bias);
  tensors[prefix + ".edge_importance"] = tensor_to_json(layer.edge_importance);
}

inline GcnLayerWeights layer_from_json(const json& tensors, const std::string& prefix) {
  GcnLayerWeights layer;
  for (int c = 0; c < 3; ++c) {
    const std::string name = prefix + ".w" + std::to_string(c);
    layer.w[static_cast<std::size_t>(c)] = matrix_from_json(tensors.at(name), name);
  }
  layer.bias = vector_from_json(tensors.at(prefix + ".bias"), prefix + ".bias");
  layer.edge_importance =
      matrix_from_json(tensors.at(prefix + ".edge_importance"), prefix + ".edge_importance");
  return layer;
}

inline void check_finite(const Eigen::MatrixXd& m, const std::string& name) {
  if (!m.allFinite()) throw ValidationError("weights: " + name + " has non-finite entries");
}

}  // namespace detail

// Structural self-validation: shape agreement between dims, topology and
// tensors, finiteness, nonnegative edge importance values.
inline void validate_model(const MatcherModel& model) {
  const GcnDims& d = model.weights.dims;
  const int joints = static_cast<int>(model.topology.joint_count());
  if (d.joints != joints) {
    throw ValidationError("weights: dims.joints does not match topology");
  }
  if (static_cast<int>(model.radii.r.size()) != joints) {
    throw ValidationError("weights: reference radii length does not match topology");
  }
  if (!(model.margin > 0.0)) throw ValidationError("weights: margin must be positive");
  if (!(model.match_threshold >= 0.0)) {
    throw ValidationError("weights: match_threshold must be nonnegative");
  }
  for (double r : model.radii.r) {
    if (!std::isfinite(r) || r < 0.0) throw ValidationError("weights: invalid reference radius");
  }
  auto check_layer = [&](const GcnLayerWeights& layer, int in, int out, const std::string& name) {
    for (int c = 0; c < 3; ++c) {
      const auto& w = layer.w[static_cast<std::size_t>(c)];
      if (w.rows() != in || w.cols() != out) {
        throw ValidationError("weights: " + name + " w" + std::to_string(c) + " shape mismatch");
      }
      detail::check_finite(w, name);
    }
    if (layer.bias.size() != out) {
      throw ValidationError("weights: " + name + " bias shape mismatch");
    }
    if (layer.edge_importance.rows() != joints || layer.edge_importance.cols() != joints) {
      throw ValidationError("weights: " + name + " edge_importance shape mismatch");
    }
    detail::check_finite(layer.bias, name);
    detail::check_finite(layer.edge_importance, name);
    if ((layer.edge_importance.array() < 0.0).any()) {
      throw ValidationError("weights: " + name + " edge_importance has negative entries");
    }
  };
  check_layer(model.weights.layer1, d.input_channels, d.hidden_channels, "layer1");
  check_layer(model.weights.layer2, d.hidden_channels, d.hidden_channels, "layer2");
  if (model.weights.head_w.rows() != d.hidden_channels ||
      model.weights.head_w.cols() != d.embedding_dim) {
    throw ValidationError("weights: head_w shape mismatch");
  }
  if (model.weights.head_b.size() != d.embedding_dim) {
    throw ValidationError("weights: head_b shape mismatch");
  }
  detail::check_finite(model.weights.head_w, "head_w");
  detail::check_finite(model.weights.head_b, "head_b");
}

inline nlohmann::json model_to_json(const MatcherModel& model) {
  using nlohmann::json;
  json j;
  j["format_version"] = kWeightsFormatVersion;
  json topo;
  topo["name"] = model.topology.name;
  topo["joint_order"] = model.topology.joint_names;
  json edges = json::array();
  for (const auto& e : model.topology.edges) {
    edges.push_back(json::array({e.first, e.second}));
  }
  topo["edges"] = edges;
  j["topology"] = topo;
  json dims;
  dims["input_channels"] = model.weights.dims.input_channels;
  dims["hidden_channels"] = model.weights.dims.hidden_channels;
  dims["embedding_dim"] = model.weights.dims.embedding_dim;
  dims["joints"] = model.weights.dims.joints;
  j["dims"] = dims;
  j["margin"] = model.margin;
  j["match_threshold"] = model.match_threshold;
  j["reference_radii"] = model.radii.r;
  json tensors;
  detail::layer_to_json(tensors, "layer1", model.weights.layer1);
  detail::layer_to_json(tensors, "layer2", model.weights.layer2);
  tensors["head.w"] = detail::tensor_to_json(model.weights.head_w);
  tensors["head.b"] = detail::tensor_to_json(model.weights.head_b);
  j["tensors"] = tensors;
  return j;
}

inline MatcherModel model_from_json(const nlohmann::json& j) {
  if (!j.contains("format_version")) throw ParseError("weights: missing format_version");
  if (j.at("format_version").get<int>() != kWeightsFormatVersion) {
    throw SchemaVersionError("weights: unsupported format_version");
  }
  MatcherModel model;
  try {
    const auto& topo = j.at("topology");
    std::vector<std::pair<int, int>> edges;
    for (const auto& e : topo.at("edges")) {
      edges.emplace_back(e.at(0).get<int>(), e.at(1).get<int>());
    }
    model.topology = make_topology(topo.at("name").get<std::string>(),
                                   topo.at("joint_order").get<std::vector<std::string>>(), edges);
    const auto& dims = j.at("dims");
    model.weights.dims.input_channels = dims.at("input_channels").get<int>();
    model.weights.dims.hidden_channels = dims.at("hidden_channels").get<int>();
    model.weights.dims.embedding_dim = dims.at("embedding_dim").get<int>();
    model.weights.dims.joints = dims.at("joints").get<int>();
    model.margin = j.at("margin").get<double>();
    model.match_threshold = j.at("match_threshold").get<double>();
    model.radii.r = j.at("reference_radii").get<std::vector<double>>();
    const auto& tensors = j.at("tensors");
    model.weights.layer1 = detail::layer_from_json(tensors, "layer1");
    model.weights.layer2 = detail::layer_from_json(tensors, "layer2");
    model.weights.head_w = detail::matrix_from_json(tensors.at("head.w"), "head.w");
    model.weights.head_b = detail::vector_from_json(tensors.at("head.b"), "head.b");
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("weights: ") + e.what());
  }
  validate_model(model);
  return model;
}

inline MatcherModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("weights: cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("weights " + path + ": " + e.what());
  }
  return model_from_json(j);
}

inline void save_model(const MatcherModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ProviderError("weights: cannot write " + path);
  out << model_to_json(model).dump(1) << "\n";
}

// Runtime wrapper: caches the partitioned adjacency and exposes pose-level
// distances. Each pose is normalized by the box derived from its own
// keypoints, so embeddings do not depend on where the person is in the image.
class PoseMatcher {
 public:
  explicit PoseMatcher(MatcherModel model)
      : model_(std::move(model)),
        adjacency_(build_partitioned_adjacency(model_.topology, model_.radii)) {
    validate_model(model_);
  }

  const MatcherModel& model() const { return model_; }
  const PartitionedAdjacency& adjacency() const { return adjacency_; }

  Embedding embed_normalized(const NormalizedPose& pose) const {
    return embed(pose, model_.weights, adjacency_);
  }

  Embedding embed_pose(const Pose& pose) const {
    const BoundingBox box = bbox_from_pose(pose);
    return embed_normalized(normalize_pose(pose, box));
  }

  double distance(const Pose& a, const Pose& b) const {
    return pose_distance(embed_pose(a), embed_pose(b));
  }

  double normalized_distance(const NormalizedPose& a, const NormalizedPose& b) const {
    return pose_distance(embed_normalized(a), embed_normalized(b));
  }

  bool matches(double distance) const { return distance < model_.match_threshold; }

 private:
  MatcherModel model_;
  PartitionedAdjacency adjacency_;
};

}  // namespace lighttrack

#endif  // LIGHTTRACK_MATCHER_HPP
