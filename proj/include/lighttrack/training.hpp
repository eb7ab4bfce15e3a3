#ifndef LIGHTTRACK_TRAINING_HPP
#define LIGHTTRACK_TRAINING_HPP

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "lighttrack/errors.hpp"
#include "lighttrack/gcn.hpp"
#include "lighttrack/matcher.hpp"
#include "lighttrack/pairs.hpp"
#include "lighttrack/rng.hpp"
#include "lighttrack/skeleton.hpp"

namespace lighttrack {

struct TrainConfig {
  int batch_size = 32;
  int epochs = 200;
  double lr = 0.001;
  std::vector<int> lr_decay_epochs = {40, 60, 80, 100};  // 1-based epoch numbers
  double lr_decay_factor = 0.1;
  double weight_decay = 1e-4;
  double momentum = 0.0;
  double margin = 1.0;
  int hidden_channels = 64;
  int embedding_dim = 128;
  std::uint64_t seed = 1;
};

inline void validate_train_config(const TrainConfig& cfg) {
  if (cfg.batch_size <= 0) throw InvalidConfig("train: batch_size must be positive");
  if (cfg.epochs <= 0) throw InvalidConfig("train: epochs must be positive");
  if (cfg.lr < 0.0) throw InvalidConfig("train: lr must be nonnegative");
  if (!(cfg.lr_decay_factor > 0.0 && cfg.lr_decay_factor <= 1.0)) {
    throw InvalidConfig("train: lr_decay_factor must be in (0, 1]");
  }
  if (!(cfg.weight_decay >= 0.0 && cfg.weight_decay < 1.0)) {
    throw InvalidConfig("train: weight_decay must be in [0, 1)");
  }
  if (!(cfg.momentum >= 0.0 && cfg.momentum < 1.0)) {
    throw InvalidConfig("train: momentum must be in [0, 1)");
  }
  if (!(cfg.margin > 0.0)) throw InvalidConfig("train: margin must be positive");
  if (cfg.hidden_channels <= 0 || cfg.embedding_dim <= 0) {
    throw InvalidConfig("train: channel sizes must be positive");
  }
  for (std::size_t i = 0; i < cfg.lr_decay_epochs.size(); ++i) {
    if (cfg.lr_decay_epochs[i] < 1 ||
        (i > 0 && cfg.lr_decay_epochs[i] <= cfg.lr_decay_epochs[i - 1])) {
      throw InvalidConfig("train: lr_decay_epochs must be ascending and >= 1");
    }
  }
}

struct TrainResult {
  GcnWeights weights;
  std::vector<double> loss_curve;  // mean pair loss per epoch
};

namespace detail {

// One SGD step. Weight decay is decoupled from the gradient step: matrices
// and edge-importance masks shrink by (1 - lambda) per step regardless of
// the learning rate; biases are exempt. Edge importance is clamped to stay
// nonnegative, which keeps the stored models self-consistent.
inline void sgd_step(GcnWeights& w, GcnGradients& velocity, const GcnGradients& grad,
                     double lr, double weight_decay, double momentum) {
  auto upd = [&](Eigen::MatrixXd& param, Eigen::MatrixXd& vel, const Eigen::MatrixXd& g,
                 bool decay) {
    if (momentum > 0.0) {
      vel = momentum * vel + g;
    } else {
      vel = g;
    }
    if (decay && weight_decay > 0.0) param *= (1.0 - weight_decay);
    param -= lr * vel;
  };
  auto upd_vec = [&](Eigen::VectorXd& param, Eigen::VectorXd& vel, const Eigen::VectorXd& g) {
    if (momentum > 0.0) {
      vel = momentum * vel + g;
    } else {
      vel = g;
    }
    param -= lr * vel;
  };
  auto layer = [&](GcnLayerWeights& lw, GcnLayerGradients& lv, const GcnLayerGradients& lg) {
    for (std::size_t c = 0; c < 3; ++c) upd(lw.w[c], lv.w[c], lg.w[c], true);
    upd_vec(lw.bias, lv.bias, lg.bias);
    upd(lw.edge_importance, lv.edge_importance, lg.edge_importance, true);
    lw.edge_importance = lw.edge_importance.cwiseMax(0.0);
  };
  layer(w.layer1, velocity.layer1, grad.layer1);
  layer(w.layer2, velocity.layer2, grad.layer2);
  upd(w.head_w, velocity.head_w, grad.head_w, true);
  upd_vec(w.head_b, velocity.head_b, grad.head_b);
}

}  // namespace detail

// Trains the matcher net on mined pairs. Deterministic for a fixed config:
// initialization and the per-epoch shuffle both come from cfg.seed.
inline TrainResult train(const PairDataset& pairs, const TrainConfig& cfg,
                         const SkeletonTopology& topology, const ReferenceRadii& radii) {
  validate_train_config(cfg);
  if (pairs.pairs.empty()) throw EmptyDataset("train: no pairs");
  bool has_pos = false, has_neg = false;
  for (const PosePair& p : pairs.pairs) {
    (p.label == 1 ? has_pos : has_neg) = true;
  }
  if (!has_pos || !has_neg) throw DegenerateDataset("train: need both labels");
  if (pairs.joint_order != topology.joint_names) {
    throw ValidationError("train: pair dataset joint order does not match topology");
  }

  GcnDims dims;
  dims.joints = static_cast<int>(topology.joint_count());
  dims.hidden_channels = cfg.hidden_channels;
  dims.embedding_dim = cfg.embedding_dim;
  const PartitionedAdjacency adj = build_partitioned_adjacency(topology, radii);

  TrainResult result;
  result.weights = init_weights(dims, cfg.seed);
  GcnGradients velocity = zero_gradients(dims);
  Rng shuffle_rng(cfg.seed ^ 0x9e3779b97f4a7c15ull);

  std::vector<std::size_t> order(pairs.pairs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  double lr = cfg.lr;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    if (std::find(cfg.lr_decay_epochs.begin(), cfg.lr_decay_epochs.end(), epoch) !=
        cfg.lr_decay_epochs.end()) {
      lr *= cfg.lr_decay_factor;
    }
    shuffle_rng.shuffle(order);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      std::vector<EmbeddingPairRef> batch;
      batch.reserve(end - start);
      for (std::size_t i = start; i < end; ++i) {
        const PosePair& p = pairs.pairs[order[i]];
        batch.push_back(EmbeddingPairRef{&p.a, &p.b, p.label});
      }
      BatchGradients bg = loss_gradients(batch, result.weights, adj, cfg.margin);
      epoch_loss += bg.mean_loss * static_cast<double>(end - start);
      detail::sgd_step(result.weights, velocity, bg.grads, lr, cfg.weight_decay, cfg.momentum);
    }
    result.loss_curve.push_back(epoch_loss / static_cast<double>(order.size()));
  }
  return result;
}

// Reference radii from the training poses themselves (both pair sides).
inline ReferenceRadii radii_from_pairs(const PairDataset& pairs,
                                       const SkeletonTopology& topology) {
  std::vector<NormalizedPose> poses;
  poses.reserve(pairs.pairs.size() * 2);
  for (const PosePair& p : pairs.pairs) {
    poses.push_back(p.a);
    poses.push_back(p.b);
  }
  return compute_reference_radii(poses, topology);
}

// Full pipeline: compute radii, train, calibrate the decision threshold on
// the validation pairs (positive + hard-negative protocol; falls back to all
// categories when that subset is single-label), bundle everything.
struct FitResult {
  MatcherModel model;
  std::vector<double> loss_curve;
  double validation_accuracy = 0.0;
};

// Embedding distances + labels for a pair set under given weights.
inline void pair_distances(const GcnWeights& weights, const PartitionedAdjacency& adj,
                           const PairDataset& pairs, bool skip_other_negatives,
                           std::vector<double>& distances, std::vector<int>& labels) {
  for (const PosePair& p : pairs.pairs) {
    if (skip_other_negatives && p.category == PairCategory::kOtherNegative) continue;
    const Embedding ea = embed(p.a, weights, adj);
    const Embedding eb = embed(p.b, weights, adj);
    distances.push_back(pose_distance(ea, eb));
    labels.push_back(p.label);
  }
}

inline Calibration calibrate_matcher_threshold(const GcnWeights& weights,
                                               const PartitionedAdjacency& adj,
                                               const PairDataset& validation) {
  std::vector<double> distances;
  std::vector<int> labels;
  pair_distances(weights, adj, validation, true, distances, labels);
  const bool both = std::find(labels.begin(), labels.end(), 1) != labels.end() &&
                    std::find(labels.begin(), labels.end(), 0) != labels.end();
  if (!both) {
    distances.clear();
    labels.clear();
    pair_distances(weights, adj, validation, false, distances, labels);
  }
  return calibrate_threshold(distances, labels);
}

inline FitResult fit_matcher(const PairDataset& train_pairs, const PairDataset& val_pairs,
                             const TrainConfig& cfg, const SkeletonTopology& topology) {
  FitResult fit;
  fit.model.topology = topology;
  fit.model.radii = radii_from_pairs(train_pairs, topology);
  fit.model.margin = cfg.margin;
  TrainResult tr = train(train_pairs, cfg, topology, fit.model.radii);
  fit.model.weights = std::move(tr.weights);
  fit.loss_curve = std::move(tr.loss_curve);

  const PartitionedAdjacency adj = build_partitioned_adjacency(topology, fit.model.radii);
  const Calibration cal = calibrate_matcher_threshold(fit.model.weights, adj, val_pairs);
  fit.model.match_threshold = cal.threshold;
  fit.validation_accuracy = cal.accuracy;
  validate_model(fit.model);
  return fit;
}

}  // namespace lighttrack

#endif  // LIGHTTRACK_TRAINING_HPP
