#ifndef LIGHTTRACK_GCN_HPP
#define LIGHTTRACK_GCN_HPP

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "lighttrack/errors.hpp"
#include "lighttrack/geometry.hpp"
#include "lighttrack/rng.hpp"
#include "lighttrack/skeleton.hpp"

namespace lighttrack {

struct GcnDims {
  int input_channels = 2;
  int hidden_channels = 64;
  int embedding_dim = 128;
  int joints = 15;

  bool operator==(const GcnDims&) const = default;
};

// One graph-convolution layer: a weight matrix per partition class, a bias
// shared across nodes, and a learnable edge-importance mask multiplied into
// the adjacency operators.
struct GcnLayerWeights {
  std::array<Eigen::MatrixXd, 3> w;  // C_in x C_out each
  Eigen::VectorXd bias;              // C_out
  Eigen::MatrixXd edge_importance;   // J x J
};

// All learnable parameters of the pose matcher. The two siamese branches
// share one instance.
struct GcnWeights {
  GcnDims dims;
  GcnLayerWeights layer1;  // input_channels -> hidden
  GcnLayerWeights layer2;  // hidden -> hidden
  Eigen::MatrixXd head_w;  // hidden x embedding_dim
  Eigen::VectorXd head_b;  // embedding_dim
};

// L2-normalized latent pose representation.
struct Embedding {
  Eigen::VectorXd v;
};

struct GcnLayerGradients {
  std::array<Eigen::MatrixXd, 3> w;
  Eigen::VectorXd bias;
  Eigen::MatrixXd edge_importance;
};

// Gradient structure congruent to GcnWeights.
struct GcnGradients {
  GcnLayerGradients layer1;
  GcnLayerGradients layer2;
  Eigen::MatrixXd head_w;
  Eigen::VectorXd head_b;
};

namespace detail {

inline GcnLayerGradients zero_layer_gradients(int c_in, int c_out, int joints) {
  GcnLayerGradients g;
  for (auto& m : g.w) m = Eigen::MatrixXd::Zero(c_in, c_out);
  g.bias = Eigen::VectorXd::Zero(c_out);
  g.edge_importance = Eigen::MatrixXd::Zero(joints, joints);
  return g;
}

}  // namespace detail

inline GcnGradients zero_gradients(const GcnDims& d) {
  GcnGradients g;
  g.layer1 = detail::zero_layer_gradients(d.input_channels, d.hidden_channels, d.joints);
  g.layer2 = detail::zero_layer_gradients(d.hidden_channels, d.hidden_channels, d.joints);
  g.head_w = Eigen::MatrixXd::Zero(d.hidden_channels, d.embedding_dim);
  g.head_b = Eigen::VectorXd::Zero(d.embedding_dim);
  return g;
}

inline Eigen::MatrixXd glorot_uniform(int rows, int cols, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Eigen::MatrixXd m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) m(r, c) = rng.uniform(-limit, limit);
  }
  return m;
}

// Fresh weights: Glorot-uniform matrices, zero biases, all-ones edge masks.
inline GcnWeights init_weights(const GcnDims& d, std::uint64_t seed) {
  Rng rng(seed);
  GcnWeights w;
  w.dims = d;
  for (auto& m : w.layer1.w) m = glorot_uniform(d.input_channels, d.hidden_channels, rng);
  w.layer1.bias = Eigen::VectorXd::Zero(d.hidden_channels);
  w.layer1.edge_importance = Eigen::MatrixXd::Ones(d.joints, d.joints);
  for (auto& m : w.layer2.w) m = glorot_uniform(d.hidden_channels, d.hidden_channels, rng);
  w.layer2.bias = Eigen::VectorXd::Zero(d.hidden_channels);
  w.layer2.edge_importance = Eigen::MatrixXd::Ones(d.joints, d.joints);
  w.head_w = glorot_uniform(d.hidden_channels, d.embedding_dim, rng);
  w.head_b = Eigen::VectorXd::Zero(d.embedding_dim);
  return w;
}

// Input feature matrix: one row of normalized coordinates per joint,
// zeroed where the joint is invalid.
inline Eigen::MatrixXd pose_features(const NormalizedPose& pose) {
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(static_cast<int>(pose.size()), 2);
  for (int i = 0; i < static_cast<int>(pose.size()); ++i) {
    if (!pose.valid[static_cast<std::size_t>(i)]) continue;
    x(i, 0) = pose.coords[static_cast<std::size_t>(i)][0];
    x(i, 1) = pose.coords[static_cast<std::size_t>(i)][1];
  }
  return x;
}

struct LayerTrace {
  Eigen::MatrixXd input;
  std::array<Eigen::MatrixXd, 3> a_eff;  // ops[c] masked by edge importance
  std::array<Eigen::MatrixXd, 3> xw;     // input * w[c]
  Eigen::MatrixXd pre;                   // before ReLU
  Eigen::MatrixXd out;                   // after ReLU
};

// out = ReLU( sum_c (ops[c] .* mask) * input * w[c] + bias ), the
// partition-normalized graph convolution vectorized over nodes.
inline LayerTrace gcn_layer_forward_trace(const Eigen::MatrixXd& input,
                                          const PartitionedAdjacency& adj,
                                          const GcnLayerWeights& layer) {
  const int j = static_cast<int>(input.rows());
  if (adj.joint_count() != j || layer.edge_importance.rows() != j ||
      layer.edge_importance.cols() != j) {
    throw ShapeMismatch("gcn_layer_forward: node count mismatch");
  }
  for (const auto& m : layer.w) {
    if (m.rows() != input.cols()) {
      throw ShapeMismatch("gcn_layer_forward: channel mismatch");
    }
  }
  LayerTrace t;
  t.input = input;
  t.pre = Eigen::MatrixXd::Zero(j, layer.w[0].cols());
  for (std::size_t c = 0; c < 3; ++c) {
    t.a_eff[c] = adj.ops[c].cwiseProduct(layer.edge_importance);
    t.xw[c] = input * layer.w[c];
    t.pre += t.a_eff[c] * t.xw[c];
  }
  t.pre.rowwise() += layer.bias.transpose();
  t.out = t.pre.cwiseMax(0.0);
  return t;
}

inline Eigen::MatrixXd gcn_layer_forward(const Eigen::MatrixXd& input,
                                         const PartitionedAdjacency& adj,
                                         const GcnLayerWeights& layer) {
  return gcn_layer_forward_trace(input, adj, layer).out;
}

struct EmbedTrace {
  LayerTrace l1;
  LayerTrace l2;
  std::vector<bool> valid;
  int n_valid = 0;
  Eigen::VectorXd pooled;  // mean over valid nodes of l2.out
  Eigen::VectorXd u;       // head output, pre-normalization
  double u_norm = 0.0;
  Embedding e;
  bool degenerate = false;  // fallback embedding, no gradient flows
};

// layer1 -> layer2 -> mean-pool over valid nodes -> linear head -> L2
// normalization. Poses with no valid joints (or a vanishing head output)
// map to a fixed uniform unit vector so the result is always well formed.
inline EmbedTrace embed_with_trace(const NormalizedPose& pose,
                                   const GcnWeights& w,
                                   const PartitionedAdjacency& adj) {
  if (static_cast<int>(pose.size()) != w.dims.joints) {
    throw ShapeMismatch("embed: pose does not match weight dims");
  }
  EmbedTrace t;
  t.valid = pose.valid;
  t.l1 = gcn_layer_forward_trace(pose_features(pose), adj, w.layer1);
  t.l2 = gcn_layer_forward_trace(t.l1.out, adj, w.layer2);
  t.pooled = Eigen::VectorXd::Zero(w.dims.hidden_channels);
  for (int i = 0; i < w.dims.joints; ++i) {
    if (!t.valid[static_cast<std::size_t>(i)]) continue;
    t.pooled += t.l2.out.row(i).transpose();
    ++t.n_valid;
  }
  if (t.n_valid > 0) t.pooled /= static_cast<double>(t.n_valid);
  t.u = w.head_w.transpose() * t.pooled + w.head_b;
  t.u_norm = t.u.norm();
  if (t.u_norm < 1e-12) {
    t.degenerate = true;
    t.e.v = Eigen::VectorXd::Constant(
        w.dims.embedding_dim, 1.0 / std::sqrt(static_cast<double>(w.dims.embedding_dim)));
  } else {
    t.e.v = t.u / t.u_norm;
  }
  return t;
}

inline Embedding embed(const NormalizedPose& pose, const GcnWeights& w,
                       const PartitionedAdjacency& adj) {
  return embed_with_trace(pose, w, adj).e;
}

// Euclidean distance between embeddings; in [0, 2] for unit vectors.
inline double pose_distance(const Embedding& a, const Embedding& b) {
  return (a.v - b.v).norm();
}

// Margin contrastive loss on the squared embedding distance.
inline double contrastive_loss(double distance, int label, double margin) {
  const double d2 = distance * distance;
  return 0.5 * label * d2 +
         0.5 * (1 - label) * std::max(0.0, margin - d2);
}

namespace detail {

// Backward through one layer. Returns the gradient w.r.t. the layer input.
inline Eigen::MatrixXd backprop_layer(const LayerTrace& t,
                                      const PartitionedAdjacency& adj,
                                      const GcnLayerWeights& layer,
                                      const Eigen::MatrixXd& g_out,
                                      GcnLayerGradients& acc) {
  const Eigen::MatrixXd g_pre =
      (t.pre.array() > 0.0).select(g_out, Eigen::MatrixXd::Zero(g_out.rows(), g_out.cols()));
  acc.bias += g_pre.colwise().sum().transpose();
  Eigen::MatrixXd g_input = Eigen::MatrixXd::Zero(t.input.rows(), t.input.cols());
  for (std::size_t c = 0; c < 3; ++c) {
    acc.w[c] += (t.a_eff[c] * t.input).transpose() * g_pre;
    acc.edge_importance += adj.ops[c].cwiseProduct(g_pre * t.xw[c].transpose());
    g_input += t.a_eff[c].transpose() * g_pre * layer.w[c].transpose();
  }
  return g_input;
}

// Backward through one siamese branch given the gradient at the normalized
// embedding.
inline void backprop_embedding(const EmbedTrace& t, const GcnWeights& w,
                               const PartitionedAdjacency& adj,
                               const Eigen::VectorXd& g_e, GcnGradients& acc) {
  if (t.degenerate) return;
  // d(u/|u|) pulls the component along e out of the gradient
  const Eigen::VectorXd g_u = (g_e - g_e.dot(t.e.v) * t.e.v) / t.u_norm;
  acc.head_w += t.pooled * g_u.transpose();
  acc.head_b += g_u;
  const Eigen::VectorXd g_pooled = w.head_w * g_u;
  Eigen::MatrixXd g_h2 = Eigen::MatrixXd::Zero(w.dims.joints, w.dims.hidden_channels);
  if (t.n_valid > 0) {
    const Eigen::RowVectorXd share = g_pooled.transpose() / static_cast<double>(t.n_valid);
    for (int i = 0; i < w.dims.joints; ++i) {
      if (t.valid[static_cast<std::size_t>(i)]) g_h2.row(i) = share;
    }
  }
  const Eigen::MatrixXd g_h1 = backprop_layer(t.l2, adj, w.layer2, g_h2, acc.layer2);
  backprop_layer(t.l1, adj, w.layer1, g_h1, acc.layer1);
}

inline void scale_gradients(GcnGradients& g, double s) {
  for (auto& m : g.layer1.w) m *= s;
  g.layer1.bias *= s;
  g.layer1.edge_importance *= s;
  for (auto& m : g.layer2.w) m *= s;
  g.layer2.bias *= s;
  g.layer2.edge_importance *= s;
  g.head_w *= s;
  g.head_b *= s;
}

}  // namespace detail

// Loss and exact parameter gradients for one pose pair, accumulated into
// acc. Both branches share the weights, so each pair contributes twice.
inline double pair_loss_and_gradients(const NormalizedPose& a,
                                      const NormalizedPose& b, int label,
                                      const GcnWeights& w,
                                      const PartitionedAdjacency& adj,
                                      double margin, GcnGradients& acc) {
  const EmbedTrace ta = embed_with_trace(a, w, adj);
  const EmbedTrace tb = embed_with_trace(b, w, adj);
  const Eigen::VectorXd diff = ta.e.v - tb.e.v;
  const double d2 = diff.squaredNorm();
  const double loss =
      0.5 * label * d2 + 0.5 * (1 - label) * std::max(0.0, margin - d2);
  // subgradient 0 at the hinge kink (d2 == margin)
  double dl_dd2 = 0.5 * label;
  if (label == 0 && d2 < margin) dl_dd2 -= 0.5;
  if (dl_dd2 != 0.0) {
    const Eigen::VectorXd g_ea = 2.0 * dl_dd2 * diff;
    detail::backprop_embedding(ta, w, adj, g_ea, acc);
    detail::backprop_embedding(tb, w, adj, -g_ea, acc);
  }
  return loss;
}

struct BatchGradients {
  GcnGradients grads;
  double mean_loss = 0.0;
};

// A pose pair ready for the matcher: both poses normalized by their own
// boxes, label 1 iff same identity.
struct EmbeddingPairRef {
  const NormalizedPose* a;
  const NormalizedPose* b;
  int label;
};

// Mean loss over the batch and its exact analytic gradient (mean over
// pairs, so learning-rate semantics do not depend on batch size).
inline BatchGradients loss_gradients(const std::vector<EmbeddingPairRef>& batch,
                                     const GcnWeights& w,
                                     const PartitionedAdjacency& adj,
                                     double margin) {
  if (batch.empty()) throw EmptyDataset("loss_gradients: empty batch");
  BatchGradients out;
  out.grads = zero_gradients(w.dims);
  for (const EmbeddingPairRef& p : batch) {
    out.mean_loss += pair_loss_and_gradients(*p.a, *p.b, p.label, w, adj, margin, out.grads);
  }
  const double inv = 1.0 / static_cast<double>(batch.size());
  out.mean_loss *= inv;
  detail::scale_gradients(out.grads, inv);
  return out;
}

}  // namespace lighttrack

#endif  // LIGHTTRACK_GCN_HPP
