#ifndef LIGHTTRACK_PAIRS_HPP
#define LIGHTTRACK_PAIRS_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "lighttrack/errors.hpp"
#include "lighttrack/geometry.hpp"
#include "lighttrack/rng.hpp"
#include "lighttrack/sequence.hpp"

namespace lighttrack {

enum class PairCategory { kPositive, kHardNegative, kOtherNegative };

inline const char* to_string(PairCategory c) {
  switch (c) {
    case PairCategory::kPositive: return "positive";
    case PairCategory::kHardNegative: return "hard_negative";
    default: return "other_negative";
  }
}

inline PairCategory pair_category_from_string(const std::string& s) {
  if (s == "positive") return PairCategory::kPositive;
  if (s == "hard_negative") return PairCategory::kHardNegative;
  if (s == "other_negative") return PairCategory::kOtherNegative;
  throw ParseError("unknown pair category '" + s + "'");
}

// Where a mined pair came from; kept for debugging and split bookkeeping.
struct PairMeta {
  std::string seq_id;
  int frame_a = 0;
  int frame_b = 0;
  int gt_a = 0;
  int gt_b = 0;
};

struct PosePair {
  NormalizedPose a;
  NormalizedPose b;
  int label = 0;  // 1 iff category == kPositive
  PairCategory category = PairCategory::kOtherNegative;
  PairMeta meta;
};

struct PairDataset {
  std::vector<std::string> joint_order;
  std::vector<PosePair> pairs;

  std::size_t count(PairCategory c) const {
    std::size_t n = 0;
    for (const PosePair& p : pairs) n += p.category == c;
    return n;
  }
};

// Mines training pairs from ground-truth-annotated sequences.
//   positives:        same id in adjacent frames
//   hard negatives:   different ids, boxes overlapping (IOU > 0),
//                     same frame or adjacent frames
//   other negatives:  different ids, non-overlapping, same or adjacent frames
// Same-frame pairs are emitted once (i < j); adjacent-frame pairs once per
// (earlier-frame, later-frame) instance combination. Candidates without a
// gt_id or whose pose cannot be normalized are skipped.
inline PairDataset generate_pairs(const std::vector<ObservationSequence>& sequences,
                                  double score_floor = kJointScoreFloor) {
  PairDataset out;
  struct Inst {
    int gt_id;
    NormalizedPose norm;
    const BoundingBox* box;
  };
  for (const ObservationSequence& seq : sequences) {
    if (out.joint_order.empty()) {
      out.joint_order = seq.joint_order;
    } else if (out.joint_order != seq.joint_order) {
      throw ValidationError("generate_pairs: sequences disagree on joint order");
    }
    std::vector<std::vector<Inst>> frames(seq.frames.size());
    for (std::size_t f = 0; f < seq.frames.size(); ++f) {
      for (const Candidate& c : seq.frames[f].candidates) {
        if (!c.gt_id) continue;
        if (c.box.width() <= 0.0 || c.box.height() <= 0.0) continue;
        frames[f].push_back(Inst{*c.gt_id, normalize_pose(c.pose, c.box, score_floor), &c.box});
      }
    }
    auto emit = [&](const Inst& a, const Inst& b, int frame_a, int frame_b) {
      PosePair p;
      p.a = a.norm;
      p.b = b.norm;
      if (a.gt_id == b.gt_id) {
        p.label = 1;
        p.category = PairCategory::kPositive;
      } else {
        p.label = 0;
        p.category = iou(*a.box, *b.box) > 0.0 ? PairCategory::kHardNegative
                                               : PairCategory::kOtherNegative;
      }
      p.meta = PairMeta{seq.seq_id, frame_a, frame_b, a.gt_id, b.gt_id};
      out.pairs.push_back(std::move(p));
    };
    for (std::size_t f = 0; f < frames.size(); ++f) {
      const auto& cur = frames[f];
      for (std::size_t i = 0; i < cur.size(); ++i) {
        for (std::size_t k = i + 1; k < cur.size(); ++k) {
          emit(cur[i], cur[k], static_cast<int>(f), static_cast<int>(f));
        }
      }
      if (f + 1 < frames.size()) {
        for (const Inst& a : cur) {
          for (const Inst& b : frames[f + 1]) {
            emit(a, b, static_cast<int>(f), static_cast<int>(f) + 1);
          }
        }
      }
    }
  }
  return out;
}

// Baseline matcher distance: mean Euclidean distance between normalized
// coordinates over jointly valid joints. Pairs with no jointly valid joint
// get a sentinel larger than any reachable mean (coords live in [-1,1]^2).
inline constexpr double kIncomparableDistance = 4.0;

inline double euclidean_pose_distance(const NormalizedPose& a, const NormalizedPose& b) {
  if (a.size() != b.size()) throw ShapeMismatch("euclidean_pose_distance: joint counts differ");
  double sum = 0.0;
  int n = 0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    if (!a.valid[j] || !b.valid[j]) continue;
    const double dx = a.coords[j][0] - b.coords[j][0];
    const double dy = a.coords[j][1] - b.coords[j][1];
    sum += std::sqrt(dx * dx + dy * dy);
    ++n;
  }
  if (n == 0) return kIncomparableDistance;
  return sum / n;
}

using PairDistanceFn = std::function<double(const NormalizedPose&, const NormalizedPose&)>;

// Restricts to positive + hard-negative pairs (the evaluation protocol);
// returns the fraction where (distance < threshold) agrees with the label.
inline double matching_accuracy(const PairDataset& pairs, const PairDistanceFn& distance,
                                double threshold) {
  std::size_t correct = 0, total = 0;
  for (const PosePair& p : pairs.pairs) {
    if (p.category == PairCategory::kOtherNegative) continue;
    ++total;
    const bool match = distance(p.a, p.b) < threshold;
    correct += match == (p.label == 1);
  }
  if (total == 0) throw EmptyDataset("matching_accuracy: no positive/hard-negative pairs");
  return static_cast<double>(correct) / static_cast<double>(total);
}

// Threshold grid: 0, midpoints between consecutive distinct sorted
// distances, and max+1. Picks the grid value maximizing accuracy on
// (distance, label) samples; ties go to the smaller threshold.
struct Calibration {
  double threshold = 0.0;
  double accuracy = 0.0;
};

inline Calibration calibrate_threshold(const std::vector<double>& distances,
                                       const std::vector<int>& labels) {
  if (distances.empty()) throw EmptyDataset("calibrate_threshold: no samples");
  if (distances.size() != labels.size()) {
    throw ShapeMismatch("calibrate_threshold: distances/labels size mismatch");
  }
  std::vector<double> sorted = distances;
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  std::vector<double> grid;
  grid.push_back(0.0);
  for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
    grid.push_back(0.5 * (sorted[i] + sorted[i + 1]));
  }
  grid.push_back(sorted.back() + 1.0);
  Calibration best;
  best.accuracy = -1.0;
  for (double t : grid) {
    std::size_t correct = 0;
    for (std::size_t i = 0; i < distances.size(); ++i) {
      correct += (distances[i] < t) == (labels[i] == 1);
    }
    const double acc = static_cast<double>(correct) / static_cast<double>(distances.size());
    if (acc > best.accuracy) {
      best.threshold = t;
      best.accuracy = acc;
    }
  }
  return best;
}

// Balanced evaluation subset: equal positives and negatives, hard negatives
// preferred over other negatives, order shuffled deterministically.
inline PairDataset balanced_subset(const PairDataset& ds, std::size_t max_pairs, Rng& rng) {
  std::vector<std::size_t> pos, hard, other;
  for (std::size_t i = 0; i < ds.pairs.size(); ++i) {
    switch (ds.pairs[i].category) {
      case PairCategory::kPositive: pos.push_back(i); break;
      case PairCategory::kHardNegative: hard.push_back(i); break;
      case PairCategory::kOtherNegative: other.push_back(i); break;
    }
  }
  rng.shuffle(pos);
  rng.shuffle(hard);
  rng.shuffle(other);
  std::vector<std::size_t> neg = hard;
  neg.insert(neg.end(), other.begin(), other.end());
  std::size_t n = std::min(pos.size(), neg.size());
  n = std::min(n, max_pairs / 2);
  PairDataset out;
  out.joint_order = ds.joint_order;
  for (std::size_t i = 0; i < n; ++i) {
    out.pairs.push_back(ds.pairs[pos[i]]);
    out.pairs.push_back(ds.pairs[neg[i]]);
  }
  return out;
}

inline constexpr int kPairsFormatVersion = 1;

inline nlohmann::json pairs_to_json(const PairDataset& ds) {
  using nlohmann::json;
  json j;
  j["format_version"] = kPairsFormatVersion;
  j["joint_order"] = ds.joint_order;
  json arr = json::array();
  for (const PosePair& p : ds.pairs) {
    auto side = [](const NormalizedPose& np) {
      json s;
      json coords = json::array();
      json valid = json::array();
      for (std::size_t i = 0; i < np.size(); ++i) {
        coords.push_back(json::array({np.coords[i][0], np.coords[i][1]}));
        valid.push_back(np.valid[i] ? 1 : 0);
      }
      s["coords"] = coords;
      s["valid"] = valid;
      return s;
    };
    json jp;
    jp["label"] = p.label;
    jp["category"] = to_string(p.category);
    jp["a"] = side(p.a);
    jp["b"] = side(p.b);
    json meta;
    meta["seq_id"] = p.meta.seq_id;
    meta["frame_a"] = p.meta.frame_a;
    meta["frame_b"] = p.meta.frame_b;
    meta["gt_a"] = p.meta.gt_a;
    meta["gt_b"] = p.meta.gt_b;
    jp["meta"] = meta;
    arr.push_back(jp);
  }
  j["pairs"] = arr;
  return j;
}

inline PairDataset parse_pairs(const nlohmann::json& j) {
  using nlohmann::json;
  if (!j.contains("format_version")) throw ParseError("pairs: missing format_version");
  if (j.at("format_version").get<int>() != kPairsFormatVersion) {
    throw SchemaVersionError("pairs: unsupported format_version");
  }
  PairDataset ds;
  ds.joint_order = j.at("joint_order").get<std::vector<std::string>>();
  const std::size_t joints = ds.joint_order.size();
  auto side = [joints](const json& s, const std::string& where) {
    NormalizedPose np;
    const auto& coords = s.at("coords");
    const auto& valid = s.at("valid");
    if (coords.size() != joints || valid.size() != joints) {
      throw ValidationError(where + ": coords/valid length must match joint_order");
    }
    for (std::size_t i = 0; i < joints; ++i) {
      np.coords.push_back({coords[i][0].get<double>(), coords[i][1].get<double>()});
      np.valid.push_back(valid[i].get<int>() != 0);
    }
    return np;
  };
  int idx = 0;
  for (const auto& jp : j.at("pairs")) {
    const std::string where = "pairs[" + std::to_string(idx++) + "]";
    PosePair p;
    p.label = jp.at("label").get<int>();
    p.category = pair_category_from_string(jp.at("category").get<std::string>());
    if ((p.label == 1) != (p.category == PairCategory::kPositive)) {
      throw ValidationError(where + ": label does not match category");
    }
    p.a = side(jp.at("a"), where);
    p.b = side(jp.at("b"), where);
    if (jp.contains("meta")) {
      const auto& m = jp.at("meta");
      p.meta.seq_id = m.value("seq_id", std::string{});
      p.meta.frame_a = m.value("frame_a", 0);
      p.meta.frame_b = m.value("frame_b", 0);
      p.meta.gt_a = m.value("gt_a", 0);
      p.meta.gt_b = m.value("gt_b", 0);
    }
    ds.pairs.push_back(std::move(p));
  }
  return ds;
}

inline PairDataset load_pairs(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("pairs: cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("pairs " + path + ": " + e.what());
  }
  return parse_pairs(j);
}

inline void save_pairs(const PairDataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ProviderError("pairs: cannot write " + path);
  out << pairs_to_json(ds).dump(1) << "\n";
}

}  // namespace lighttrack

#endif  // LIGHTTRACK_PAIRS_HPP
