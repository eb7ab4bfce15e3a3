#ifndef LIGHTTRACK_EVALUATION_HPP
#define LIGHTTRACK_EVALUATION_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "lighttrack/errors.hpp"
#include "lighttrack/geometry.hpp"
#include "lighttrack/sequence.hpp"

namespace lighttrack {

inline constexpr double kDefaultMotDistThreshold = 0.1;  // fraction of gt bbox diagonal

struct JointTally {
  std::int64_t gt = 0;
  std::int64_t miss = 0;
  std::int64_t fp = 0;
  std::int64_t idsw = 0;
  std::int64_t matched = 0;

  double mota() const {
    if (gt == 0) return 1.0;
    return 1.0 - static_cast<double>(miss + fp + idsw) / static_cast<double>(gt);
  }
  double recall() const {
    if (gt == 0) return 1.0;
    return static_cast<double>(matched) / static_cast<double>(gt);
  }
  JointTally& operator+=(const JointTally& o) {
    gt += o.gt;
    miss += o.miss;
    fp += o.fp;
    idsw += o.idsw;
    matched += o.matched;
    return *this;
  }
};

struct MotTally {
  std::vector<std::string> joint_order;
  std::vector<JointTally> per_joint;
  JointTally total;
};

// Keypoint-level clear-MOT. Joints are matched per type with Euclidean
// distance under dist_threshold x the gt person's box diagonal; the
// correspondence carried over from the previous frame is kept while it stays
// within threshold, remaining joints match greedily by ascending distance
// (ties: lower gt_id, then lower track id). A gt joint that re-matches under
// a different track id than its previous match counts one id switch.
// Predictions contribute only while their track is in the tracked state;
// a joint exists on either side when its score is > 0.
class MotAccumulator {
 public:
  explicit MotAccumulator(std::size_t joints, double dist_threshold = kDefaultMotDistThreshold)
      : joints_(joints), dist_threshold_(dist_threshold), per_joint_(joints) {}

  // Continuity does not leak across independent sequences.
  void add_sequence(const ObservationSequence& gt, const TrackedSequence& pred) {
    if (gt.frames.size() != pred.frames.size()) {
      throw FrameMismatch("mota: gt has " + std::to_string(gt.frames.size()) +
                          " frames, prediction has " + std::to_string(pred.frames.size()));
    }
    if (gt.joint_order != pred.joint_order ||
        gt.joint_order.size() != joints_) {
      throw FrameMismatch("mota: joint orders differ");
    }
    last_track_.clear();
    for (std::size_t f = 0; f < gt.frames.size(); ++f) {
      add_frame(gt.frames[f], pred.frames[f]);
    }
  }

  void add_frame(const FrameObservation& gt, const TrackedFrame& pred) {
    if (gt.index != pred.index) throw FrameMismatch("mota: frame indices differ");
    struct GtJoint {
      int gt_id;
      double x, y, limit;
      bool matched = false;
    };
    struct PredJoint {
      int track_id;
      double x, y;
      bool matched = false;
    };
    for (std::size_t j = 0; j < joints_; ++j) {
      std::vector<GtJoint> gts;
      for (const Candidate& c : gt.candidates) {
        if (!c.gt_id) throw ValidationError("mota: ground truth candidate without gt_id");
        if (j >= c.pose.size() || c.pose.joints[j].score <= 0.0) continue;
        gts.push_back(GtJoint{*c.gt_id, c.pose.joints[j].x, c.pose.joints[j].y,
                              dist_threshold_ * c.box.diagonal()});
      }
      std::sort(gts.begin(), gts.end(),
                [](const GtJoint& a, const GtJoint& b) { return a.gt_id < b.gt_id; });
      std::vector<PredJoint> preds;
      for (const TrackedEntry& e : pred.entries) {
        if (e.state != TrackState::kTracked) continue;
        if (j >= e.pose.size() || e.pose.joints[j].score <= 0.0) continue;
        preds.push_back(PredJoint{e.track_id, e.pose.joints[j].x, e.pose.joints[j].y});
      }

      auto dist = [](const GtJoint& a, const PredJoint& b) {
        return std::hypot(a.x - b.x, a.y - b.y);
      };
      auto record_match = [&](GtJoint& g, PredJoint& p) {
        g.matched = p.matched = true;
        const auto key = std::make_pair(g.gt_id, static_cast<int>(j));
        const auto it = last_track_.find(key);
        if (it != last_track_.end() && it->second != p.track_id) {
          ++per_joint_[j].idsw;
        }
        last_track_[key] = p.track_id;
        ++per_joint_[j].matched;
      };

      // carried-over correspondences first
      for (GtJoint& g : gts) {
        const auto it = last_track_.find(std::make_pair(g.gt_id, static_cast<int>(j)));
        if (it == last_track_.end()) continue;
        for (PredJoint& p : preds) {
          if (p.matched || p.track_id != it->second) continue;
          if (dist(g, p) < g.limit) record_match(g, p);
          break;
        }
      }
      // greedy over the rest, ascending distance
      struct Cand {
        double d;
        std::size_t g, p;
        int gt_id, track_id;
      };
      std::vector<Cand> cands;
      for (std::size_t gi = 0; gi < gts.size(); ++gi) {
        if (gts[gi].matched) continue;
        for (std::size_t pi = 0; pi < preds.size(); ++pi) {
          if (preds[pi].matched) continue;
          const double d = dist(gts[gi], preds[pi]);
          if (d < gts[gi].limit) {
            cands.push_back(Cand{d, gi, pi, gts[gi].gt_id, preds[pi].track_id});
          }
        }
      }
      std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
        if (a.d != b.d) return a.d < b.d;
        if (a.gt_id != b.gt_id) return a.gt_id < b.gt_id;
        return a.track_id < b.track_id;
      });
      for (const Cand& c : cands) {
        if (gts[c.g].matched || preds[c.p].matched) continue;
        record_match(gts[c.g], preds[c.p]);
      }

      per_joint_[j].gt += static_cast<std::int64_t>(gts.size());
      for (const GtJoint& g : gts) per_joint_[j].miss += !g.matched;
      for (const PredJoint& p : preds) per_joint_[j].fp += !p.matched;
    }
  }

  MotTally tally(const std::vector<std::string>& joint_order) const {
    MotTally t;
    t.joint_order = joint_order;
    t.per_joint = per_joint_;
    for (const JointTally& jt : per_joint_) t.total += jt;
    return t;
  }

 private:
  std::size_t joints_;
  double dist_threshold_;
  std::vector<JointTally> per_joint_;
  std::map<std::pair<int, int>, int> last_track_;  // (gt_id, joint) -> track id
};

inline MotTally mota(const ObservationSequence& gt, const TrackedSequence& pred,
                     double dist_threshold = kDefaultMotDistThreshold) {
  MotAccumulator acc(gt.joint_order.size(), dist_threshold);
  acc.add_sequence(gt, pred);
  return acc.tally(gt.joint_order);
}

struct RunReport {
  std::string name;
  MotTally tally;
};

inline std::vector<RunReport> compare_runs(
    const std::vector<ObservationSequence>& gts,
    const std::vector<std::pair<std::string, std::vector<TrackedSequence>>>& runs,
    double dist_threshold = kDefaultMotDistThreshold) {
  if (runs.empty()) return {};
  std::vector<RunReport> out;
  for (const auto& [name, preds] : runs) {
    if (preds.size() != gts.size()) {
      throw FrameMismatch("compare_runs: run '" + name + "' sequence count differs from gt");
    }
    MotAccumulator acc(gts.empty() ? 0 : gts[0].joint_order.size(), dist_threshold);
    for (std::size_t i = 0; i < gts.size(); ++i) acc.add_sequence(gts[i], preds[i]);
    out.push_back(RunReport{name, acc.tally(gts.empty() ? std::vector<std::string>{}
                                                        : gts[0].joint_order)});
  }
  return out;
}

inline std::string report_csv(const std::vector<RunReport>& reports) {
  std::ostringstream out;
  out << "run,joint,gt,miss,fp,idsw,mota,recall\n";
  out << std::setprecision(17);
  for (const RunReport& r : reports) {
    for (std::size_t j = 0; j < r.tally.per_joint.size(); ++j) {
      const JointTally& t = r.tally.per_joint[j];
      out << r.name << ',' << r.tally.joint_order[j] << ',' << t.gt << ',' << t.miss << ','
          << t.fp << ',' << t.idsw << ',' << t.mota() << ',' << t.recall() << '\n';
    }
    const JointTally& t = r.tally.total;
    out << r.name << ",total," << t.gt << ',' << t.miss << ',' << t.fp << ',' << t.idsw << ','
        << t.mota() << ',' << t.recall() << '\n';
  }
  return out.str();
}

inline std::string report_text(const std::vector<RunReport>& reports) {
  std::ostringstream out;
  for (const RunReport& r : reports) {
    out << "run: " << r.name << "\n";
    out << "  " << std::left << std::setw(16) << "joint" << std::right << std::setw(8) << "gt"
        << std::setw(8) << "miss" << std::setw(8) << "fp" << std::setw(8) << "idsw"
        << std::setw(9) << "mota" << std::setw(9) << "recall" << "\n";
    auto row = [&](const std::string& name, const JointTally& t) {
      out << "  " << std::left << std::setw(16) << name << std::right << std::setw(8) << t.gt
          << std::setw(8) << t.miss << std::setw(8) << t.fp << std::setw(8) << t.idsw
          << std::setw(9) << std::fixed << std::setprecision(3) << t.mota() << std::setw(9)
          << t.recall() << "\n";
      out.unsetf(std::ios::fixed);
    };
    for (std::size_t j = 0; j < r.tally.per_joint.size(); ++j) {
      row(r.tally.joint_order[j], r.tally.per_joint[j]);
    }
    row("total", r.tally.total);
  }
  return out.str();
}

}  // namespace lighttrack

#endif  // LIGHTTRACK_EVALUATION_HPP
