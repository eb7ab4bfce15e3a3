#ifndef LIGHTTRACK_TRACKER_HPP
#define LIGHTTRACK_TRACKER_HPP

#include <algorithm>
#include <chrono>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lighttrack/errors.hpp"
#include "lighttrack/geometry.hpp"
#include "lighttrack/matcher.hpp"
#include "lighttrack/providers.hpp"
#include "lighttrack/sequence.hpp"

namespace lighttrack {

enum class KeyframeMode { kFixedInterval, kAdaptive, kHybrid };

inline const char* to_string(KeyframeMode m) {
  switch (m) {
    case KeyframeMode::kFixedInterval: return "fki";
    case KeyframeMode::kAdaptive: return "aki";
    default: return "hybrid";
  }
}

inline KeyframeMode keyframe_mode_from_string(const std::string& s) {
  if (s == "fki") return KeyframeMode::kFixedInterval;
  if (s == "aki") return KeyframeMode::kAdaptive;
  if (s == "hybrid") return KeyframeMode::kHybrid;
  throw InvalidConfig("unknown keyframe mode '" + s + "'");
}

struct TrackerConfig {
  double tau_s = 0.4;            // tracked iff mean confidence > tau_s (strict)
  double tau_o = 0.3;            // spatial-consistency IOU threshold
  int keyframe_interval = 5;     // N
  KeyframeMode mode = KeyframeMode::kHybrid;
  bool use_pose_matching = true;  // stage 2 on/off (SC+GCN vs SC-only)
  double match_threshold = -1.0;  // <0: take it from the matcher model
  int max_lost_frames = -1;       // <0: default 2N
  bool new_ids_only_at_start = false;  // restrict new identities to frame 0
};

inline void validate_tracker_config(const TrackerConfig& cfg) {
  if (!(cfg.tau_s > 0.0 && cfg.tau_s < 1.0)) throw InvalidConfig("tracker: tau_s must be in (0,1)");
  if (!(cfg.tau_o > 0.0 && cfg.tau_o < 1.0)) throw InvalidConfig("tracker: tau_o must be in (0,1)");
  if (cfg.keyframe_interval < 1) throw InvalidConfig("tracker: keyframe_interval must be >= 1");
}

inline int resolved_max_lost(const TrackerConfig& cfg) {
  return cfg.max_lost_frames >= 0 ? cfg.max_lost_frames : 2 * cfg.keyframe_interval;
}

struct Track {
  int id = 0;
  TrackState state = TrackState::kTracked;
  Pose last_pose;       // last confident pose; never overwritten while lost
  BoundingBox last_box;
  int last_seen_frame = 0;
};

inline TrackState update_state(const Pose& pose, double tau_s) {
  return mean_confidence(pose) > tau_s ? TrackState::kTracked : TrackState::kLost;
}

inline bool is_keyframe(int frame, const TrackerConfig& cfg, bool any_lost) {
  if (frame == 0) return true;
  switch (cfg.mode) {
    case KeyframeMode::kFixedInterval: return frame % cfg.keyframe_interval == 0;
    case KeyframeMode::kAdaptive: return any_lost;
    default: return frame % cfg.keyframe_interval == 0 || any_lost;
  }
}

enum class MatchStage { kSpatial, kPose };

struct Association {
  int track_id = 0;
  int detection = 0;  // index into the keyframe's detection list
  MatchStage stage = MatchStage::kSpatial;
  double score = 0.0;  // IOU for spatial, embedding distance for pose
};

struct MatchOutcome {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;  // (track idx, det idx)
  std::vector<std::size_t> unmatched_tracks;
  std::vector<std::size_t> unmatched_detections;
  std::vector<double> scores;  // parallel to pairs
};

// Stage 1: greedy matching in descending IOU over pairs above tau_o.
// Ties break toward the lower track id, then the lower detection index.
inline MatchOutcome spatial_match(const std::vector<Track>& tracks,
                                  const std::vector<Detection>& detections, double tau_o) {
  struct Cand {
    double iou;
    std::size_t t, d;
    int track_id;
  };
  std::vector<Cand> cands;
  for (std::size_t t = 0; t < tracks.size(); ++t) {
    for (std::size_t d = 0; d < detections.size(); ++d) {
      const double v = iou(tracks[t].last_box, detections[d].box);
      if (v > tau_o) cands.push_back(Cand{v, t, d, tracks[t].id});
    }
  }
  std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
    if (a.iou != b.iou) return a.iou > b.iou;
    if (a.track_id != b.track_id) return a.track_id < b.track_id;
    return a.d < b.d;
  });
  MatchOutcome out;
  std::vector<bool> t_used(tracks.size(), false), d_used(detections.size(), false);
  for (const Cand& c : cands) {
    if (t_used[c.t] || d_used[c.d]) continue;
    t_used[c.t] = d_used[c.d] = true;
    out.pairs.emplace_back(c.t, c.d);
    out.scores.push_back(c.iou);
  }
  for (std::size_t t = 0; t < tracks.size(); ++t) {
    if (!t_used[t]) out.unmatched_tracks.push_back(t);
  }
  for (std::size_t d = 0; d < detections.size(); ++d) {
    if (!d_used[d]) out.unmatched_detections.push_back(d);
  }
  return out;
}

// Stage 2: embed the leftover tracks' last poses and leftover detections
// (each normalized by its own keypoint-derived box) and match greedily in
// ascending distance among pairs under the threshold. Poses too degenerate
// to embed simply never match.
inline MatchOutcome pose_match(const std::vector<Track>& tracks,
                               const std::vector<std::size_t>& track_idx,
                               const std::vector<Detection>& detections,
                               const std::vector<std::size_t>& det_idx,
                               const PoseMatcher& matcher, double match_threshold) {
  std::vector<std::optional<Embedding>> t_emb(track_idx.size()), d_emb(det_idx.size());
  for (std::size_t i = 0; i < track_idx.size(); ++i) {
    try {
      t_emb[i] = matcher.embed_pose(tracks[track_idx[i]].last_pose);
    } catch (const Error&) {
    }
  }
  for (std::size_t i = 0; i < det_idx.size(); ++i) {
    try {
      d_emb[i] = matcher.embed_pose(detections[det_idx[i]].pose);
    } catch (const Error&) {
    }
  }
  struct Cand {
    double dist;
    std::size_t ti, di;  // positions within track_idx / det_idx
    int track_id;
  };
  std::vector<Cand> cands;
  for (std::size_t i = 0; i < track_idx.size(); ++i) {
    if (!t_emb[i]) continue;
    for (std::size_t k = 0; k < det_idx.size(); ++k) {
      if (!d_emb[k]) continue;
      const double d = pose_distance(*t_emb[i], *d_emb[k]);
      if (d < match_threshold) cands.push_back(Cand{d, i, k, tracks[track_idx[i]].id});
    }
  }
  std::sort(cands.begin(), cands.end(), [&](const Cand& a, const Cand& b) {
    if (a.dist != b.dist) return a.dist < b.dist;
    if (a.track_id != b.track_id) return a.track_id < b.track_id;
    return det_idx[a.di] < det_idx[b.di];
  });
  MatchOutcome out;
  std::vector<bool> t_used(track_idx.size(), false), d_used(det_idx.size(), false);
  for (const Cand& c : cands) {
    if (t_used[c.ti] || d_used[c.di]) continue;
    t_used[c.ti] = d_used[c.di] = true;
    out.pairs.emplace_back(track_idx[c.ti], det_idx[c.di]);
    out.scores.push_back(c.dist);
  }
  for (std::size_t i = 0; i < track_idx.size(); ++i) {
    if (!t_used[i]) out.unmatched_tracks.push_back(track_idx[i]);
  }
  for (std::size_t k = 0; k < det_idx.size(); ++k) {
    if (!d_used[k]) out.unmatched_detections.push_back(det_idx[k]);
  }
  return out;
}

struct FrameResult {
  int frame = 0;
  bool was_keyframe = false;
  std::vector<TrackedEntry> entries;  // all active tracks, ascending id
  std::vector<Association> associations;
  std::vector<int> new_ids;
  std::vector<int> terminated_ids;
};

// What the engine saw and decided at one keyframe; lets tests replay the
// association against an exhaustive oracle.
struct KeyframeSnapshot {
  int frame = 0;
  std::vector<Track> tracks_before;
  std::vector<Detection> detections;
  std::vector<Association> associations;
  std::vector<int> new_ids;
  std::vector<int> terminated_ids;
};

using KeyframeObserver = std::function<void(const KeyframeSnapshot&)>;

struct StageTimings {
  double total_s = 0.0;
  double io_s = 0.0;
  double estimation_s = 0.0;
  double association_s = 0.0;
  double matching_s = 0.0;  // stage-2 embedding + matching, subset of association
};

class TrackingEngine {
 public:
  TrackingEngine(TrackerConfig cfg, Detector& detector, Estimator& estimator,
                 const PoseMatcher* matcher = nullptr)
      : cfg_(cfg), detector_(&detector), estimator_(&estimator), matcher_(matcher) {
    validate_tracker_config(cfg_);
    if (cfg_.use_pose_matching && matcher_ == nullptr) {
      throw MatcherUnavailable("tracker: pose matching enabled but no matcher loaded");
    }
    if (cfg_.match_threshold < 0.0 && matcher_ != nullptr) {
      cfg_.match_threshold = matcher_->model().match_threshold;
    }
  }

  const std::vector<Track>& tracks() const { return tracks_; }
  const StageTimings& timings() const { return timings_; }
  const TrackerConfig& config() const { return cfg_; }

  void set_keyframe_observer(KeyframeObserver obs) { observer_ = std::move(obs); }

  // One frame of online tracking: propagate every tracked target through the
  // estimator, refresh states, then (at keyframes) re-detect and re-associate
  // every active track.
  FrameResult step(int frame) {
    using clock = std::chrono::steady_clock;
    FrameResult result;
    result.frame = frame;

    const auto est_start = clock::now();
    for (Track& tr : tracks_) {
      if (tr.state != TrackState::kTracked) continue;
      BoundingBox roi;
      try {
        roi = bbox_from_pose(tr.last_pose);
      } catch (const DegeneratePose&) {
        tr.state = TrackState::kLost;
        continue;
      }
      Pose pose;
      try {
        pose = estimator_->estimate(frame, roi);
      } catch (const FrameOutOfRange&) {
        throw;
      } catch (const Error& e) {
        throw ProviderError("frame " + std::to_string(frame) + ": " + e.what());
      }
      if (update_state(pose, cfg_.tau_s) == TrackState::kTracked) {
        tr.last_pose = std::move(pose);
        try {
          tr.last_box = bbox_from_pose(tr.last_pose);
        } catch (const DegeneratePose&) {
          tr.state = TrackState::kLost;
          continue;
        }
        tr.last_seen_frame = frame;
        tr.state = TrackState::kTracked;
      } else {
        // keep the last confident pose so a later revival has something
        // meaningful to match against
        tr.state = TrackState::kLost;
      }
    }
    timings_.estimation_s += std::chrono::duration<double>(clock::now() - est_start).count();

    bool any_lost = false;
    for (const Track& tr : tracks_) any_lost |= tr.state == TrackState::kLost;

    result.was_keyframe = is_keyframe(frame, cfg_, any_lost);
    if (result.was_keyframe) {
      const auto assoc_start = clock::now();
      std::vector<Detection> detections = detector_->detect(frame);
      std::vector<Track> before;
      if (observer_) before = tracks_;
      associate(frame, detections, result);
      timings_.association_s += std::chrono::duration<double>(clock::now() - assoc_start).count();
      if (observer_) {
        KeyframeSnapshot snap;
        snap.frame = frame;
        snap.tracks_before = std::move(before);
        snap.detections = std::move(detections);
        snap.associations = result.associations;
        snap.new_ids = result.new_ids;
        snap.terminated_ids = result.terminated_ids;
        observer_(snap);
      }
    }

    std::sort(tracks_.begin(), tracks_.end(),
              [](const Track& a, const Track& b) { return a.id < b.id; });
    for (const Track& tr : tracks_) {
      result.entries.push_back(TrackedEntry{tr.id, tr.state, tr.last_pose, tr.last_box});
    }
    return result;
  }

 private:
  void associate(int frame, const std::vector<Detection>& detections, FrameResult& result) {
    using clock = std::chrono::steady_clock;
    MatchOutcome stage1 = spatial_match(tracks_, detections, cfg_.tau_o);
    for (std::size_t i = 0; i < stage1.pairs.size(); ++i) {
      const auto [t, d] = stage1.pairs[i];
      adopt(tracks_[t], detections[d], frame);
      result.associations.push_back(
          Association{tracks_[t].id, static_cast<int>(d), MatchStage::kSpatial, stage1.scores[i]});
    }

    std::vector<std::size_t> free_tracks = stage1.unmatched_tracks;
    std::vector<std::size_t> free_dets = stage1.unmatched_detections;
    if (cfg_.use_pose_matching && !free_tracks.empty() && !free_dets.empty()) {
      if (matcher_ == nullptr) throw MatcherUnavailable("tracker: no matcher loaded");
      const auto match_start = clock::now();
      MatchOutcome stage2 = pose_match(tracks_, free_tracks, detections, free_dets, *matcher_,
                                       cfg_.match_threshold);
      timings_.matching_s += std::chrono::duration<double>(clock::now() - match_start).count();
      for (std::size_t i = 0; i < stage2.pairs.size(); ++i) {
        const auto [t, d] = stage2.pairs[i];
        adopt(tracks_[t], detections[d], frame);
        result.associations.push_back(
            Association{tracks_[t].id, static_cast<int>(d), MatchStage::kPose, stage2.scores[i]});
      }
      free_tracks = stage2.unmatched_tracks;
      free_dets = stage2.unmatched_detections;
    }

    for (std::size_t t : free_tracks) tracks_[t].state = TrackState::kLost;

    if (!cfg_.new_ids_only_at_start || frame == 0) {
      std::sort(free_dets.begin(), free_dets.end());  // detection order
      for (std::size_t d : free_dets) {
        Track tr;
        tr.id = next_id_++;
        tr.last_pose = detections[d].pose;
        tr.last_box = detections[d].box;
        tr.last_seen_frame = frame;
        tr.state = update_state(tr.last_pose, cfg_.tau_s);
        if (tr.state != TrackState::kTracked) continue;  // don't spawn from junk
        result.new_ids.push_back(tr.id);
        tracks_.push_back(std::move(tr));
      }
    }

    const int max_lost = resolved_max_lost(cfg_);
    for (auto it = tracks_.begin(); it != tracks_.end();) {
      if (it->state == TrackState::kLost && frame - it->last_seen_frame > max_lost) {
        result.terminated_ids.push_back(it->id);
        it = tracks_.erase(it);
      } else {
        ++it;
      }
    }
    std::sort(result.terminated_ids.begin(), result.terminated_ids.end());
  }

  // A matched detection replaces the track's pose only when it is confident
  // enough to count as tracked; otherwise the track keeps its last good pose
  // and stays lost.
  void adopt(Track& tr, const Detection& det, int frame) {
    if (update_state(det.pose, cfg_.tau_s) == TrackState::kTracked) {
      tr.last_pose = det.pose;
      tr.last_box = det.box;
      tr.last_seen_frame = frame;
      tr.state = TrackState::kTracked;
    } else {
      tr.state = TrackState::kLost;
    }
  }

  TrackerConfig cfg_;
  Detector* detector_;
  Estimator* estimator_;
  const PoseMatcher* matcher_;
  std::vector<Track> tracks_;
  KeyframeObserver observer_;
  StageTimings timings_;
  int next_id_ = 1;
};

struct TrackRunOptions {
  double containment_floor = 0.3;
  EstimatorNoise noise;
};

struct TrackRunResult {
  TrackedSequence tracked;
  std::vector<FrameResult> frames;
  StageTimings timings;
};

// Runs the whole sequence against replay providers and collects the
// serializable output.
inline TrackRunResult run_tracking(const ObservationSequence& seq, const TrackerConfig& cfg,
                                   const PoseMatcher* matcher = nullptr,
                                   const TrackRunOptions& opts = {},
                                   const KeyframeObserver& observer = nullptr) {
  using clock = std::chrono::steady_clock;
  const auto start = clock::now();
  ReplayDetector detector(seq);
  ReplayEstimator estimator(seq, opts.containment_floor, opts.noise);
  TrackingEngine engine(cfg, detector, estimator, matcher);
  if (observer) engine.set_keyframe_observer(observer);

  TrackRunResult out;
  out.tracked.seq_id = seq.seq_id;
  out.tracked.image_size = seq.image_size;
  out.tracked.joint_order = seq.joint_order;
  for (int f = 0; f < static_cast<int>(seq.frames.size()); ++f) {
    FrameResult r = engine.step(f);
    TrackedFrame tf;
    tf.index = f;
    tf.keyframe = r.was_keyframe;
    tf.entries = r.entries;
    out.tracked.frames.push_back(std::move(tf));
    out.frames.push_back(std::move(r));
  }
  out.timings = engine.timings();
  out.timings.total_s = std::chrono::duration<double>(clock::now() - start).count();
  return out;
}

}  // namespace lighttrack

#endif  // LIGHTTRACK_TRACKER_HPP
