#ifndef LIGHTTRACK_PROVIDERS_HPP
#define LIGHTTRACK_PROVIDERS_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "lighttrack/errors.hpp"
#include "lighttrack/geometry.hpp"
#include "lighttrack/rng.hpp"
#include "lighttrack/sequence.hpp"
#include "lighttrack/skeleton.hpp"

namespace lighttrack {

struct Detection {
  BoundingBox box;
  Pose pose;
};

// Candidate source, called only at keyframes.
class Detector {
 public:
  virtual ~Detector() = default;
  virtual std::vector<Detection> detect(int frame) = 0;
};

// Single-person pose source, called once per tracked target per frame.
class Estimator {
 public:
  virtual ~Estimator() = default;
  virtual Pose estimate(int frame, const BoundingBox& roi) = 0;
};

// Serves the candidates recorded in a sequence, ground-truth ids stripped.
class ReplayDetector : public Detector {
 public:
  explicit ReplayDetector(const ObservationSequence& seq) : seq_(&seq) {}

  std::vector<Detection> detect(int frame) override {
    if (frame < 0 || frame >= static_cast<int>(seq_->frames.size())) {
      throw FrameOutOfRange("detector: frame " + std::to_string(frame) + " out of range");
    }
    std::vector<Detection> out;
    for (const Candidate& c : seq_->frames[static_cast<std::size_t>(frame)].candidates) {
      out.push_back(Detection{c.box, c.pose});
    }
    return out;
  }

 private:
  const ObservationSequence* seq_;
};

struct EstimatorNoise {
  double coord_sigma = 0.0;   // px, Gaussian clipped at 3 sigma; 0 disables
  double score_jitter = 0.0;  // uniform +-amplitude, clamped to [0,1]; 0 disables
  std::uint64_t seed = 1;
};

// Simulates a single-person estimator on recorded data: picks the candidate
// whose qualifying joints fall inside the ROI at the highest fraction. When
// even the best candidate barely intersects the ROI the estimator "fails" —
// the pose comes back with zero scores, which drives the Eq.-style state
// machine to lost.
class ReplayEstimator : public Estimator {
 public:
  explicit ReplayEstimator(const ObservationSequence& seq, double containment_floor = 0.3,
                           EstimatorNoise noise = {})
      : seq_(&seq),
        containment_floor_(containment_floor),
        noise_(noise),
        rng_(noise.seed) {}

  Pose estimate(int frame, const BoundingBox& roi) override {
    if (frame < 0 || frame >= static_cast<int>(seq_->frames.size())) {
      throw FrameOutOfRange("estimator: frame " + std::to_string(frame) + " out of range");
    }
    const auto& candidates = seq_->frames[static_cast<std::size_t>(frame)].candidates;
    const std::size_t joints = seq_->joint_order.size();
    if (candidates.empty()) {
      Pose zero;
      zero.joints.assign(joints, Keypoint{});
      return zero;
    }
    double best = -1.0;
    std::size_t best_i = 0;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      const double c = containment(candidates[i].pose, roi);
      if (c > best) {
        best = c;
        best_i = i;
      }
    }
    Pose pose = candidates[best_i].pose;
    if (best < containment_floor_) {
      for (Keypoint& kp : pose.joints) kp.score = 0.0;
      return pose;
    }
    if (noise_.coord_sigma > 0.0 || noise_.score_jitter > 0.0) apply_noise(pose);
    return pose;
  }

  // Fraction of qualifying joints (score above the floor) inside the box.
  static double containment(const Pose& pose, const BoundingBox& roi) {
    int qualifying = 0, inside = 0;
    for (const Keypoint& kp : pose.joints) {
      if (kp.score < kJointScoreFloor) continue;
      ++qualifying;
      if (kp.x >= roi.x_min && kp.x <= roi.x_max && kp.y >= roi.y_min && kp.y <= roi.y_max) {
        ++inside;
      }
    }
    if (qualifying == 0) return 0.0;
    return static_cast<double>(inside) / static_cast<double>(qualifying);
  }

 private:
  void apply_noise(Pose& pose) {
    for (Keypoint& kp : pose.joints) {
      if (noise_.coord_sigma > 0.0) {
        const double lim = 3.0 * noise_.coord_sigma;
        kp.x += std::clamp(rng_.normal(0.0, noise_.coord_sigma), -lim, lim);
        kp.y += std::clamp(rng_.normal(0.0, noise_.coord_sigma), -lim, lim);
      }
      if (noise_.score_jitter > 0.0) {
        kp.score = std::clamp(kp.score + rng_.uniform(-noise_.score_jitter, noise_.score_jitter),
                              0.0, 1.0);
      }
    }
  }

  const ObservationSequence* seq_;
  double containment_floor_;
  EstimatorNoise noise_;
  Rng rng_;
};

// --- Synthetic benchmark sequences ---

struct CameraShiftEvent {
  int frame = 0;  // offset applies from this frame on
  double dx = 0.0;
  double dy = 0.0;
};

struct ZoomEvent {
  int frame = 0;
  double factor = 1.0;  // scale about image center from this frame on
};

struct OcclusionWindow {
  int gt_id = 0;
  int start = 0;
  int end = 0;  // inclusive
};

// Optional explicit placement; lets benchmarks script crossings and spacing
// instead of relying on the seeded layout.
struct PersonInit {
  double x = 0.0;
  double y = 0.0;
  double vx = 0.0;  // px/frame
  double vy = 0.0;
  double scale = 120.0;  // overall body size in px
  double phase = 0.0;    // limb-swing phase
};

struct SynthConfig {
  std::string seq_id = "synth";
  int n_people = 2;
  int n_frames = 30;
  std::array<int, 2> image_size = {1280, 720};
  std::vector<CameraShiftEvent> camera_shifts;
  std::vector<ZoomEvent> zooms;
  std::vector<OcclusionWindow> occlusions;
  double noise_sigma = 0.0;  // px on ground-truth keypoints, clipped at 3 sigma
  std::uint64_t seed = 1;
  std::vector<PersonInit> people;  // empty -> seeded layout
};

inline void validate_synth_config(const SynthConfig& cfg) {
  if (cfg.n_people < 1) throw InvalidConfig("synth: n_people must be >= 1");
  if (cfg.n_frames < 1) throw InvalidConfig("synth: n_frames must be >= 1");
  if (cfg.image_size[0] < 1 || cfg.image_size[1] < 1) {
    throw InvalidConfig("synth: image_size must be positive");
  }
  if (cfg.noise_sigma < 0.0) throw InvalidConfig("synth: noise_sigma must be >= 0");
  for (const auto& e : cfg.camera_shifts) {
    if (e.frame < 0 || e.frame >= cfg.n_frames) throw InvalidConfig("synth: shift event out of range");
  }
  for (const auto& e : cfg.zooms) {
    if (e.frame < 0 || e.frame >= cfg.n_frames) throw InvalidConfig("synth: zoom event out of range");
    if (!(e.factor > 0.0)) throw InvalidConfig("synth: zoom factor must be positive");
  }
  for (const auto& w : cfg.occlusions) {
    if (w.start > w.end || w.start < 0 || w.end >= cfg.n_frames) {
      throw InvalidConfig("synth: occlusion window out of range");
    }
    if (w.gt_id < 1 || w.gt_id > cfg.n_people) {
      throw InvalidConfig("synth: occlusion gt_id out of range");
    }
  }
  if (!cfg.people.empty() && static_cast<int>(cfg.people.size()) != cfg.n_people) {
    throw InvalidConfig("synth: people list must match n_people");
  }
}

namespace detail {

// Triangle-wave fold keeps a drifting coordinate inside [lo, hi] without
// breaking the per-frame smoothness contract.
inline double reflect(double p, double lo, double hi) {
  if (hi <= lo) return lo;
  const double period = 2.0 * (hi - lo);
  double t = std::fmod(p - lo, period);
  if (t < 0.0) t += period;
  return t <= hi - lo ? lo + t : hi - (t - (hi - lo));
}

// Unit stick figure, y grows downward; indices follow canonical_joint_order.
inline const std::array<std::array<double, 2>, 15>& figure_template() {
  static const std::array<std::array<double, 2>, 15> t = {{
      {0.00, -0.56},  // head_top
      {0.00, -0.40},  // neck
      {0.00, -0.47},  // nose
      {-0.16, -0.36}, // left_shoulder
      {0.16, -0.36},  // right_shoulder
      {-0.22, -0.16}, // left_elbow
      {0.22, -0.16},  // right_elbow
      {-0.24, 0.02},  // left_wrist
      {0.24, 0.02},   // right_wrist
      {-0.10, 0.00},  // left_hip
      {0.10, 0.00},   // right_hip
      {-0.11, 0.26},  // left_knee
      {0.11, 0.26},   // right_knee
      {-0.12, 0.52},  // left_ankle
      {0.12, 0.52},   // right_ankle
  }};
  return t;
}

}  // namespace detail

// Articulated stick figures with smooth sinusoidal limb swing and slow
// centroid drift. Camera shifts add a cumulative offset to everything from
// the event frame on; zooms scale cumulatively about the image center;
// occlusion windows drop a person's candidate entirely. Deterministic for a
// given config.
inline ObservationSequence synth_sequence(const SynthConfig& cfg) {
  validate_synth_config(cfg);
  Rng rng(cfg.seed);

  const double w = cfg.image_size[0];
  const double h = cfg.image_size[1];
  std::vector<PersonInit> people = cfg.people;
  if (people.empty()) {
    for (int i = 0; i < cfg.n_people; ++i) {
      PersonInit p;
      p.x = w * (i + 1) / (cfg.n_people + 1) + rng.uniform(-0.03, 0.03) * w;
      p.y = 0.5 * h + rng.uniform(-0.08, 0.08) * h;
      p.vx = rng.uniform(-2.0, 2.0);
      p.vy = rng.uniform(-1.0, 1.0);
      p.scale = 120.0 * rng.uniform(0.9, 1.1);
      p.phase = rng.uniform(0.0, 6.283185307179586);
      people.push_back(p);
    }
  }
  Rng noise_rng(splitmix64(cfg.seed ^ 0xa5a5a5a5a5a5a5a5ull));

  ObservationSequence seq;
  seq.seq_id = cfg.seq_id;
  seq.image_size = cfg.image_size;
  seq.joint_order = canonical_joint_order();
  const auto& tmpl = detail::figure_template();

  for (int f = 0; f < cfg.n_frames; ++f) {
    double off_x = 0.0, off_y = 0.0, zoom = 1.0;
    for (const auto& e : cfg.camera_shifts) {
      if (e.frame <= f) {
        off_x += e.dx;
        off_y += e.dy;
      }
    }
    for (const auto& e : cfg.zooms) {
      if (e.frame <= f) zoom *= e.factor;
    }

    FrameObservation frame;
    frame.index = f;
    for (int i = 0; i < cfg.n_people; ++i) {
      bool occluded = false;
      for (const auto& win : cfg.occlusions) {
        if (win.gt_id == i + 1 && f >= win.start && f <= win.end) {
          occluded = true;
          break;
        }
      }
      if (occluded) continue;

      const PersonInit& p = people[static_cast<std::size_t>(i)];
      const double margin = 0.6 * p.scale;
      const double cx = detail::reflect(p.x + p.vx * f, margin, w - margin);
      const double cy = detail::reflect(p.y + p.vy * f, margin, h - margin);
      const double swing = std::sin(0.55 * f + p.phase);
      const double counter = std::sin(0.55 * f + p.phase + 3.141592653589793);

      Candidate cand;
      cand.gt_id = i + 1;
      cand.pose.joints.resize(15);
      for (std::size_t j = 0; j < 15; ++j) {
        double jx = tmpl[j][0];
        double jy = tmpl[j][1];
        // arms and legs swing in opposition; amplitudes are fractions of the
        // body scale so the figure stays plausible at any size
        switch (j) {
          case 5: case 7: jx += 0.05 * swing; break;       // left elbow/wrist
          case 6: case 8: jx += 0.05 * counter; break;     // right elbow/wrist
          case 11: case 13: jx += 0.04 * counter; break;   // left knee/ankle
          case 12: case 14: jx += 0.04 * swing; break;     // right knee/ankle
          default: break;
        }
        double x = cx + jx * p.scale;
        double y = cy + jy * p.scale;
        if (cfg.noise_sigma > 0.0) {
          const double lim = 3.0 * cfg.noise_sigma;
          x += std::clamp(noise_rng.normal(0.0, cfg.noise_sigma), -lim, lim);
          y += std::clamp(noise_rng.normal(0.0, cfg.noise_sigma), -lim, lim);
        }
        // camera model: zoom about image center, then accumulated shift
        x = (x - 0.5 * w) * zoom + 0.5 * w + off_x;
        y = (y - 0.5 * h) * zoom + 0.5 * h + off_y;
        cand.pose.joints[j] = Keypoint{x, y, 0.9};
      }
      cand.box = bbox_from_pose(cand.pose);
      frame.candidates.push_back(std::move(cand));
    }
    seq.frames.push_back(std::move(frame));
  }
  return seq;
}

inline nlohmann::json synth_config_to_json(const SynthConfig& cfg) {
  nlohmann::json j;
  j["seq_id"] = cfg.seq_id;
  j["n_people"] = cfg.n_people;
  j["n_frames"] = cfg.n_frames;
  j["image_size"] = cfg.image_size;
  j["noise_sigma"] = cfg.noise_sigma;
  j["seed"] = cfg.seed;
  for (const CameraShiftEvent& e : cfg.camera_shifts) {
    j["camera_shifts"].push_back({{"frame", e.frame}, {"dx", e.dx}, {"dy", e.dy}});
  }
  for (const ZoomEvent& e : cfg.zooms) {
    j["zooms"].push_back({{"frame", e.frame}, {"factor", e.factor}});
  }
  for (const OcclusionWindow& w : cfg.occlusions) {
    j["occlusions"].push_back({{"gt_id", w.gt_id}, {"start", w.start}, {"end", w.end}});
  }
  for (const PersonInit& p : cfg.people) {
    j["people"].push_back({{"x", p.x},
                           {"y", p.y},
                           {"vx", p.vx},
                           {"vy", p.vy},
                           {"scale", p.scale},
                           {"phase", p.phase}});
  }
  return j;
}

inline SynthConfig synth_config_from_json(const nlohmann::json& j) {
  SynthConfig cfg;
  try {
    cfg.seq_id = j.value("seq_id", cfg.seq_id);
    cfg.n_people = j.value("n_people", cfg.n_people);
    cfg.n_frames = j.value("n_frames", cfg.n_frames);
    if (j.contains("image_size")) {
      cfg.image_size = {j.at("image_size").at(0).get<int>(),
                        j.at("image_size").at(1).get<int>()};
    }
    cfg.noise_sigma = j.value("noise_sigma", cfg.noise_sigma);
    cfg.seed = j.value("seed", cfg.seed);
    for (const auto& e : j.value("camera_shifts", nlohmann::json::array())) {
      cfg.camera_shifts.push_back(CameraShiftEvent{e.at("frame").get<int>(),
                                                   e.value("dx", 0.0), e.value("dy", 0.0)});
    }
    for (const auto& e : j.value("zooms", nlohmann::json::array())) {
      cfg.zooms.push_back(ZoomEvent{e.at("frame").get<int>(), e.at("factor").get<double>()});
    }
    for (const auto& e : j.value("occlusions", nlohmann::json::array())) {
      cfg.occlusions.push_back(OcclusionWindow{e.at("gt_id").get<int>(),
                                               e.at("start").get<int>(),
                                               e.at("end").get<int>()});
    }
    for (const auto& e : j.value("people", nlohmann::json::array())) {
      PersonInit p;
      p.x = e.at("x").get<double>();
      p.y = e.at("y").get<double>();
      p.vx = e.value("vx", 0.0);
      p.vy = e.value("vy", 0.0);
      p.scale = e.value("scale", p.scale);
      p.phase = e.value("phase", 0.0);
      cfg.people.push_back(p);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("synth config: ") + e.what());
  }
  validate_synth_config(cfg);
  return cfg;
}

inline SynthConfig load_synth_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open synth config: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
  return synth_config_from_json(j);
}

}  // namespace lighttrack

#endif  // LIGHTTRACK_PROVIDERS_HPP
