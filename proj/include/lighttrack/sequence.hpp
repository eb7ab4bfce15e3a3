#ifndef LIGHTTRACK_SEQUENCE_HPP
#define LIGHTTRACK_SEQUENCE_HPP

#include <array>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "lighttrack/errors.hpp"
#include "lighttrack/geometry.hpp"
#include "lighttrack/skeleton.hpp"

namespace lighttrack {

inline constexpr int kSequenceFormatVersion = 1;

// One observed person: pose, box, and the ground-truth identity when the
// sequence is annotated. Boxes missing from a file are inferred from the
// keypoints at load time.
struct Candidate {
  std::optional<int> gt_id;
  Pose pose;
  BoundingBox box;

  bool operator==(const Candidate& o) const {
    if (gt_id != o.gt_id) return false;
    if (pose.size() != o.pose.size()) return false;
    for (std::size_t i = 0; i < pose.size(); ++i) {
      const Keypoint& a = pose.joints[i];
      const Keypoint& b = o.pose.joints[i];
      if (a.x != b.x || a.y != b.y || a.score != b.score) return false;
    }
    return box.x_min == o.box.x_min && box.y_min == o.box.y_min &&
           box.x_max == o.box.x_max && box.y_max == o.box.y_max;
  }
};

struct FrameObservation {
  int index = 0;
  std::vector<Candidate> candidates;

  bool operator==(const FrameObservation&) const = default;
};

struct ObservationSequence {
  std::string seq_id;
  std::array<int, 2> image_size = {0, 0};  // width, height
  std::vector<std::string> joint_order;
  std::vector<FrameObservation> frames;

  bool operator==(const ObservationSequence&) const = default;
};

enum class TrackState { kTracked, kLost };

inline const char* to_string(TrackState s) {
  return s == TrackState::kTracked ? "tracked" : "lost";
}

inline TrackState track_state_from_string(const std::string& s) {
  if (s == "tracked") return TrackState::kTracked;
  if (s == "lost") return TrackState::kLost;
  throw ParseError("unknown track state '" + s + "'");
}

// Tracker output: the sequence schema plus identity, state and keyframe
// bookkeeping.
struct TrackedEntry {
  int track_id = 0;
  TrackState state = TrackState::kTracked;
  Pose pose;
  BoundingBox box;
};

struct TrackedFrame {
  int index = 0;
  bool keyframe = false;
  std::vector<TrackedEntry> entries;
};

struct TrackedSequence {
  std::string seq_id;
  std::array<int, 2> image_size = {0, 0};
  std::vector<std::string> joint_order;
  std::vector<TrackedFrame> frames;
};

namespace detail {

using nlohmann::json;

inline json pose_to_json(const Pose& pose) {
  json kps = json::array();
  for (const Keypoint& kp : pose.joints) {
    kps.push_back(json::array({kp.x, kp.y, kp.score}));
  }
  return kps;
}

inline Pose pose_from_json(const json& kps, std::size_t expected,
                           const std::string& where) {
  if (!kps.is_array() || kps.size() != expected) {
    throw ValidationError(where + ": expected " + std::to_string(expected) +
                          " keypoints, got " + std::to_string(kps.size()));
  }
  Pose pose;
  pose.joints.reserve(expected);
  for (const json& kp : kps) {
    if (!kp.is_array() || kp.size() != 3) {
      throw ParseError(where + ": keypoint must be [x, y, score]");
    }
    Keypoint k{kp[0].get<double>(), kp[1].get<double>(), kp[2].get<double>()};
    if (!std::isfinite(k.x) || !std::isfinite(k.y)) {
      throw ValidationError(where + ": non-finite keypoint coordinate");
    }
    if (!(k.score >= 0.0 && k.score <= 1.0)) {
      throw ValidationError(where + ": score outside [0, 1]");
    }
    pose.joints.push_back(k);
  }
  return pose;
}

inline json box_to_json(const BoundingBox& b) {
  return json::array({b.x_min, b.y_min, b.x_max, b.y_max});
}

inline BoundingBox box_from_json(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 4) {
    throw ParseError(where + ": bbox must be [x_min, y_min, x_max, y_max]");
  }
  BoundingBox b{j[0].get<double>(), j[1].get<double>(), j[2].get<double>(),
                j[3].get<double>()};
  if (b.x_min > b.x_max || b.y_min > b.y_max) {
    throw ValidationError(where + ": inverted bbox");
  }
  return b;
}

inline void check_version(const json& j, const std::string& what) {
  if (!j.contains("format_version")) {
    throw ParseError(what + ": missing format_version");
  }
  const int v = j.at("format_version").get<int>();
  if (v != kSequenceFormatVersion) {
    throw SchemaVersionError(what + ": unsupported format_version " + std::to_string(v));
  }
}

}  // namespace detail

inline nlohmann::json sequence_to_json(const ObservationSequence& seq) {
  using nlohmann::json;
  json j;
  j["format_version"] = kSequenceFormatVersion;
  j["seq_id"] = seq.seq_id;
  j["image_size"] = json::array({seq.image_size[0], seq.image_size[1]});
  j["joint_order"] = seq.joint_order;
  json frames = json::array();
  for (const FrameObservation& f : seq.frames) {
    json jf;
    jf["index"] = f.index;
    json cands = json::array();
    for (const Candidate& c : f.candidates) {
      json jc;
      if (c.gt_id) jc["gt_id"] = *c.gt_id;
      jc["keypoints"] = detail::pose_to_json(c.pose);
      jc["bbox"] = detail::box_to_json(c.box);
      cands.push_back(jc);
    }
    jf["candidates"] = cands;
    frames.push_back(jf);
  }
  j["frames"] = frames;
  return j;
}

// Parses and validates a sequence document. Structural violations raise
// ParseError / SchemaVersionError / ValidationError; keypoints far outside
// the image only produce warnings (the enlargement rule legitimately takes
// boxes past the frame edge).
inline ObservationSequence parse_sequence(const nlohmann::json& j,
                                          std::vector<std::string>* warnings = nullptr) {
  detail::check_version(j, "sequence");
  ObservationSequence seq;
  try {
    seq.seq_id = j.at("seq_id").get<std::string>();
    seq.image_size = {j.at("image_size").at(0).get<int>(),
                      j.at("image_size").at(1).get<int>()};
    seq.joint_order = j.at("joint_order").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("sequence header: ") + e.what());
  }
  if (seq.joint_order.empty()) throw ValidationError("sequence: empty joint_order");
  if (!j.contains("frames") || !j.at("frames").is_array()) {
    throw ParseError("sequence: missing frames array");
  }
  const double margin_x = 0.5 * seq.image_size[0];
  const double margin_y = 0.5 * seq.image_size[1];
  int expected_index = 0;
  for (const auto& jf : j.at("frames")) {
    const std::string fwhere = "frames[" + std::to_string(expected_index) + "]";
    FrameObservation frame;
    frame.index = jf.at("index").get<int>();
    if (frame.index != expected_index) {
      throw ValidationError("sequence: frame indices must be dense from 0; got " +
                            std::to_string(frame.index) + " at position " +
                            std::to_string(expected_index));
    }
    ++expected_index;
    std::set<int> ids_in_frame;
    int ci = 0;
    for (const auto& jc : jf.at("candidates")) {
      const std::string cwhere = fwhere + ".candidates[" + std::to_string(ci++) + "]";
      Candidate cand;
      if (jc.contains("gt_id")) {
        cand.gt_id = jc.at("gt_id").get<int>();
        if (!ids_in_frame.insert(*cand.gt_id).second) {
          throw ValidationError(cwhere + ": duplicate gt_id " + std::to_string(*cand.gt_id));
        }
      }
      cand.pose = detail::pose_from_json(jc.at("keypoints"), seq.joint_order.size(), cwhere);
      if (jc.contains("bbox")) {
        cand.box = detail::box_from_json(jc.at("bbox"), cwhere);
      } else {
        try {
          cand.box = bbox_from_pose(cand.pose);
        } catch (const DegeneratePose& e) {
          throw ValidationError(cwhere + ": no bbox and cannot infer one: " + e.what());
        }
      }
      if (warnings) {
        for (const Keypoint& kp : cand.pose.joints) {
          if (kp.score < kJointScoreFloor) continue;
          if (kp.x < -margin_x || kp.x > seq.image_size[0] + margin_x ||
              kp.y < -margin_y || kp.y > seq.image_size[1] + margin_y) {
            warnings->push_back(cwhere + ": keypoint far outside image bounds");
            break;
          }
        }
      }
      frame.candidates.push_back(std::move(cand));
    }
    seq.frames.push_back(std::move(frame));
  }
  return seq;
}

inline ObservationSequence load_sequence(const std::string& path,
                                         std::vector<std::string>* warnings = nullptr) {
  std::ifstream in(path);
  if (!in) throw ParseError("sequence: cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("sequence " + path + ": " + e.what());
  }
  return parse_sequence(j, warnings);
}

inline void save_sequence(const ObservationSequence& seq, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ProviderError("sequence: cannot write " + path);
  out << sequence_to_json(seq).dump(1) << "\n";
}

inline nlohmann::json tracked_to_json(const TrackedSequence& seq) {
  using nlohmann::json;
  json j;
  j["format_version"] = kSequenceFormatVersion;
  j["seq_id"] = seq.seq_id;
  j["image_size"] = json::array({seq.image_size[0], seq.image_size[1]});
  j["joint_order"] = seq.joint_order;
  json frames = json::array();
  for (const TrackedFrame& f : seq.frames) {
    json jf;
    jf["index"] = f.index;
    jf["keyframe"] = f.keyframe;
    json cands = json::array();
    for (const TrackedEntry& e : f.entries) {
      json jc;
      jc["track_id"] = e.track_id;
      jc["state"] = to_string(e.state);
      jc["keypoints"] = detail::pose_to_json(e.pose);
      jc["bbox"] = detail::box_to_json(e.box);
      cands.push_back(jc);
    }
    jf["candidates"] = cands;
    frames.push_back(jf);
  }
  j["frames"] = frames;
  return j;
}

inline TrackedSequence parse_tracked(const nlohmann::json& j) {
  detail::check_version(j, "tracked sequence");
  TrackedSequence seq;
  try {
    seq.seq_id = j.at("seq_id").get<std::string>();
    seq.image_size = {j.at("image_size").at(0).get<int>(),
                      j.at("image_size").at(1).get<int>()};
    seq.joint_order = j.at("joint_order").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("tracked sequence header: ") + e.what());
  }
  int expected_index = 0;
  for (const auto& jf : j.at("frames")) {
    TrackedFrame frame;
    frame.index = jf.at("index").get<int>();
    if (frame.index != expected_index) {
      throw ValidationError("tracked sequence: frame indices must be dense from 0");
    }
    const std::string fwhere = "frames[" + std::to_string(expected_index) + "]";
    ++expected_index;
    frame.keyframe = jf.at("keyframe").get<bool>();
    int ci = 0;
    for (const auto& jc : jf.at("candidates")) {
      const std::string cwhere = fwhere + ".candidates[" + std::to_string(ci++) + "]";
      TrackedEntry e;
      e.track_id = jc.at("track_id").get<int>();
      e.state = track_state_from_string(jc.at("state").get<std::string>());
      e.pose = detail::pose_from_json(jc.at("keypoints"), seq.joint_order.size(), cwhere);
      e.box = detail::box_from_json(jc.at("bbox"), cwhere);
      frame.entries.push_back(std::move(e));
    }
    seq.frames.push_back(std::move(frame));
  }
  return seq;
}

inline TrackedSequence load_tracked(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("tracked sequence: cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("tracked sequence " + path + ": " + e.what());
  }
  return parse_tracked(j);
}

inline void save_tracked(const TrackedSequence& seq, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ProviderError("tracked sequence: cannot write " + path);
  out << tracked_to_json(seq).dump(1) << "\n";
}

// --- PoseTrack-style annotation ingestion ---
//
// Accepts the COCO-like layout {images:[...], annotations:[...],
// categories:[{keypoints:[names]}]}. Frames follow the order of the images
// array; annotation keypoint triplets [x, y, v] become score 1 when v > 0
// and score 0 otherwise; track_id becomes gt_id. Source joints are mapped
// onto the canonical joint order by name (head_bottom -> neck), unknown
// source joints are dropped and canonical joints missing from the source
// stay at score 0. See docs/file_formats.md.
inline ObservationSequence convert_posetrack(const nlohmann::json& j,
                                             const std::string& seq_id,
                                             std::vector<std::string>* warnings = nullptr) {
  using nlohmann::json;
  if (!j.contains("images") || !j.contains("annotations") || !j.contains("categories")) {
    throw ParseError("posetrack: expected images, annotations and categories");
  }
  std::vector<std::string> source_names;
  try {
    source_names = j.at("categories").at(0).at("keypoints").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw ParseError(std::string("posetrack categories: ") + e.what());
  }
  static const std::map<std::string, std::string> rename = {{"head_bottom", "neck"}};
  const auto& canon = canonical_joint_order();
  // source index -> canonical index (-1 when dropped)
  std::vector<int> source_to_canon(source_names.size(), -1);
  for (std::size_t s = 0; s < source_names.size(); ++s) {
    std::string name = source_names[s];
    const auto it = rename.find(name);
    if (it != rename.end()) name = it->second;
    const auto pos = std::find(canon.begin(), canon.end(), name);
    if (pos != canon.end()) {
      source_to_canon[s] = static_cast<int>(pos - canon.begin());
    } else if (warnings) {
      warnings->push_back("posetrack: dropping source joint '" + source_names[s] + "'");
    }
  }

  ObservationSequence seq;
  seq.seq_id = seq_id;
  seq.joint_order = canon;
  std::map<std::int64_t, int> image_to_frame;
  for (const auto& im : j.at("images")) {
    const int frame = static_cast<int>(seq.frames.size());
    image_to_frame[im.at("id").get<std::int64_t>()] = frame;
    seq.frames.push_back(FrameObservation{frame, {}});
    if (frame == 0 && im.contains("width") && im.contains("height")) {
      seq.image_size = {im.at("width").get<int>(), im.at("height").get<int>()};
    }
  }
  for (const auto& ann : j.at("annotations")) {
    const auto img_it = image_to_frame.find(ann.at("image_id").get<std::int64_t>());
    if (img_it == image_to_frame.end()) {
      throw ValidationError("posetrack: annotation references unknown image_id");
    }
    const auto& kps = ann.at("keypoints");
    if (!kps.is_array() || kps.size() != source_names.size() * 3) {
      throw ValidationError("posetrack: keypoints length does not match category");
    }
    Candidate cand;
    cand.pose.joints.assign(canon.size(), Keypoint{});
    for (std::size_t s = 0; s < source_names.size(); ++s) {
      if (source_to_canon[s] < 0) continue;
      Keypoint kp;
      kp.x = kps[3 * s].get<double>();
      kp.y = kps[3 * s + 1].get<double>();
      kp.score = kps[3 * s + 2].get<double>() > 0.0 ? 1.0 : 0.0;
      cand.pose.joints[static_cast<std::size_t>(source_to_canon[s])] = kp;
    }
    if (ann.contains("track_id")) cand.gt_id = ann.at("track_id").get<int>();
    if (ann.contains("bbox") && ann.at("bbox").is_array() && ann.at("bbox").size() == 4) {
      const auto& b = ann.at("bbox");
      const double x = b[0].get<double>(), y = b[1].get<double>();
      cand.box = BoundingBox{x, y, x + b[2].get<double>(), y + b[3].get<double>()};
    } else {
      try {
        cand.box = bbox_from_pose(cand.pose);
      } catch (const DegeneratePose&) {
        if (warnings) {
          warnings->push_back("posetrack: skipping annotation with <2 labeled joints");
        }
        continue;
      }
    }
    seq.frames[static_cast<std::size_t>(img_it->second)].candidates.push_back(std::move(cand));
  }
  return seq;
}

}  // namespace lighttrack

#endif  // LIGHTTRACK_SEQUENCE_HPP
