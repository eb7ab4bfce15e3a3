#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

#include "lighttrack/geometry.hpp"
#include "lighttrack/matcher.hpp"
#include "lighttrack/providers.hpp"
#include "lighttrack/sequence.hpp"
#include "lighttrack/skeleton.hpp"
#include "lighttrack/tracker.hpp"
#include "support/assoc_oracle.hpp"
#include "support/tracker_util.hpp"

using namespace lighttrack;
using namespace lighttrack::testutil;

namespace {

const std::vector<std::string> kJoints = {"a", "b", "c", "d"};

SkeletonTopology square_topology() {
  return make_topology("square4", kJoints, {{0, 1}, {1, 2}, {2, 3}});
}

Pose square_pose(double cx, double cy, double r, double score = 0.9) {
  Pose p;
  p.joints = {
      Keypoint{cx - r, cy - r, score},
      Keypoint{cx + r, cy - r, score},
      Keypoint{cx + r, cy + r, score},
      Keypoint{cx - r, cy + r, score},
  };
  return p;
}

Candidate square_candidate(int gt, double cx, double cy, double r = 30.0) {
  Candidate c;
  c.gt_id = gt;
  c.pose = square_pose(cx, cy, r);
  c.box = bbox_from_pose(c.pose);
  return c;
}

// frames described as lists of (gt, cx, cy)
ObservationSequence script_seq(const std::vector<std::vector<std::array<double, 3>>>& script) {
  ObservationSequence seq;
  seq.seq_id = "scripted";
  seq.image_size = {1280, 720};
  seq.joint_order = kJoints;
  for (std::size_t f = 0; f < script.size(); ++f) {
    FrameObservation obs;
    obs.index = static_cast<int>(f);
    for (const auto& p : script[f]) {
      obs.candidates.push_back(square_candidate(static_cast<int>(p[0]), p[1], p[2]));
    }
    seq.frames.push_back(std::move(obs));
  }
  return seq;
}

Track make_track(int id, const BoundingBox& box, TrackState state = TrackState::kTracked) {
  Track t;
  t.id = id;
  t.state = state;
  t.last_box = box;
  return t;
}

BoundingBox square_box(double x, double y, double side = 10.0) {
  return BoundingBox{x, y, x + side, y + side};
}

Detection box_detection(const BoundingBox& b) { return Detection{b, Pose{}}; }

TrackerConfig sc_only_config() {
  TrackerConfig cfg;
  cfg.use_pose_matching = false;
  return cfg;
}

}  // namespace

TEST_CASE("track state is strict in the confidence threshold") {
  Pose p = square_pose(0, 0, 10, 0.6);
  CHECK(update_state(p, 0.5) == TrackState::kTracked);
  p = square_pose(0, 0, 10, 0.5);
  CHECK(update_state(p, 0.5) == TrackState::kLost);  // exactly at threshold -> lost
  p = square_pose(0, 0, 10, 0.0);
  CHECK(update_state(p, 0.1) == TrackState::kLost);
  CHECK(update_state(p, 0.9) == TrackState::kLost);
}

TEST_CASE("keyframe schedule per mode") {
  TrackerConfig cfg;
  cfg.keyframe_interval = 5;

  cfg.mode = KeyframeMode::kFixedInterval;
  CHECK(is_keyframe(0, cfg, false));
  CHECK(!is_keyframe(3, cfg, false));
  CHECK(!is_keyframe(3, cfg, true));  // FKI ignores losses
  CHECK(is_keyframe(5, cfg, false));
  CHECK(is_keyframe(10, cfg, true));

  cfg.mode = KeyframeMode::kAdaptive;
  CHECK(is_keyframe(0, cfg, false));
  CHECK(is_keyframe(3, cfg, true));
  CHECK(!is_keyframe(5, cfg, false));  // AKI has no schedule
  CHECK(!is_keyframe(7, cfg, false));

  cfg.mode = KeyframeMode::kHybrid;
  CHECK(is_keyframe(0, cfg, false));
  CHECK(is_keyframe(3, cfg, true));
  CHECK(!is_keyframe(3, cfg, false));
  CHECK(is_keyframe(5, cfg, false));
}

TEST_CASE("keyframe mode names round-trip") {
  for (KeyframeMode m : {KeyframeMode::kFixedInterval, KeyframeMode::kAdaptive,
                         KeyframeMode::kHybrid}) {
    CHECK(keyframe_mode_from_string(to_string(m)) == m);
  }
  CHECK_THROWS_AS(keyframe_mode_from_string("always"), InvalidConfig);
}

TEST_CASE("tracker config validation") {
  CHECK_NOTHROW(validate_tracker_config(TrackerConfig{}));
  auto bad = [](auto mutate) {
    TrackerConfig c;
    mutate(c);
    CHECK_THROWS_AS(validate_tracker_config(c), InvalidConfig);
  };
  bad([](TrackerConfig& c) { c.tau_s = 0.0; });
  bad([](TrackerConfig& c) { c.tau_s = 1.0; });
  bad([](TrackerConfig& c) { c.tau_o = 0.0; });
  bad([](TrackerConfig& c) { c.keyframe_interval = 0; });

  TrackerConfig c;
  CHECK(resolved_max_lost(c) == 10);  // 2N default
  c.max_lost_frames = 3;
  CHECK(resolved_max_lost(c) == 3);
}

TEST_CASE("spatial match accepts above and rejects at-or-below the IOU gate") {
  const std::vector<Track> tracks = {make_track(1, square_box(0, 0))};
  {
    const auto out = spatial_match(tracks, {box_detection(square_box(1, 0))}, 0.3);
    REQUIRE(out.pairs.size() == 1);  // IOU 9/11 = 0.818
    CHECK(out.pairs[0] == std::pair<std::size_t, std::size_t>{0, 0});
    CHECK(out.unmatched_tracks.empty());
    CHECK(out.unmatched_detections.empty());
  }
  {
    const auto out = spatial_match(tracks, {box_detection(square_box(8, 8))}, 0.3);
    CHECK(out.pairs.empty());  // IOU 4/196 = 0.02
    CHECK(out.unmatched_tracks == std::vector<std::size_t>{0});
    CHECK(out.unmatched_detections == std::vector<std::size_t>{0});
  }
}

TEST_CASE("spatial match reproduces the reference 2x2 instance") {
  // boxes solved so the IOU matrix is exactly [[0.9, 0.4], [0.4, 0.8]]
  const std::vector<Track> tracks = {
      make_track(1, square_box(0.0, 0.0)),
      make_track(2, square_box(0.0, 250.0 / 63.0)),
  };
  const std::vector<Detection> dets = {
      box_detection(square_box(10.0 / 19.0, 0.0)),
      box_detection(square_box(90.0 / 101.0, 600.0 / 161.0)),
  };
  CHECK(iou(tracks[0].last_box, dets[0].box) == Catch::Approx(0.9).margin(1e-12));
  CHECK(iou(tracks[0].last_box, dets[1].box) == Catch::Approx(0.4).margin(1e-12));
  CHECK(iou(tracks[1].last_box, dets[0].box) == Catch::Approx(0.4).margin(1e-12));
  CHECK(iou(tracks[1].last_box, dets[1].box) == Catch::Approx(0.8).margin(1e-12));

  const auto out = spatial_match(tracks, dets, 0.3);
  REQUIRE(out.pairs.size() == 2);
  CHECK(out.pairs[0] == std::pair<std::size_t, std::size_t>{0, 0});
  CHECK(out.pairs[1] == std::pair<std::size_t, std::size_t>{1, 1});
  CHECK(out.scores[0] == Catch::Approx(0.9).margin(1e-12));

  // brute force over all four assignments agrees
  TrackerConfig cfg = sc_only_config();
  const OracleOutcome oracle = oracle_associate(tracks, dets, cfg, nullptr);
  CHECK(oracle.spatial == std::set<std::pair<int, int>>{{1, 0}, {2, 1}});
}

TEST_CASE("spatial match ties break toward lower track id then detection index") {
  // one detection equidistant between two identical track boxes
  const BoundingBox shared = square_box(0, 0);
  {
    const std::vector<Track> tracks = {make_track(7, shared), make_track(3, shared)};
    const auto out = spatial_match(tracks, {box_detection(square_box(2, 0))}, 0.3);
    REQUIRE(out.pairs.size() == 1);
    CHECK(tracks[out.pairs[0].first].id == 3);
  }
  {
    const std::vector<Track> tracks = {make_track(1, shared)};
    const std::vector<Detection> dets = {box_detection(square_box(2, 0)),
                                         box_detection(square_box(2, 0))};
    const auto out = spatial_match(tracks, dets, 0.3);
    REQUIRE(out.pairs.size() == 1);
    CHECK(out.pairs[0].second == 0);
    CHECK(out.unmatched_detections == std::vector<std::size_t>{1});
  }
}

TEST_CASE("pose match pairs translated pose copies across zero overlap") {
  const PoseMatcher matcher(make_test_model(square_topology(), 0.5));
  std::vector<Track> tracks(2);
  tracks[0].id = 1;
  tracks[0].last_pose = square_pose(100, 100, 30);
  tracks[1].id = 2;
  tracks[1].last_pose = square_pose(100, 300, 45);  // different shape via aspect
  tracks[1].last_pose.joints[0].x -= 20;            // make it genuinely distinct
  const std::vector<Detection> dets = {
      Detection{BoundingBox{}, [] {
                  Pose p = square_pose(900, 500, 45);
                  p.joints[0].x -= 20;
                  return p;
                }()},                                  // track 2's shape, far away
      Detection{BoundingBox{}, square_pose(700, 100, 30)},  // track 1's shape
  };
  const auto out = pose_match(tracks, {0, 1}, dets, {0, 1}, matcher, 0.5);
  REQUIRE(out.pairs.size() == 2);
  std::map<std::size_t, std::size_t> got(
      {{out.pairs[0].first, out.pairs[0].second}, {out.pairs[1].first, out.pairs[1].second}});
  CHECK(got[0] == 1);  // track 1 -> its translated shape
  CHECK(got[1] == 0);
  for (double s : out.scores) CHECK(s < 1e-6);  // translation invariance -> D ~ 0
}

TEST_CASE("pose match respects the distance threshold") {
  const PoseMatcher matcher(make_test_model(square_topology(), 0.5));
  std::vector<Track> tracks(1);
  tracks[0].id = 1;
  tracks[0].last_pose = square_pose(100, 100, 30);
  // no detections, then no tracks: both empty outcomes
  auto out = pose_match(tracks, {0}, {}, {}, matcher, 0.5);
  CHECK(out.pairs.empty());
  CHECK(out.unmatched_tracks == std::vector<std::size_t>{0});
  // threshold zero never matches
  const std::vector<Detection> dets = {Detection{BoundingBox{}, square_pose(100, 100, 30)}};
  out = pose_match(tracks, {0}, dets, {0}, matcher, 0.0);
  CHECK(out.pairs.empty());
}

TEST_CASE("degenerate poses never pose-match but do not break the stage") {
  const PoseMatcher matcher(make_test_model(square_topology(), 0.9));
  std::vector<Track> tracks(2);
  tracks[0].id = 1;
  tracks[0].last_pose = square_pose(100, 100, 30, 0.0);  // all scores zero -> no bbox
  tracks[1].id = 2;
  tracks[1].last_pose = square_pose(200, 100, 30);
  const std::vector<Detection> dets = {Detection{BoundingBox{}, square_pose(500, 100, 30)}};
  const auto out = pose_match(tracks, {0, 1}, dets, {0}, matcher, 0.9);
  REQUIRE(out.pairs.size() == 1);
  CHECK(tracks[out.pairs[0].first].id == 2);
  CHECK(out.unmatched_tracks == std::vector<std::size_t>{0});
}

TEST_CASE("fresh start assigns ids in detection order") {
  const ObservationSequence seq = script_seq({{{1, 100, 100}, {2, 300, 100}, {3, 500, 100}}});
  CountingDetector det(seq);
  CountingEstimator est(seq);
  TrackingEngine engine(sc_only_config(), det, est);
  const FrameResult r = engine.step(0);
  CHECK(r.was_keyframe);
  CHECK(r.new_ids == std::vector<int>{1, 2, 3});
  REQUIRE(r.entries.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(r.entries[i].track_id == static_cast<int>(i) + 1);
    CHECK(r.entries[i].state == TrackState::kTracked);
  }
}

TEST_CASE("stationary target: detector on schedule, estimator once per frame") {
  std::vector<std::vector<std::array<double, 3>>> script(20, {{1, 200, 200}});
  const ObservationSequence seq = script_seq(script);
  CountingDetector det(seq);
  CountingEstimator est(seq);
  TrackerConfig cfg = sc_only_config();
  cfg.mode = KeyframeMode::kFixedInterval;
  cfg.keyframe_interval = 5;
  TrackingEngine engine(cfg, det, est);

  for (int f = 0; f < 20; ++f) {
    const FrameResult r = engine.step(f);
    REQUIRE(r.entries.size() == 1);
    CHECK(r.entries[0].track_id == 1);
    CHECK(r.entries[0].state == TrackState::kTracked);
    CHECK(r.was_keyframe == (f % 5 == 0));
  }
  CHECK(det.calls == std::vector<int>{0, 5, 10, 15});
  CHECK(est.calls_per_frame.count(0) == 0);  // no tracks exist yet at frame 0
  for (int f = 1; f < 20; ++f) CHECK(est.calls_per_frame[f] == 1);
}

TEST_CASE("estimator runs once per tracked target and skips lost ones") {
  std::vector<std::vector<std::array<double, 3>>> script(
      8, {{1, 200, 200}, {2, 600, 200}});
  script[4] = {{1, 200, 200}};  // person 2 missing at frame 4
  script[5] = {{1, 200, 200}};
  const ObservationSequence seq = script_seq(script);
  CountingDetector det(seq);
  CountingEstimator est(seq);
  TrackerConfig cfg = sc_only_config();
  cfg.mode = KeyframeMode::kFixedInterval;
  cfg.keyframe_interval = 4;
  TrackingEngine engine(cfg, det, est);
  for (int f = 0; f < 8; ++f) engine.step(f);
  CHECK(est.calls_per_frame[1] == 2);
  CHECK(est.calls_per_frame[4] == 2);  // both still tracked entering frame 4
  CHECK(est.calls_per_frame[5] == 1);  // track 2 lost at 4, skipped at 5
}

TEST_CASE("a one-frame dropout is revived with the same id by overlap") {
  std::vector<std::vector<std::array<double, 3>>> script(8, {{1, 200, 200}});
  script[3] = {};  // gone for exactly one frame
  const ObservationSequence seq = script_seq(script);
  CountingDetector det(seq);
  CountingEstimator est(seq);
  TrackerConfig cfg = sc_only_config();  // hybrid mode by default
  TrackingEngine engine(cfg, det, est);

  std::vector<TrackState> states;
  std::vector<int> new_id_frames;
  for (int f = 0; f < 8; ++f) {
    const FrameResult r = engine.step(f);
    REQUIRE(r.entries.size() == 1);
    CHECK(r.entries[0].track_id == 1);
    states.push_back(r.entries[0].state);
    if (!r.new_ids.empty() && f > 0) new_id_frames.push_back(f);
  }
  CHECK(states[2] == TrackState::kTracked);
  CHECK(states[3] == TrackState::kLost);     // estimator failure drives Eq. 1 to lost
  CHECK(states[4] == TrackState::kTracked);  // spatial overlap revives the id
  CHECK(new_id_frames.empty());
  // the loss forced keyframes at 3 (adaptive trigger) and 4
  CHECK(std::count(det.calls.begin(), det.calls.end(), 3) == 1);
  CHECK(std::count(det.calls.begin(), det.calls.end(), 4) == 1);
}

TEST_CASE("a sudden position jump is recovered by pose matching only") {
  std::vector<std::vector<std::array<double, 3>>> script;
  for (int f = 0; f < 5; ++f) script.push_back({{1, 100, 100}});
  for (int f = 5; f < 10; ++f) script.push_back({{1, 500, 100}});
  const ObservationSequence seq = script_seq(script);

  const MatcherModel model = make_test_model(square_topology(), 0.5);
  const PoseMatcher matcher(model);
  {
    CountingDetector det(seq);
    CountingEstimator est(seq);
    TrackerConfig cfg;  // pose matching on
    TrackingEngine engine(cfg, det, est, &matcher);
    std::vector<FrameResult> results;
    for (int f = 0; f < 10; ++f) results.push_back(engine.step(f));
    REQUIRE(results[5].entries.size() == 1);
    CHECK(results[5].entries[0].track_id == 1);
    CHECK(results[5].entries[0].state == TrackState::kTracked);
    REQUIRE(results[5].associations.size() == 1);
    CHECK(results[5].associations[0].stage == MatchStage::kPose);
    CHECK(results[5].associations[0].score < 1e-6);
    for (const FrameResult& r : results) {
      if (r.frame > 0) CHECK(r.new_ids.empty());
    }
  }
  {
    CountingDetector det(seq);
    CountingEstimator est(seq);
    TrackingEngine engine(sc_only_config(), det, est);
    std::vector<FrameResult> results;
    for (int f = 0; f < 10; ++f) results.push_back(engine.step(f));
    // without pose matching the jump spawns a fresh identity
    CHECK(results[5].new_ids == std::vector<int>{2});
  }
}

TEST_CASE("lost tracks are terminated once past the lost budget") {
  std::vector<std::vector<std::array<double, 3>>> script(20);
  for (int f = 0; f < 3; ++f) script[static_cast<std::size_t>(f)] = {{1, 200, 200}};
  const ObservationSequence seq = script_seq(script);

  // fixed interval: termination can only happen at scheduled keyframes
  {
    CountingDetector det(seq);
    CountingEstimator est(seq);
    TrackerConfig cfg = sc_only_config();
    cfg.mode = KeyframeMode::kFixedInterval;
    cfg.keyframe_interval = 5;  // max_lost = 10, last seen at 2
    TrackingEngine engine(cfg, det, est);
    std::map<int, bool> present;
    std::vector<int> terminated_at;
    for (int f = 0; f < 20; ++f) {
      const FrameResult r = engine.step(f);
      present[f] = !r.entries.empty();
      if (!r.terminated_ids.empty()) terminated_at.push_back(f);
    }
    CHECK(present[10]);  // 10 - 2 = 8 <= 10, survives the frame-10 keyframe
    CHECK(present[14]);
    CHECK(!present[15]);  // 15 - 2 = 13 > 10, dropped at the next keyframe
    CHECK(terminated_at == std::vector<int>{15});
  }
  // hybrid: the lost track forces keyframes, so termination is prompt
  {
    CountingDetector det(seq);
    CountingEstimator est(seq);
    TrackerConfig cfg = sc_only_config();
    TrackingEngine engine(cfg, det, est);
    std::vector<int> terminated_at;
    for (int f = 0; f < 20; ++f) {
      const FrameResult r = engine.step(f);
      if (!r.terminated_ids.empty()) terminated_at.push_back(f);
    }
    CHECK(terminated_at == std::vector<int>{13});  // first frame with 13 - 2 > 10
  }
}

TEST_CASE("ids are never reused after termination") {
  std::vector<std::vector<std::array<double, 3>>> script(20);
  for (int f = 0; f < 3; ++f) script[static_cast<std::size_t>(f)] = {{1, 200, 200}};
  for (int f = 14; f < 20; ++f) script[static_cast<std::size_t>(f)] = {{2, 200, 200}};
  const ObservationSequence seq = script_seq(script);
  CountingDetector det(seq);
  CountingEstimator est(seq);
  TrackingEngine engine(sc_only_config(), det, est);
  std::set<int> ids_after_termination;
  for (int f = 0; f < 20; ++f) {
    const FrameResult r = engine.step(f);
    if (f >= 14) {
      for (const TrackedEntry& e : r.entries) ids_after_termination.insert(e.track_id);
    }
  }
  // the newcomer at th​e old location gets a fresh id, not the retired 1
  CHECK(ids_after_termination.count(1) == 0);
  CHECK(ids_after_termination.count(2) == 1);
}

TEST_CASE("new identities can be restricted to the start of the sequence") {
  std::vector<std::vector<std::array<double, 3>>> script(12, {{1, 200, 200}});
  for (int f = 6; f < 12; ++f) script[static_cast<std::size_t>(f)].push_back({2, 700, 200});
  const ObservationSequence seq = script_seq(script);
  TrackerConfig cfg = sc_only_config();
  cfg.mode = KeyframeMode::kFixedInterval;
  cfg.keyframe_interval = 5;
  {
    CountingDetector det(seq);
    CountingEstimator est(seq);
    TrackingEngine engine(cfg, det, est);
    std::set<int> ids;
    for (int f = 0; f < 12; ++f) {
      for (const TrackedEntry& e : engine.step(f).entries) ids.insert(e.track_id);
    }
    CHECK(ids == std::set<int>{1, 2});  // newcomer picked up at the frame-10 keyframe
  }
  {
    CountingDetector det(seq);
    CountingEstimator est(seq);
    cfg.new_ids_only_at_start = true;
    TrackingEngine engine(cfg, det, est);
    std::set<int> ids;
    for (int f = 0; f < 12; ++f) {
      for (const TrackedEntry& e : engine.step(f).entries) ids.insert(e.track_id);
    }
    CHECK(ids == std::set<int>{1});  // the newcomer is ignored
  }
}

TEST_CASE("pose matching without a matcher is a configuration error") {
  const ObservationSequence seq = script_seq({{{1, 100, 100}}});
  CountingDetector det(seq);
  CountingEstimator est(seq);
  TrackerConfig cfg;  // use_pose_matching defaults to true
  CHECK_THROWS_AS(TrackingEngine(cfg, det, est, nullptr), MatcherUnavailable);
}

TEST_CASE("match threshold resolves from the model unless overridden") {
  const ObservationSequence seq = script_seq({{{1, 100, 100}}});
  CountingDetector det(seq);
  CountingEstimator est(seq);
  MatcherModel model = make_test_model(square_topology(), 0.37);
  const PoseMatcher matcher(model);
  {
    TrackerConfig cfg;
    TrackingEngine engine(cfg, det, est, &matcher);
    CHECK(engine.config().match_threshold == 0.37);
  }
  {
    TrackerConfig cfg;
    cfg.match_threshold = 0.9;
    TrackingEngine engine(cfg, det, est, &matcher);
    CHECK(engine.config().match_threshold == 0.9);
  }
}

TEST_CASE("frame errors carry context and range errors pass through") {
  const ObservationSequence seq = script_seq({{{1, 100, 100}}, {{1, 100, 100}}});
  {
    CountingDetector det(seq);
    CountingEstimator est(seq);
    TrackingEngine engine(sc_only_config(), det, est);
    engine.step(0);
    CHECK_THROWS_AS(engine.step(7), FrameOutOfRange);
  }
  {
    class BoomEstimator : public Estimator {
     public:
      Pose estimate(int, const BoundingBox&) override { throw ValidationError("boom"); }
    };
    CountingDetector det(seq);
    BoomEstimator est;
    TrackingEngine engine(sc_only_config(), det, est);
    engine.step(0);
    try {
      engine.step(1);
      FAIL("expected ProviderError");
    } catch (const ProviderError& e) {
      CHECK(std::string(e.what()).find("frame 1") != std::string::npos);
    }
  }
}

TEST_CASE("tracking a synthetic crossing matches the exhaustive oracle") {
  SynthConfig scfg;
  scfg.seq_id = "crossing";
  scfg.n_people = 2;
  scfg.n_frames = 60;
  scfg.people = {PersonInit{300, 300, 10, 0, 120, 0.3}, PersonInit{900, 360, -10, 0, 120, 2.1}};
  const ObservationSequence seq = synth_sequence(scfg);

  const MatcherModel model = make_test_model(posetrack15_topology(), 0.6);
  const PoseMatcher matcher(model);

  for (const bool with_pose : {true, false}) {
    TrackerConfig cfg;
    cfg.mode = KeyframeMode::kFixedInterval;
    cfg.keyframe_interval = 3;
    cfg.use_pose_matching = with_pose;
    const PoseMatcher* m = with_pose ? &matcher : nullptr;

    std::vector<KeyframeSnapshot> snaps;
    const TrackRunResult run = run_tracking(
        seq, cfg, m, {}, [&](const KeyframeSnapshot& s) { snaps.push_back(s); });
    REQUIRE(!snaps.empty());

    TrackerConfig resolved = cfg;
    if (with_pose) resolved.match_threshold = model.match_threshold;
    for (const KeyframeSnapshot& snap : snaps) {
      const OracleOutcome want = oracle_associate(snap.tracks_before, snap.detections,
                                                  resolved, m);
      const OracleOutcome got = outcome_from_snapshot(snap, resolved);
      INFO("keyframe " << snap.frame << " pose_matching " << with_pose);
      CHECK(got.spatial == want.spatial);
      CHECK(got.pose == want.pose);
      CHECK(got.lost_track_ids == want.lost_track_ids);
      CHECK(got.new_track_detections == want.new_track_detections);
      CHECK(snap.new_ids.size() == want.new_track_detections.size());
    }

    // frame-level invariants: unique ids, confident tracked entries
    for (const FrameResult& r : run.frames) {
      std::set<int> ids;
      for (const TrackedEntry& e : r.entries) {
        CHECK(ids.insert(e.track_id).second);
        if (e.state == TrackState::kTracked) {
          CHECK(mean_confidence(e.pose) > cfg.tau_s);
        }
      }
    }
  }
}

TEST_CASE("identical runs produce identical tracked output") {
  SynthConfig scfg;
  scfg.n_people = 3;
  scfg.n_frames = 30;
  scfg.seed = 77;
  scfg.occlusions = {OcclusionWindow{2, 10, 13}};
  const ObservationSequence seq = synth_sequence(scfg);
  const MatcherModel model = make_test_model(posetrack15_topology(), 0.6);
  const PoseMatcher matcher(model);
  TrackerConfig cfg;
  const TrackRunResult a = run_tracking(seq, cfg, &matcher);
  const TrackRunResult b = run_tracking(seq, cfg, &matcher);
  CHECK(tracked_to_json(a.tracked).dump(1) == tracked_to_json(b.tracked).dump(1));
}

TEST_CASE("run_tracking carries the sequence header and keyframe flags") {
  const ObservationSequence seq = script_seq({{{1, 100, 100}}, {{1, 104, 100}}, {{1, 108, 100}}});
  TrackerConfig cfg = sc_only_config();
  cfg.mode = KeyframeMode::kFixedInterval;
  cfg.keyframe_interval = 2;
  const TrackRunResult run = run_tracking(seq, cfg);
  CHECK(run.tracked.seq_id == seq.seq_id);
  CHECK(run.tracked.image_size == seq.image_size);
  CHECK(run.tracked.joint_order == seq.joint_order);
  REQUIRE(run.tracked.frames.size() == 3);
  CHECK(run.tracked.frames[0].keyframe);
  CHECK(!run.tracked.frames[1].keyframe);
  CHECK(run.tracked.frames[2].keyframe);
  CHECK(run.timings.total_s >= 0.0);
}
