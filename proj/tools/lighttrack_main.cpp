// Command-line front end: track / train / eval / gen-pairs / synth / convert,
// plus rerun, which replays any of them from a recorded manifest.
//
// Exit codes: 0 success, 1 data (parse/validation) error, 2 configuration or
// usage error, 3 internal error.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "lighttrack/evaluation.hpp"
#include "lighttrack/matcher.hpp"
#include "lighttrack/pairs.hpp"
#include "lighttrack/providers.hpp"
#include "lighttrack/sequence.hpp"
#include "lighttrack/skeleton.hpp"
#include "lighttrack/tracker.hpp"
#include "lighttrack/training.hpp"

namespace {

using nlohmann::json;
using namespace lighttrack;

constexpr const char* kToolVersion = "1.0.0";
constexpr int kManifestVersion = 1;

std::string default_manifest_path(const std::string& out) { return out + ".manifest.json"; }

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
  return j;
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw ProviderError("cannot write: " + path);
  out << text;
  if (!out) throw ProviderError("short write: " + path);
}

json manifest_skeleton(const std::string& command) {
  json m;
  m["format_version"] = kManifestVersion;
  m["tool"] = "lighttrack";
  m["tool_version"] = kToolVersion;
  m["command"] = command;
  return m;
}

void write_manifest(const json& m, const std::string& path) {
  write_text_file(path, m.dump(1) + "\n");
}

SkeletonTopology resolve_topology(const std::string& spec) {
  if (spec == "posetrack15") return posetrack15_topology();
  return load_topology(spec);
}

// ---------------------------------------------------------------- track ----

struct TrackParams {
  std::string input;
  std::string weights;  // empty: none
  std::string out;
  std::string manifest;  // empty: derived from out
  TrackerConfig tracker;
  std::string mode = "hybrid";
  double containment_floor = 0.3;
  EstimatorNoise noise;
};

json track_config_json(const TrackParams& p) {
  json c;
  c["keyframe-interval"] = p.tracker.keyframe_interval;
  c["mode"] = p.mode;
  c["tau-s"] = p.tracker.tau_s;
  c["tau-o"] = p.tracker.tau_o;
  c["match-threshold"] = p.tracker.match_threshold;
  c["max-lost"] = p.tracker.max_lost_frames;
  c["disable-gcn"] = !p.tracker.use_pose_matching;
  c["new-ids-only-at-start"] = p.tracker.new_ids_only_at_start;
  c["containment-floor"] = p.containment_floor;
  c["noise-sigma"] = p.noise.coord_sigma;
  c["score-jitter"] = p.noise.score_jitter;
  c["seed"] = p.noise.seed;
  return c;
}

TrackParams track_params_from_manifest(const json& m) {
  TrackParams p;
  const json& c = m.at("config");
  p.input = m.at("inputs").at("sequence").get<std::string>();
  p.weights = m.at("inputs").value("weights", "");
  p.out = m.at("outputs").at("tracked").get<std::string>();
  p.tracker.keyframe_interval = c.at("keyframe-interval").get<int>();
  p.mode = c.at("mode").get<std::string>();
  p.tracker.tau_s = c.at("tau-s").get<double>();
  p.tracker.tau_o = c.at("tau-o").get<double>();
  p.tracker.match_threshold = c.at("match-threshold").get<double>();
  p.tracker.max_lost_frames = c.at("max-lost").get<int>();
  p.tracker.use_pose_matching = !c.at("disable-gcn").get<bool>();
  p.tracker.new_ids_only_at_start = c.at("new-ids-only-at-start").get<bool>();
  p.containment_floor = c.at("containment-floor").get<double>();
  p.noise.coord_sigma = c.at("noise-sigma").get<double>();
  p.noise.score_jitter = c.at("score-jitter").get<double>();
  p.noise.seed = c.at("seed").get<std::uint64_t>();
  return p;
}

int cmd_track(const TrackParams& p) {
  using clock = std::chrono::steady_clock;
  const auto t0 = clock::now();
  TrackParams resolved = p;
  resolved.tracker.mode = keyframe_mode_from_string(p.mode);
  validate_tracker_config(resolved.tracker);

  if (resolved.tracker.use_pose_matching && resolved.weights.empty()) {
    throw MatcherUnavailable(
        "matcher unavailable: pose matching is enabled but no weights were given; "
        "pass --weights or --disable-gcn");
  }
  const ObservationSequence seq = load_sequence(resolved.input);
  std::unique_ptr<PoseMatcher> matcher;
  if (resolved.tracker.use_pose_matching) {
    matcher = std::make_unique<PoseMatcher>(load_model(resolved.weights));
  }
  const double io_s = std::chrono::duration<double>(clock::now() - t0).count();

  TrackRunOptions opts;
  opts.containment_floor = resolved.containment_floor;
  opts.noise = resolved.noise;
  const TrackRunResult run = run_tracking(seq, resolved.tracker, matcher.get(), opts);
  save_tracked(run.tracked, resolved.out);

  int switches = 0;  // identity births beyond frame 0, a cheap health signal
  for (const FrameResult& r : run.frames) {
    if (r.frame > 0) switches += static_cast<int>(r.new_ids.size());
  }

  json m = manifest_skeleton("track");
  m["inputs"]["sequence"] = resolved.input;
  if (!resolved.weights.empty()) m["inputs"]["weights"] = resolved.weights;
  m["outputs"]["tracked"] = resolved.out;
  m["config"] = track_config_json(p);
  m["seed"] = resolved.noise.seed;
  const double frames = static_cast<double>(run.tracked.frames.size());
  json t;
  t["frames"] = run.tracked.frames.size();
  t["total_s"] = run.timings.total_s;
  t["io_s"] = io_s;
  t["estimation_s"] = run.timings.estimation_s;
  t["association_s"] = run.timings.association_s;
  t["matching_s"] = run.timings.matching_s;
  const double overhead = std::max(run.timings.total_s - run.timings.estimation_s, 1e-12);
  t["fps_excluding_estimation"] = frames / overhead;
  m["timings"] = t;
  m["stats"]["late_new_ids"] = switches;
  write_manifest(m, resolved.manifest.empty() ? default_manifest_path(resolved.out)
                                              : resolved.manifest);
  std::cout << "tracked " << run.tracked.frames.size() << " frames -> " << resolved.out
            << "\n";
  return 0;
}

// ---------------------------------------------------------------- train ----

struct TrainParams {
  std::string pairs;
  std::string val_pairs;  // empty: calibrate on the training set
  std::string topology = "posetrack15";
  std::string out;
  std::string loss_curve;  // empty: derived from out
  std::string manifest;
  TrainConfig cfg;
};

json train_config_json(const TrainParams& p) {
  json c;
  c["topology"] = p.topology;
  c["batch-size"] = p.cfg.batch_size;
  c["epochs"] = p.cfg.epochs;
  c["lr"] = p.cfg.lr;
  c["lr-decay-epochs"] = p.cfg.lr_decay_epochs;
  c["lr-decay-factor"] = p.cfg.lr_decay_factor;
  c["weight-decay"] = p.cfg.weight_decay;
  c["momentum"] = p.cfg.momentum;
  c["margin"] = p.cfg.margin;
  c["hidden"] = p.cfg.hidden_channels;
  c["embedding-dim"] = p.cfg.embedding_dim;
  c["seed"] = p.cfg.seed;
  return c;
}

TrainParams train_params_from_manifest(const json& m) {
  TrainParams p;
  const json& c = m.at("config");
  p.pairs = m.at("inputs").at("pairs").get<std::string>();
  p.val_pairs = m.at("inputs").value("val_pairs", "");
  p.out = m.at("outputs").at("weights").get<std::string>();
  p.loss_curve = m.at("outputs").at("loss_curve").get<std::string>();
  p.topology = c.at("topology").get<std::string>();
  p.cfg.batch_size = c.at("batch-size").get<int>();
  p.cfg.epochs = c.at("epochs").get<int>();
  p.cfg.lr = c.at("lr").get<double>();
  p.cfg.lr_decay_epochs = c.at("lr-decay-epochs").get<std::vector<int>>();
  p.cfg.lr_decay_factor = c.at("lr-decay-factor").get<double>();
  p.cfg.weight_decay = c.at("weight-decay").get<double>();
  p.cfg.momentum = c.at("momentum").get<double>();
  p.cfg.margin = c.at("margin").get<double>();
  p.cfg.hidden_channels = c.at("hidden").get<int>();
  p.cfg.embedding_dim = c.at("embedding-dim").get<int>();
  p.cfg.seed = c.at("seed").get<std::uint64_t>();
  return p;
}

int cmd_train(const TrainParams& p) {
  const SkeletonTopology topo = resolve_topology(p.topology);
  const PairDataset train_set = load_pairs(p.pairs);
  const PairDataset val_set = p.val_pairs.empty() ? train_set : load_pairs(p.val_pairs);
  if (train_set.joint_order != topo.joint_names) {
    throw ValidationError("train: pair joint order does not match the topology");
  }

  FitResult fit;
  if (p.cfg.epochs == 0) {
    // --epochs 0 keeps the seeded initialization; only the threshold is fit
    TrainConfig probe = p.cfg;
    probe.epochs = 1;
    validate_train_config(probe);
    fit.model.topology = topo;
    fit.model.radii = radii_from_pairs(train_set, topo);
    fit.model.margin = p.cfg.margin;
    GcnDims dims;
    dims.joints = topo.joint_count();
    dims.hidden_channels = p.cfg.hidden_channels;
    dims.embedding_dim = p.cfg.embedding_dim;
    fit.model.weights = init_weights(dims, p.cfg.seed);
    const PartitionedAdjacency adj = build_partitioned_adjacency(topo, fit.model.radii);
    const Calibration cal = calibrate_matcher_threshold(fit.model.weights, adj, val_set);
    fit.model.match_threshold = cal.threshold;
    fit.validation_accuracy = cal.accuracy;
    validate_model(fit.model);
  } else {
    fit = fit_matcher(train_set, val_set, p.cfg, topo);
  }
  save_model(fit.model, p.out);

  const std::string curve_path = p.loss_curve.empty() ? p.out + ".loss.csv" : p.loss_curve;
  std::ostringstream curve;
  curve << "epoch,mean_loss\n" << std::setprecision(17);
  for (std::size_t e = 0; e < fit.loss_curve.size(); ++e) {
    curve << (e + 1) << ',' << fit.loss_curve[e] << '\n';
  }
  write_text_file(curve_path, curve.str());

  json m = manifest_skeleton("train");
  m["inputs"]["pairs"] = p.pairs;
  if (!p.val_pairs.empty()) m["inputs"]["val_pairs"] = p.val_pairs;
  m["outputs"]["weights"] = p.out;
  m["outputs"]["loss_curve"] = curve_path;
  m["config"] = train_config_json(p);
  m["seed"] = p.cfg.seed;
  m["stats"]["validation_accuracy"] = fit.validation_accuracy;
  m["stats"]["match_threshold"] = fit.model.match_threshold;
  if (!fit.loss_curve.empty()) m["stats"]["final_loss"] = fit.loss_curve.back();
  write_manifest(m, p.manifest.empty() ? default_manifest_path(p.out) : p.manifest);
  std::cout << "trained " << p.cfg.epochs << " epochs, validation accuracy "
            << fit.validation_accuracy << " -> " << p.out << "\n";
  return 0;
}

// ----------------------------------------------------------------- eval ----

struct EvalParams {
  std::vector<std::string> gt;
  std::vector<std::string> run_specs;  // name=pred1[,pred2...]
  std::string out;
  std::string manifest;
  std::string format = "csv";
  double dist_threshold = kDefaultMotDistThreshold;
};

EvalParams eval_params_from_manifest(const json& m) {
  EvalParams p;
  const json& c = m.at("config");
  p.gt = m.at("inputs").at("gt").get<std::vector<std::string>>();
  p.run_specs = m.at("inputs").at("runs").get<std::vector<std::string>>();
  p.out = m.at("outputs").at("report").get<std::string>();
  p.format = c.at("format").get<std::string>();
  p.dist_threshold = c.at("dist-threshold").get<double>();
  return p;
}

int cmd_eval(const EvalParams& p) {
  if (p.format != "csv" && p.format != "text") {
    throw InvalidConfig("eval: --format must be csv or text");
  }
  std::vector<ObservationSequence> gts;
  for (const std::string& path : p.gt) gts.push_back(load_sequence(path));

  std::vector<std::pair<std::string, std::vector<TrackedSequence>>> runs;
  for (const std::string& spec : p.run_specs) {
    const std::size_t eq = spec.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw InvalidConfig("eval: --run expects name=pred.json[,pred2.json...], got '" + spec +
                          "'");
    }
    std::vector<TrackedSequence> preds;
    std::stringstream paths(spec.substr(eq + 1));
    for (std::string path; std::getline(paths, path, ',');) {
      preds.push_back(load_tracked(path));
    }
    runs.emplace_back(spec.substr(0, eq), std::move(preds));
  }
  if (runs.empty()) throw InvalidConfig("eval: at least one --run is required");

  const std::vector<RunReport> reports = compare_runs(gts, runs, p.dist_threshold);
  write_text_file(p.out, p.format == "csv" ? report_csv(reports) : report_text(reports));
  for (const RunReport& r : reports) {
    std::cout << r.name << ": mota " << r.tally.total.mota() << ", idsw " << r.tally.total.idsw
              << "\n";
  }

  json m = manifest_skeleton("eval");
  m["inputs"]["gt"] = p.gt;
  m["inputs"]["runs"] = p.run_specs;
  m["outputs"]["report"] = p.out;
  m["config"]["format"] = p.format;
  m["config"]["dist-threshold"] = p.dist_threshold;
  m["seed"] = 0;
  write_manifest(m, p.manifest.empty() ? default_manifest_path(p.out) : p.manifest);
  return 0;
}

// ------------------------------------------------------------ gen-pairs ----

struct GenPairsParams {
  std::vector<std::string> inputs;
  std::string out;
  std::string manifest;
  double score_floor = kJointScoreFloor;
  int balanced = 0;  // 0: keep everything
  std::uint64_t seed = 1;
};

GenPairsParams gen_pairs_params_from_manifest(const json& m) {
  GenPairsParams p;
  const json& c = m.at("config");
  p.inputs = m.at("inputs").at("sequences").get<std::vector<std::string>>();
  p.out = m.at("outputs").at("pairs").get<std::string>();
  p.score_floor = c.at("score-floor").get<double>();
  p.balanced = c.at("balanced").get<int>();
  p.seed = c.at("seed").get<std::uint64_t>();
  return p;
}

int cmd_gen_pairs(const GenPairsParams& p) {
  std::vector<ObservationSequence> seqs;
  for (const std::string& path : p.inputs) seqs.push_back(load_sequence(path));
  PairDataset ds = generate_pairs(seqs, p.score_floor);
  if (p.balanced > 0) {
    Rng rng(p.seed);
    ds = balanced_subset(ds, static_cast<std::size_t>(p.balanced), rng);
  }
  save_pairs(ds, p.out);

  json m = manifest_skeleton("gen-pairs");
  m["inputs"]["sequences"] = p.inputs;
  m["outputs"]["pairs"] = p.out;
  m["config"]["score-floor"] = p.score_floor;
  m["config"]["balanced"] = p.balanced;
  m["config"]["seed"] = p.seed;
  m["seed"] = p.seed;
  m["stats"]["positive"] = ds.count(PairCategory::kPositive);
  m["stats"]["hard_negative"] = ds.count(PairCategory::kHardNegative);
  m["stats"]["other_negative"] = ds.count(PairCategory::kOtherNegative);
  write_manifest(m, p.manifest.empty() ? default_manifest_path(p.out) : p.manifest);
  std::cout << "mined " << ds.pairs.size() << " pairs (" << ds.count(PairCategory::kPositive)
            << " positive, " << ds.count(PairCategory::kHardNegative) << " hard negative) -> "
            << p.out << "\n";
  return 0;
}

// ---------------------------------------------------------------- synth ----

struct SynthParams {
  std::string config;
  std::string out;
  std::string manifest;
  std::int64_t seed = -1;  // <0: keep the config file's seed
  std::string seq_id;      // empty: keep the config file's id
};

SynthParams synth_params_from_manifest(const json& m) {
  SynthParams p;
  p.config = m.at("inputs").at("config").get<std::string>();
  p.out = m.at("outputs").at("sequence").get<std::string>();
  p.seed = m.at("config").at("seed-override").get<std::int64_t>();
  p.seq_id = m.at("config").at("seq-id-override").get<std::string>();
  return p;
}

int cmd_synth(const SynthParams& p) {
  SynthConfig cfg = load_synth_config(p.config);
  if (p.seed >= 0) cfg.seed = static_cast<std::uint64_t>(p.seed);
  if (!p.seq_id.empty()) cfg.seq_id = p.seq_id;
  const ObservationSequence seq = synth_sequence(cfg);
  save_sequence(seq, p.out);

  json m = manifest_skeleton("synth");
  m["inputs"]["config"] = p.config;
  m["outputs"]["sequence"] = p.out;
  m["config"]["seed-override"] = p.seed;
  m["config"]["seq-id-override"] = p.seq_id;
  m["seed"] = cfg.seed;
  m["stats"]["frames"] = seq.frames.size();
  m["stats"]["people"] = cfg.n_people;
  write_manifest(m, p.manifest.empty() ? default_manifest_path(p.out) : p.manifest);
  std::cout << "synthesized " << seq.frames.size() << " frames -> " << p.out << "\n";
  return 0;
}

// -------------------------------------------------------------- convert ----

struct ConvertParams {
  std::string input;
  std::string seq_id;
  std::string out;
  std::string manifest;
};

ConvertParams convert_params_from_manifest(const json& m) {
  ConvertParams p;
  p.input = m.at("inputs").at("posetrack").get<std::string>();
  p.seq_id = m.at("config").at("seq-id").get<std::string>();
  p.out = m.at("outputs").at("sequence").get<std::string>();
  return p;
}

int cmd_convert(const ConvertParams& p) {
  const json raw = read_json_file(p.input);
  std::vector<std::string> warnings;
  const ObservationSequence seq = convert_posetrack(raw, p.seq_id, &warnings);
  for (const std::string& w : warnings) std::cerr << "warning: " << w << "\n";
  save_sequence(seq, p.out);

  json m = manifest_skeleton("convert");
  m["inputs"]["posetrack"] = p.input;
  m["outputs"]["sequence"] = p.out;
  m["config"]["seq-id"] = p.seq_id;
  m["seed"] = 0;
  m["stats"]["frames"] = seq.frames.size();
  m["stats"]["warnings"] = warnings.size();
  write_manifest(m, p.manifest.empty() ? default_manifest_path(p.out) : p.manifest);
  std::cout << "converted " << seq.frames.size() << " frames -> " << p.out << "\n";
  return 0;
}

// ---------------------------------------------------------------- rerun ----

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

int cmd_rerun(const std::string& manifest_path, const std::string& suffix, bool check) {
  const json m = read_json_file(manifest_path);
  if (!m.contains("command") || !m.contains("outputs")) {
    throw ValidationError("rerun: not a manifest: " + manifest_path);
  }
  const std::string command = m.at("command").get<std::string>();

  // redirect every declared output, then dispatch with the recorded config
  json redirected = m;
  std::vector<std::pair<std::string, std::string>> outputs;  // original -> rerun
  for (auto& [key, value] : redirected.at("outputs").items()) {
    const std::string original = value.get<std::string>();
    value = original + suffix;
    outputs.emplace_back(original, value.get<std::string>());
  }
  redirected["manifest_path"] = manifest_path + suffix;

  auto run = [&]() -> int {
    const std::string mpath = redirected["manifest_path"].get<std::string>();
    if (command == "track") {
      TrackParams p = track_params_from_manifest(redirected);
      p.manifest = mpath;
      return cmd_track(p);
    }
    if (command == "train") {
      TrainParams p = train_params_from_manifest(redirected);
      p.manifest = mpath;
      return cmd_train(p);
    }
    if (command == "eval") {
      EvalParams p = eval_params_from_manifest(redirected);
      p.manifest = mpath;
      return cmd_eval(p);
    }
    if (command == "gen-pairs") {
      GenPairsParams p = gen_pairs_params_from_manifest(redirected);
      p.manifest = mpath;
      return cmd_gen_pairs(p);
    }
    if (command == "synth") {
      SynthParams p = synth_params_from_manifest(redirected);
      p.manifest = mpath;
      return cmd_synth(p);
    }
    if (command == "convert") {
      ConvertParams p = convert_params_from_manifest(redirected);
      p.manifest = mpath;
      return cmd_convert(p);
    }
    throw ValidationError("rerun: unknown command in manifest: " + command);
  };
  const int rc = run();
  if (rc != 0 || !check) return rc;

  bool all_equal = true;
  for (const auto& [original, rerun_path] : outputs) {
    const bool same = slurp(original) == slurp(rerun_path);
    std::cout << (same ? "identical: " : "DIFFERS:   ") << original << "\n";
    all_equal = all_equal && same;
  }
  return all_equal ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"online multi-person pose tracking toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);
  // config files carry per-subcommand sections ([track], [train], ...) with
  // the same key names as the long flags; command-line values win
  app.set_config("--config", "", "ini/toml defaults file with [subcommand] sections");

  TrackParams track;
  CLI::App* t = app.add_subcommand("track", "run the tracking engine over a sequence file");
  t->fallthrough();
  t->add_option("--input", track.input, "observation sequence (json)")->required();
  t->add_option("--out", track.out, "tracked output path")->required();
  t->add_option("--weights", track.weights, "matcher weights file");
  t->add_option("--keyframe-interval", track.tracker.keyframe_interval, "detector cadence N");
  t->add_option("--mode", track.mode, "keyframe schedule: fki, aki, or hybrid");
  t->add_option("--tau-s", track.tracker.tau_s, "tracked-state confidence threshold");
  t->add_option("--tau-o", track.tracker.tau_o, "spatial-consistency IOU threshold");
  t->add_option("--match-threshold", track.tracker.match_threshold,
                "embedding distance gate; <0 takes the model's calibrated value");
  t->add_option("--max-lost", track.tracker.max_lost_frames,
                "frames a lost track survives; <0 means 2N");
  bool disable_gcn = false;
  t->add_flag("--disable-gcn", disable_gcn,
              "spatial consistency only (no pose matching)");
  t->add_flag("--new-ids-only-at-start", track.tracker.new_ids_only_at_start,
              "never open identities after frame 0");
  t->add_option("--containment-floor", track.containment_floor,
                "replay estimator containment threshold");
  t->add_option("--noise-sigma", track.noise.coord_sigma, "estimator coordinate noise (px)");
  t->add_option("--score-jitter", track.noise.score_jitter, "estimator score jitter");
  t->add_option("--seed", track.noise.seed, "noise seed");
  t->add_option("--manifest", track.manifest, "manifest path (default <out>.manifest.json)");

  TrainParams train_p;
  CLI::App* tr = app.add_subcommand("train", "fit the pose matcher on a pair dataset");
  tr->fallthrough();
  tr->add_option("--pairs", train_p.pairs, "training pair file")->required();
  tr->add_option("--out", train_p.out, "weights output path")->required();
  tr->add_option("--val-pairs", train_p.val_pairs,
                 "calibration pair file (default: the training set)");
  tr->add_option("--topology", train_p.topology, "topology file or 'posetrack15'");
  tr->add_option("--batch-size", train_p.cfg.batch_size, "minibatch size");
  tr->add_option("--epochs", train_p.cfg.epochs, "epochs (0 keeps the initialization)");
  tr->add_option("--lr", train_p.cfg.lr, "learning rate");
  tr->add_option("--lr-decay-epochs", train_p.cfg.lr_decay_epochs, "1-based decay epochs")
      ->delimiter(',');
  tr->add_option("--lr-decay-factor", train_p.cfg.lr_decay_factor, "decay multiplier");
  tr->add_option("--weight-decay", train_p.cfg.weight_decay, "decoupled weight decay");
  tr->add_option("--momentum", train_p.cfg.momentum, "SGD momentum");
  tr->add_option("--margin", train_p.cfg.margin, "contrastive margin on squared distance");
  tr->add_option("--hidden", train_p.cfg.hidden_channels, "hidden channels");
  tr->add_option("--embedding-dim", train_p.cfg.embedding_dim, "embedding dimension");
  tr->add_option("--seed", train_p.cfg.seed, "init + shuffle seed");
  tr->add_option("--loss-curve", train_p.loss_curve, "loss curve csv (default <out>.loss.csv)");
  tr->add_option("--manifest", train_p.manifest, "manifest path");

  EvalParams eval_p;
  CLI::App* ev = app.add_subcommand("eval", "score tracked output against ground truth");
  ev->add_option("--gt", eval_p.gt, "ground-truth sequence files (repeatable)")->required();
  ev->add_option("--run", eval_p.run_specs, "name=pred.json[,pred2.json...] (repeatable)")
      ->required();
  ev->add_option("--out", eval_p.out, "report output path")->required();
  ev->add_option("--format", eval_p.format, "csv or text");
  ev->add_option("--dist-threshold", eval_p.dist_threshold,
                 "match radius as a fraction of the gt box diagonal");
  ev->add_option("--manifest", eval_p.manifest, "manifest path");

  GenPairsParams gen;
  CLI::App* gp = app.add_subcommand("gen-pairs", "mine training pairs from annotated sequences");
  gp->add_option("--input", gen.inputs, "annotated sequence files (repeatable)")->required();
  gp->add_option("--out", gen.out, "pair file output path")->required();
  gp->add_option("--score-floor", gen.score_floor, "minimum joint score for normalization");
  gp->add_option("--balanced", gen.balanced, "subsample to a label-balanced set of this size");
  gp->add_option("--seed", gen.seed, "subsampling seed");
  gp->add_option("--manifest", gen.manifest, "manifest path");

  SynthParams synth;
  CLI::App* sy = app.add_subcommand("synth", "render a synthetic benchmark sequence");
  sy->add_option("--config", synth.config, "synth config json")->required();
  sy->add_option("--out", synth.out, "sequence output path")->required();
  sy->add_option("--seed", synth.seed, "override the config seed (>= 0)");
  sy->add_option("--seq-id", synth.seq_id, "override the sequence id");
  sy->add_option("--manifest", synth.manifest, "manifest path");

  ConvertParams conv;
  CLI::App* cv = app.add_subcommand("convert", "import a posetrack-style annotation file");
  cv->add_option("--posetrack", conv.input, "annotation json")->required();
  cv->add_option("--seq-id", conv.seq_id, "sequence id for the output")->required();
  cv->add_option("--out", conv.out, "sequence output path")->required();
  cv->add_option("--manifest", conv.manifest, "manifest path");

  std::string rerun_manifest, rerun_suffix = ".rerun";
  bool rerun_check = false;
  CLI::App* rr = app.add_subcommand("rerun", "replay a recorded run from its manifest");
  rr->add_option("--manifest", rerun_manifest, "manifest to replay")->required();
  rr->add_option("--suffix", rerun_suffix, "appended to every output path");
  rr->add_flag("--check", rerun_check, "compare rerun outputs with the originals byte-wise");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (disable_gcn) track.tracker.use_pose_matching = false;
    if (t->parsed()) return cmd_track(track);
    if (tr->parsed()) return cmd_train(train_p);
    if (ev->parsed()) return cmd_eval(eval_p);
    if (gp->parsed()) return cmd_gen_pairs(gen);
    if (sy->parsed()) return cmd_synth(synth);
    if (cv->parsed()) return cmd_convert(conv);
    if (rr->parsed()) return cmd_rerun(rerun_manifest, rerun_suffix, rerun_check);
    std::cerr << "error: no subcommand\n";
    return 2;
  } catch (const InvalidConfig& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const MatcherUnavailable& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  }
}
