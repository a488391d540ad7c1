#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <sstream>
#include <string_view>

#include "anchorpose/anchors.hpp"
#include "anchorpose/benchmark.hpp"
#include "anchorpose/errors.hpp"
#include "anchorpose/estimator.hpp"
#include "anchorpose/estimator_sim.hpp"
#include "anchorpose/losses.hpp"
#include "anchorpose/pose_log.hpp"
#include "anchorpose/report.hpp"
#include "anchorpose/text.hpp"

namespace anchorpose::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// ============================================================================
// Run configuration
// ============================================================================

struct KeySpec {
  const char* key;
  const char* default_value;
  const char* help;
  bool required = false;
};

struct CommandSpec {
  const char* name;
  const char* help;
  std::vector<KeySpec> keys;
  bool takes_estimators = false;
};

const std::vector<KeySpec> kPairKeys = {
    {"neutral_thresh_deg", "15", "neutral anchors lie closer than this to the neutral reference"},
    {"extreme_thresh_deg", "45", "hard-pair queries lie farther than this from the neutral reference"},
    {"max_gap_deg", "10", "largest anchor-query gap of an easy pair"},
    {"n_pairs", "360", "pairs drawn per subject (scope=per_subject) or in total"},
    {"scope", "per_subject", "per_subject | total"},
};

const std::vector<KeySpec> kSweepKeys = {
    {"axis", "anchor_query_gap", "anchor_query_gap | absolute_query_pose"},
    {"policy", "fixed_first", "fixed_first | nearest_within | temporal_previous | external_predicted"},
    {"threshold_deg", "5", "nearest_within acceptance threshold"},
    {"bin_width_deg", "5", "sweep bin width"},
};

std::vector<KeySpec> concat(std::initializer_list<std::vector<KeySpec>> parts) {
  std::vector<KeySpec> out;
  for (const auto& p : parts) out.insert(out.end(), p.begin(), p.end());
  return out;
}

const std::vector<CommandSpec>& command_specs() {
  static const std::vector<CommandSpec> specs = {
      {"ingest",
       "Convert canonical or BIWI pose data into a canonical pose log",
       {{"input", "", "input file or BIWI subject directory (repeatable)", true},
        {"input_format", "canonical", "canonical | biwi"},
        {"pattern", "frame_*_pose.txt", "BIWI pose file pattern; '*' is the frame id"},
        {"calibration", "", "BIWI calibration file (default <dir>/rgb.cal)"},
        {"subject", "", "BIWI subject id (default: directory name)"},
        {"invert_calibration", "false", "BIWI calibration stores rgb->depth"}}},
      {"pairs",
       "Build a hard or easy anchor-query pair set",
       concat({{{"logs", "", "canonical pose log", true}, {"kind", "hard", "hard | easy"}}, kPairKeys})},
      {"eval",
       "Score estimators on a pair set",
       {{"logs", "", "canonical pose log", true},
        {"pairs", "", "pair set written by 'pairs'", true},
        {"anchor_estimator", "", "absolute estimator supplying anchor poses"}},
       true},
      {"sweep",
       "Binned error sweep over anchor-query gap or absolute query pose",
       concat({{{"logs", "", "canonical pose log", true},
                {"anchor_estimator", "", "absolute estimator supplying anchor poses"}},
               kSweepKeys}),
       true},
      {"simulate",
       "Sample synthetic logs and run a benchmark with simulated estimators",
       concat({{{"yaw_min_deg", "-90", ""},
                {"yaw_max_deg", "90", ""},
                {"pitch_min_deg", "-40", ""},
                {"pitch_max_deg", "40", ""},
                {"roll_min_deg", "-30", ""},
                {"roll_max_deg", "30", ""},
                {"frames_per_log", "500", ""},
                {"subjects", "4", ""},
                {"step_deg", "0", "random-walk step; 0 draws frames independently"},
                {"translation_spread_mm", "50", ""},
                {"benchmark", "hard", "hard | easy | sweep_gap | sweep_pose"},
                {"anchor_estimator", "", "absolute estimator supplying anchor poses"}},
               kPairKeys, kSweepKeys}),
       true},
      {"loss",
       "Evaluate the multi-stage camera loss on stage CSV files",
       {{"pred", "", "predicted stages CSV", true},
        {"true", "", "ground-truth stages CSV", true},
        {"mode", "full", "full | no_fov | rotation_only | geodesic | translation_aux"},
        {"lambda_t", "1", ""},
        {"lambda_r", "1", ""},
        {"lambda_f", "0.5", ""},
        {"gamma", "0.6", ""}}},
      {"report",
       "Re-render CSV (and SVG for sweeps) from a JSON report",
       {{"input", "", "JSON report written by another command", true}}},
  };
  return specs;
}

const std::vector<std::string> kEstimatorFields = {"kind",           "base_deg", "slope_deg_per_deg",
                                                   "trans_noise_mm", "seed",     "predictions"};

class Settings {
 public:
  explicit Settings(const CommandSpec& spec) : spec_(spec) {
    values_["seed"] = "0";
    for (const KeySpec& k : spec.keys) values_[k.key] = k.default_value;
  }

  void set(const std::string& key, const std::string& value, const std::string& origin) {
    if (!values_.count(key) && !is_estimator_key(key)) {
      throw Error(ErrorCode::kInvalidConfig,
                  origin + ": unknown key '" + key + "' for command '" + spec_.name + "'");
    }
    values_[key] = value;
  }

  const std::string& str(const std::string& key) const {
    const std::string& v = values_.at(key);
    for (const KeySpec& k : spec_.keys) {
      if (k.required && key == k.key && v.empty()) {
        throw Error(ErrorCode::kInvalidConfig, "missing required key '" + key + "'");
      }
    }
    return v;
  }

  double num(const std::string& key) const { return parse_number(str(key), "config key '" + key + "'"); }

  std::size_t count(const std::string& key) const {
    const long long v = parse_integer(str(key), "config key '" + key + "'");
    if (v < 0) throw Error(ErrorCode::kInvalidConfig, "config key '" + key + "' must be non-negative");
    return static_cast<std::size_t>(v);
  }

  std::uint64_t seed() const {
    const long long v = parse_integer(str("seed"), "config key 'seed'");
    if (v < 0) throw Error(ErrorCode::kInvalidConfig, "seed must be non-negative");
    return static_cast<std::uint64_t>(v);
  }

  bool flag(const std::string& key) const {
    const std::string& v = str(key);
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw Error(ErrorCode::kInvalidConfig, "config key '" + key + "' must be true or false");
  }

  bool has_estimators() const {
    return std::any_of(values_.begin(), values_.end(), [](const auto& kv) { return kv.first.rfind("estimator.", 0) == 0; });
  }

  /// estimator id -> field -> value
  std::map<std::string, std::map<std::string, std::string>> estimators() const {
    std::map<std::string, std::map<std::string, std::string>> out;
    for (const auto& [key, value] : values_) {
      if (key.rfind("estimator.", 0) != 0) continue;
      const std::size_t dot = key.rfind('.');
      out[key.substr(10, dot - 10)][key.substr(dot + 1)] = value;
    }
    return out;
  }

  std::vector<std::pair<std::string, std::string>> echo() const { return {values_.begin(), values_.end()}; }

 private:
  bool is_estimator_key(const std::string& key) const {
    if (!spec_.takes_estimators || key.rfind("estimator.", 0) != 0) return false;
    const std::size_t dot = key.rfind('.');
    if (dot <= 10) return false;
    const std::string id = key.substr(10, dot - 10);
    const bool id_ok = std::all_of(id.begin(), id.end(), [](char c) {
      return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
    });
    return id_ok && std::find(kEstimatorFields.begin(), kEstimatorFields.end(), key.substr(dot + 1)) !=
                        kEstimatorFields.end();
  }

  const CommandSpec& spec_;
  std::map<std::string, std::string> values_;
};

std::pair<std::string, std::string> split_assignment(std::string_view text, const std::string& origin) {
  const std::size_t eq = text.find('=');
  if (eq == std::string_view::npos) {
    throw Error(ErrorCode::kParseError, origin + ": expected key=value, got '" + std::string(text) + "'");
  }
  const std::string key(trim(text.substr(0, eq)));
  if (key.empty()) throw Error(ErrorCode::kParseError, origin + ": empty key");
  return {key, std::string(trim(text.substr(eq + 1)))};
}

void load_config_file(const fs::path& path, Settings& settings) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open config file '" + path.string() + "'");
  std::string line;
  std::size_t line_no = 0;
  std::map<std::string, std::size_t> seen;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const std::string origin = path.string() + ":" + std::to_string(line_no);
    auto [key, value] = split_assignment(t, origin);
    if (const auto it = seen.find(key); it != seen.end()) {
      throw Error(ErrorCode::kParseError, origin + ": duplicate key '" + key + "' (first set on line " +
                                              std::to_string(it->second) + ")");
    }
    seen[key] = line_no;
    settings.set(key, value, origin);
  }
}

// ============================================================================
// Helpers
// ============================================================================

struct Output {
  fs::path dir;
  std::string format;
};

void write_file(const fs::path& path, const std::string& content) {
  if (!path.parent_path().empty()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write '" + path.string() + "'");
  out << content;
  if (!out) throw Error(ErrorCode::kIoError, "failed writing '" + path.string() + "'");
}

ReportContext make_context(const std::string& command, const Settings& settings) {
  ReportContext ctx;
  ctx.command = command;
  ctx.seed = settings.seed();
  ctx.config = settings.echo();
  return ctx;
}

void add_input(ReportContext& ctx, const fs::path& path) {
  if (fs::is_directory(path)) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(path)) {
      if (entry.is_regular_file()) files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    for (const fs::path& f : files) ctx.inputs.push_back({f.string(), sha256_file(f)});
  } else {
    ctx.inputs.push_back({path.string(), sha256_file(path)});
  }
}

std::vector<PoseLog> load_logs(const Settings& settings, ReportContext& ctx) {
  const fs::path path = settings.str("logs");
  add_input(ctx, path);
  std::vector<PoseLog> logs = ingest_canonical_all(path);
  if (logs.empty()) throw Error(ErrorCode::kEmptyInput, "'" + path.string() + "' holds no frames");
  return logs;
}

PairOptions pair_options(const Settings& s) {
  PairOptions o;
  o.neutral_thresh_deg = s.num("neutral_thresh_deg");
  o.extreme_thresh_deg = s.num("extreme_thresh_deg");
  o.max_gap_deg = s.num("max_gap_deg");
  o.n_pairs = s.count("n_pairs");
  o.scope = parse_pair_scope(s.str("scope"));
  o.seed = s.seed();
  return o;
}

AnchorPolicy anchor_policy(const Settings& s) {
  AnchorPolicy p;
  p.kind = parse_anchor_kind(s.str("policy"));
  p.threshold_deg = s.num("threshold_deg");
  p.external_source = s.str("anchor_estimator");
  p.validate();
  return p;
}

struct EstimatorSet {
  std::vector<std::unique_ptr<Estimator>> owned;
  std::vector<const Estimator*> all;
  const Estimator* anchor = nullptr;
};

EstimatorSet build_estimators(const Settings& settings, std::span<const PoseLog> logs, ReportContext& ctx) {
  EstimatorSet set;
  for (const auto& [id, fields] : settings.estimators()) {
    auto field = [&](const std::string& name, const std::string& fallback) {
      const auto it = fields.find(name);
      return it == fields.end() ? fallback : it->second;
    };
    const std::string origin = "estimator '" + id + "'";
    const std::string kind = field("kind", "");
    if (kind == "table") {
      const fs::path path = field("predictions", "");
      if (path.empty()) throw Error(ErrorCode::kInvalidConfig, origin + ": table estimators need 'predictions'");
      add_input(ctx, path);
      const std::string default_subject = logs.size() == 1 ? logs[0].subject_id : std::string();
      set.owned.push_back(std::make_unique<TableEstimator>(
          id, read_predictions_csv(path, default_subject, logs.empty() ? "" : logs[0].frame_tag)));
    } else if (kind == "absolute" || kind == "relative") {
      if (fields.count("predictions")) {
        throw Error(ErrorCode::kInvalidConfig, origin + ": 'predictions' only applies to kind=table");
      }
      NoiseModel nm;
      nm.base_deg = parse_number(field("base_deg", "0"), origin + " base_deg");
      nm.slope_deg_per_deg = parse_number(field("slope_deg_per_deg", "0"), origin + " slope_deg_per_deg");
      nm.trans_noise_mm = parse_number(field("trans_noise_mm", "0"), origin + " trans_noise_mm");
      const long long seed = parse_integer(field("seed", std::to_string(settings.seed())), origin + " seed");
      if (seed < 0) throw Error(ErrorCode::kInvalidConfig, origin + ": seed must be non-negative");
      nm.seed = static_cast<std::uint64_t>(seed);
      if (kind == "absolute") {
        set.owned.push_back(std::make_unique<SimulatedAbsoluteEstimator>(id, nm));
      } else {
        set.owned.push_back(std::make_unique<SimulatedRelativeEstimator>(id, nm));
      }
    } else {
      throw Error(ErrorCode::kInvalidConfig, origin + ": kind must be absolute, relative or table");
    }
  }
  for (const auto& e : set.owned) set.all.push_back(e.get());
  if (set.all.empty()) throw Error(ErrorCode::kInvalidConfig, "no estimators configured (estimator.<id>.kind)");

  const std::string anchor_id = settings.str("anchor_estimator");
  if (!anchor_id.empty()) {
    const auto it = std::find_if(set.all.begin(), set.all.end(), [&](const Estimator* e) { return e->id() == anchor_id; });
    if (it == set.all.end()) {
      throw Error(ErrorCode::kInvalidConfig, "anchor_estimator '" + anchor_id + "' is not configured");
    }
    if ((*it)->kind() != EstimatorKind::kAbsolute) {
      throw Error(ErrorCode::kInvalidConfig, "anchor_estimator '" + anchor_id + "' must be absolute");
    }
    set.anchor = *it;
  }
  return set;
}

std::string svg_title(const SweepReport& r) {
  return r.axis == SweepAxis::kAnchorQueryGap ? "MAE vs anchor-query gap" : "MAE vs absolute query pose";
}

void emit(const Output& o, std::ostream& out, const std::string& csv, const json& envelope) {
  out << (o.format == "json" ? dump_json(envelope) : csv);
}

// ============================================================================
// Commands
// ============================================================================

void cmd_ingest(const Settings& s, const Output& o, std::ostream& out) {
  ReportContext ctx = make_context("ingest", s);
  const std::string format = s.str("input_format");
  std::vector<PoseLog> logs;
  for (const std::string& item : split(s.str("input"), ',')) {
    const fs::path input(std::string(trim(item)));
    if (format == "canonical") {
      add_input(ctx, input);
      for (PoseLog& log : ingest_canonical_all(input)) logs.push_back(std::move(log));
    } else if (format == "biwi") {
      BiwiOptions opt;
      opt.pose_pattern = s.str("pattern");
      opt.calibration = s.str("calibration");
      opt.subject_id = s.str("subject");
      opt.invert_calibration = s.flag("invert_calibration");
      PoseLog log = ingest_biwi(input, opt);
      add_input(ctx, input);
      logs.push_back(std::move(log));
    } else {
      throw Error(ErrorCode::kInvalidConfig, "input_format must be canonical or biwi");
    }
  }
  std::sort(logs.begin(), logs.end(), [](const PoseLog& a, const PoseLog& b) { return a.subject_id < b.subject_id; });
  for (std::size_t i = 1; i < logs.size(); ++i) {
    if (logs[i].subject_id == logs[i - 1].subject_id) {
      throw Error(ErrorCode::kInvariantViolation, "subject '" + logs[i].subject_id + "' appears in several inputs");
    }
  }

  std::ostringstream canonical;
  write_canonical(canonical, logs);
  write_file(o.dir / "poses.csv", canonical.str());

  std::size_t frames = 0;
  double lo[3] = {INFINITY, INFINITY, INFINITY}, hi[3] = {-INFINITY, -INFINITY, -INFINITY};
  for (const PoseLog& log : logs) {
    for (const FrameRecord& f : log.frames) {
      ++frames;
      const EulerAnglesd e = euler_from_rotation(f.pose.rotation);
      const double v[3] = {e.yaw, e.pitch, e.roll};
      for (int a = 0; a < 3; ++a) {
        lo[a] = std::min(lo[a], v[a]);
        hi[a] = std::max(hi[a], v[a]);
      }
    }
  }
  if (frames == 0) {
    for (int a = 0; a < 3; ++a) lo[a] = hi[a] = 0.0;
  }
  json stats = {{"subjects", logs.size()},     {"frames", frames},           {"yaw_min_deg", lo[0]},
                {"yaw_max_deg", hi[0]},        {"pitch_min_deg", lo[1]},     {"pitch_max_deg", hi[1]},
                {"roll_min_deg", lo[2]},       {"roll_max_deg", hi[2]}};
  const json envelope = make_envelope(ctx, stats, {{"output", "poses.csv"}});
  write_file(o.dir / "ingest.json", dump_json(envelope));

  std::ostringstream csv;
  csv << "subjects,frames,yaw_min_deg,yaw_max_deg,pitch_min_deg,pitch_max_deg,roll_min_deg,roll_max_deg\n"
      << logs.size() << ',' << frames;
  for (int a = 0; a < 3; ++a) csv << ',' << format_fixed(lo[a], 3) << ',' << format_fixed(hi[a], 3);
  csv << '\n';
  emit(o, out, csv.str(), envelope);
}

void cmd_pairs(const Settings& s, const Output& o, std::ostream& out) {
  ReportContext ctx = make_context("pairs", s);
  const std::vector<PoseLog> logs = load_logs(s, ctx);
  const std::string kind = s.str("kind");
  if (kind != "hard" && kind != "easy") throw Error(ErrorCode::kInvalidConfig, "kind must be hard or easy");
  const PairOptions opt = pair_options(s);
  const PairSet set = kind == "hard" ? build_hard_pairs(logs, opt) : build_easy_pairs(logs, opt);

  std::ostringstream csv;
  write_pairs_csv(csv, set);
  write_file(o.dir / "pairs.csv", csv.str());
  const json envelope = make_envelope(
      ctx, to_json(set.stats),
      {{"pairs", {{"name", set.name}, {"seed", set.seed}, {"skipped_subjects", set.skipped_subjects}}}});
  write_file(o.dir / "pairs.json", dump_json(envelope));
  emit(o, out, csv.str(), envelope);
}

void cmd_eval(const Settings& s, const Output& o, std::ostream& out) {
  ReportContext ctx = make_context("eval", s);
  const std::vector<PoseLog> logs = load_logs(s, ctx);
  const fs::path pairs_path = s.str("pairs");
  add_input(ctx, pairs_path);
  std::ifstream pin(pairs_path);
  if (!pin) throw Error(ErrorCode::kIoError, "cannot open '" + pairs_path.string() + "'");
  const PairSet set = read_pairs_csv(pin, pairs_path.string());
  const EstimatorSet est = build_estimators(s, logs, ctx);

  PairEvalOptions opt;
  opt.anchor_estimator = est.anchor;
  NamedMetrics metrics;
  for (const Estimator* e : est.all) metrics.emplace_back(e->id(), evaluate_estimator(set, logs, *e, opt));

  std::ostringstream csv;
  write_metrics_csv(csv, set.name, metrics);
  write_file(o.dir / "metrics.csv", csv.str());
  const json envelope = make_envelope(ctx, to_json(compute_pair_stats(set.pairs)),
                                      {{"benchmark", set.name}, {"metrics", to_json(metrics)}});
  write_file(o.dir / "eval.json", dump_json(envelope));
  emit(o, out, csv.str(), envelope);
}

void write_sweep_outputs(const SweepReport& report, const Output& o, std::string& csv_out) {
  std::ostringstream csv;
  write_sweep_csv(csv, report);
  csv_out = csv.str();
  write_file(o.dir / "sweep.csv", csv_out);
  write_file(o.dir / "sweep.svg", render_sweep_svg(report, SvgOptions{720, 480, svg_title(report)}));
}

json sweep_stats(const SweepReport& r) {
  return {{"paired", r.paired}, {"unpaired", r.unpaired}, {"bins", r.bins.size()}};
}

void cmd_sweep(const Settings& s, const Output& o, std::ostream& out) {
  ReportContext ctx = make_context("sweep", s);
  const std::vector<PoseLog> logs = load_logs(s, ctx);
  const EstimatorSet est = build_estimators(s, logs, ctx);
  SweepOptions opt;
  opt.axis = parse_sweep_axis(s.str("axis"));
  opt.bin_width_deg = s.num("bin_width_deg");
  opt.anchor_estimator = est.anchor;
  const SweepReport report = sweep(logs, est.all, anchor_policy(s), opt);

  std::string csv;
  write_sweep_outputs(report, o, csv);
  const json envelope = make_envelope(ctx, sweep_stats(report), {{"sweep", to_json(report)}});
  write_file(o.dir / "sweep.json", dump_json(envelope));
  emit(o, out, csv, envelope);
}

void cmd_simulate(Settings& s, const Output& o, std::ostream& out) {
  if (!s.has_estimators()) {
    // Illustrative defaults: an absolute estimator degrading with pose
    // extremity and a relative one degrading with the anchor-query gap.
    s.set("estimator.absolute.kind", "absolute", "default");
    s.set("estimator.absolute.base_deg", "2", "default");
    s.set("estimator.absolute.slope_deg_per_deg", "0.1", "default");
    s.set("estimator.relative.kind", "relative", "default");
    s.set("estimator.relative.base_deg", "1", "default");
    s.set("estimator.relative.slope_deg_per_deg", "0.03", "default");
  }
  ReportContext ctx = make_context("simulate", s);

  PoseSampler sampler;
  sampler.yaw = {s.num("yaw_min_deg"), s.num("yaw_max_deg")};
  sampler.pitch = {s.num("pitch_min_deg"), s.num("pitch_max_deg")};
  sampler.roll = {s.num("roll_min_deg"), s.num("roll_max_deg")};
  sampler.frames_per_log = s.count("frames_per_log");
  sampler.subjects = s.count("subjects");
  sampler.step_deg = s.num("step_deg");
  sampler.translation_spread_mm = s.num("translation_spread_mm");
  sampler.seed = s.seed();
  const std::vector<PoseLog> logs = sample_logs(sampler);
  std::ostringstream poses;
  write_canonical(poses, logs);
  write_file(o.dir / "poses.csv", poses.str());

  const EstimatorSet est = build_estimators(s, logs, ctx);
  EndToEndConfig cfg;
  cfg.benchmark = parse_benchmark_kind(s.str("benchmark"));
  cfg.pairs = pair_options(s);
  cfg.bin_width_deg = s.num("bin_width_deg");
  cfg.anchor_estimator = est.anchor;
  const bool is_sweep = cfg.benchmark == BenchmarkKind::kSweepGap || cfg.benchmark == BenchmarkKind::kSweepPose;
  if (is_sweep) cfg.policy = anchor_policy(s);
  const EndToEndResult result = run_end_to_end(logs, est.all, cfg);

  std::string csv;
  json stats, results = {{"benchmark", to_string(cfg.benchmark)}};
  if (result.sweep) {
    write_sweep_outputs(*result.sweep, o, csv);
    stats = sweep_stats(*result.sweep);
    results["sweep"] = to_json(*result.sweep);
  } else {
    std::ostringstream pairs_csv, metrics_csv;
    write_pairs_csv(pairs_csv, *result.pairs);
    write_file(o.dir / "pairs.csv", pairs_csv.str());
    write_metrics_csv(metrics_csv, result.pairs->name, result.metrics);
    csv = metrics_csv.str();
    write_file(o.dir / "metrics.csv", csv);
    stats = to_json(result.pairs->stats);
    results["metrics"] = to_json(result.metrics);
  }
  stats["frames"] = sampler.frames_per_log * sampler.subjects;
  stats["poses_sha256"] = sha256_hex(poses.str());
  const json envelope = make_envelope(ctx, stats, results);
  write_file(o.dir / "simulate.json", dump_json(envelope));
  emit(o, out, csv, envelope);
}

constexpr const char* kStageCsvHeader =
    "stage,tx,ty,tz,qw,qx,qy,qz,fov_h_deg,fov_w_deg,anchor_fov_h_deg,anchor_fov_w_deg";

struct StageRow {
  int stage = 0;
  CameraPosed pose;
  FovPair<double> anchor_fov;
};

std::map<int, StageRow> read_stage_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line) || trim(line) != kStageCsvHeader) {
    throw Error(ErrorCode::kParseError, path.string() + ":1: expected header '" + kStageCsvHeader + "'");
  }
  std::map<int, StageRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const std::string where = path.string() + ":" + std::to_string(line_no);
    const std::vector<std::string> f = split(trim(line), ',');
    if (f.size() != 12) throw Error(ErrorCode::kParseError, where + ": expected 12 fields");
    double v[11];
    for (int i = 0; i < 11; ++i) v[i] = parse_number(f[i + 1], where);
    StageRow r;
    r.stage = static_cast<int>(parse_integer(f[0], where));
    r.pose.t = {v[0], v[1], v[2]};
    r.pose.q = Rotationd(v[3], v[4], v[5], v[6]);
    r.pose.fov_h = deg_to_rad(v[7]);
    r.pose.fov_w = deg_to_rad(v[8]);
    r.anchor_fov = {deg_to_rad(v[9]), deg_to_rad(v[10])};
    if (!rows.emplace(r.stage, r).second) {
      throw Error(ErrorCode::kParseError, where + ": duplicate stage " + std::to_string(r.stage));
    }
  }
  return rows;
}

void cmd_loss(const Settings& s, const Output& o, std::ostream& out) {
  ReportContext ctx = make_context("loss", s);
  const fs::path pred_path = s.str("pred"), true_path = s.str("true");
  add_input(ctx, pred_path);
  add_input(ctx, true_path);
  const auto pred = read_stage_csv(pred_path);
  const auto truth = read_stage_csv(true_path);
  if (pred.size() != truth.size()) {
    throw Error(ErrorCode::kStageCountMismatch, "prediction has " + std::to_string(pred.size()) +
                                                    " stages, ground truth has " + std::to_string(truth.size()));
  }
  std::vector<StagePredictiond> stages;
  for (const auto& [k, p] : pred) {
    const auto t = truth.find(k);
    if (t == truth.end()) {
      throw Error(ErrorCode::kStageCountMismatch, "stage " + std::to_string(k) + " has no ground truth");
    }
    stages.push_back({k, p.pose, t->second.pose, p.anchor_fov, t->second.anchor_fov});
  }
  LossConfigd cfg;
  cfg.lambda_t = s.num("lambda_t");
  cfg.lambda_r = s.num("lambda_r");
  cfg.lambda_f = s.num("lambda_f");
  cfg.gamma = s.num("gamma");
  cfg.mode = parse_loss_mode(s.str("mode"));
  const LossBreakdown<double> loss = loss_cam(stages, cfg);

  std::ostringstream csv;
  write_loss_csv(csv, loss);
  write_file(o.dir / "loss.csv", csv.str());
  const json envelope = make_envelope(ctx, {{"stages", loss.stages.size()}}, {{"loss", to_json(loss)}});
  write_file(o.dir / "loss.json", dump_json(envelope));
  emit(o, out, csv.str(), envelope);
}

MetricReport metric_from_json(const json& j) {
  MetricReport m;
  m.n = j.at("n").get<std::size_t>();
  m.yaw_mae_deg = j.at("yaw_mae_deg").get<double>();
  m.pitch_mae_deg = j.at("pitch_mae_deg").get<double>();
  m.roll_mae_deg = j.at("roll_mae_deg").get<double>();
  m.mae_deg = j.at("mae_deg").get<double>();
  m.geodesic_mae_deg = j.at("geodesic_mae_deg").get<double>();
  if (!j.at("translation").is_null()) {
    const json& t = j.at("translation");
    m.translation = TranslationMetrics{t.at("x_mae_mm").get<double>(), t.at("y_mae_mm").get<double>(),
                                       t.at("z_mae_mm").get<double>(), t.at("l2_mean_mm").get<double>()};
  }
  return m;
}

SweepReport sweep_from_json(const json& j) {
  SweepReport r;
  r.axis = parse_sweep_axis(j.at("axis").get<std::string>());
  r.bin_width_deg = j.at("bin_width_deg").get<double>();
  r.estimator_ids = j.at("estimators").get<std::vector<std::string>>();
  r.paired = j.at("paired").get<std::size_t>();
  r.unpaired = j.at("unpaired").get<std::size_t>();
  for (const json& b : j.at("bins")) {
    SweepBin bin;
    bin.lo_deg = b.at("lo_deg").get<double>();
    bin.hi_deg = b.at("hi_deg").get<double>();
    bin.pair_count = b.at("pair_count").get<std::size_t>();
    for (const std::string& id : r.estimator_ids) bin.per_estimator.push_back(metric_from_json(b.at("metrics").at(id)));
    r.bins.push_back(std::move(bin));
  }
  return r;
}

void cmd_report(const Settings& s, const Output& o, std::ostream& out) {
  const fs::path input = s.str("input");
  std::ifstream in(input);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open '" + input.string() + "'");
  json doc;
  try {
    doc = json::parse(in);
    if (doc.at("format_version").get<int>() != kReportFormatVersion) {
      throw Error(ErrorCode::kParseError, input.string() + ": unsupported format_version");
    }
    const json& results = doc.at("results");
    std::ostringstream csv;
    if (results.contains("sweep")) {
      std::string text;
      write_sweep_outputs(sweep_from_json(results.at("sweep")), o, text);
      csv << text;
    } else if (results.contains("metrics")) {
      NamedMetrics metrics;
      for (const json& m : results.at("metrics")) {
        metrics.emplace_back(m.at("estimator").get<std::string>(), metric_from_json(m));
      }
      write_metrics_csv(csv, results.at("benchmark").get<std::string>(), metrics);
      write_file(o.dir / "metrics.csv", csv.str());
    } else {
      throw Error(ErrorCode::kInvalidConfig, input.string() + ": report has no sweep or metrics results");
    }
    emit(o, out, csv.str(), doc);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParseError, input.string() + ": " + e.what());
  }
}

}  // namespace

// ============================================================================
// Entry point
// ============================================================================

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Anchor-based relative head pose benchmarking toolkit", "anchorpose"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string seed_flag, config_path, out_dir = ".", format = "csv";
  std::vector<std::string> overrides, preds;
  app.add_option("--seed", seed_flag, "random seed (overrides config)");
  app.add_option("--config", config_path, "flat key=value config file");
  app.add_option("--out", out_dir, "output directory")->capture_default_str();
  app.add_option("--format", format, "stdout report format")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
  app.add_option("--set", overrides, "override a config key (key=value)");

  struct Sub {
    const CommandSpec* spec;
    CLI::App* app;
    std::map<std::string, std::vector<std::string>> values;
  };
  std::vector<std::unique_ptr<Sub>> subs;
  for (const CommandSpec& spec : command_specs()) {
    auto sub = std::make_unique<Sub>();
    sub->spec = &spec;
    sub->app = app.add_subcommand(spec.name, spec.help);
    for (const KeySpec& k : spec.keys) {
      std::string flag = std::string("--") + k.key;
      std::replace(flag.begin(), flag.end(), '_', '-');
      std::string help = k.help;
      if (*k.default_value) help += (help.empty() ? "" : " ") + std::string("[default: ") + k.default_value + "]";
      sub->app->add_option(flag, sub->values[k.key], help);
    }
    if (spec.takes_estimators) {
      sub->app->add_option("--pred", preds, "table estimator from a predictions CSV (id=path)");
    }
    subs.push_back(std::move(sub));
  }

  std::string command = "anchorpose";
  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);

    const Sub* chosen = nullptr;
    for (const auto& s : subs) {
      if (s->app->parsed()) chosen = s.get();
    }
    command = chosen->spec->name;
    Settings settings(*chosen->spec);
    if (!config_path.empty()) load_config_file(config_path, settings);
    for (const std::string& o : overrides) {
      const auto [k, v] = split_assignment(o, "--set");
      settings.set(k, v, "--set");
    }
    for (const std::string& p : preds) {
      const auto [id, path] = split_assignment(p, "--pred");
      settings.set("estimator." + id + ".kind", "table", "--pred");
      settings.set("estimator." + id + ".predictions", path, "--pred");
    }
    for (const auto& [key, vals] : chosen->values) {
      if (vals.empty()) continue;
      std::string joined;
      for (std::size_t i = 0; i < vals.size(); ++i) joined += (i ? "," : "") + vals[i];
      settings.set(key, joined, "flag");
    }
    if (!seed_flag.empty()) settings.set("seed", seed_flag, "--seed");

    const Output output{out_dir, format};
    if (command == "ingest") cmd_ingest(settings, output, out);
    else if (command == "pairs") cmd_pairs(settings, output, out);
    else if (command == "eval") cmd_eval(settings, output, out);
    else if (command == "sweep") cmd_sweep(settings, output, out);
    else if (command == "simulate") cmd_simulate(settings, output, out);
    else if (command == "loss") cmd_loss(settings, output, out);
    else cmd_report(settings, output, out);
    return kExitOk;
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    for (const auto& s : subs) {
      if (s->app->parsed()) {
        out << s->app->help();
      }
    }
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error code=UsageError command=" << command << " message=\"" << e.what() << "\"\n";
    return kExitInput;
  } catch (const Error& e) {
    err << "error code=" << to_string(e.code()) << " command=" << command << " message=\"" << e.what() << "\"\n";
    return kExitInput;
  } catch (const fs::filesystem_error& e) {
    err << "error code=IoError command=" << command << " message=\"" << e.what() << "\"\n";
    return kExitInput;
  } catch (const std::exception& e) {
    err << "error code=Internal command=" << command << " message=\"" << e.what() << "\"\n";
    return kExitInternal;
  }
}

}  // namespace anchorpose::cli
