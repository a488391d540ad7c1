#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "anchorpose/benchmark.hpp"
#include "anchorpose/estimator.hpp"
#include "anchorpose/pose_log.hpp"
#include "anchorpose/report.hpp"
#include "cli.hpp"
#include "test_support.hpp"

namespace anchorpose {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Result {
  int code = 0;
  std::string out;
  std::string err;
};

Result run_cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  Result r;
  r.code = cli::run(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void spit(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

std::vector<std::string> csv_fields(const std::string& line) { return split(line, ','); }

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

// ---------------------------------------------------------------------------
// ingest
// ---------------------------------------------------------------------------

TEST(CliIngest, CanonicalRoundTripIsByteIdentical) {
  const fs::path dir = testing::scratch_dir("cli_ingest");
  Rng rng(60);
  std::vector<PoseLog> logs{testing::random_log(rng, "A", 30), testing::random_log(rng, "B", 12)};
  write_canonical(dir / "in.csv", logs);
  const Result r = run_cli({"--out", (dir / "out").string(), "ingest", "--input", (dir / "in.csv").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(slurp(dir / "out" / "poses.csv"), slurp(dir / "in.csv"));
  const auto l = lines_of(r.out);
  ASSERT_EQ(l.size(), 2u);
  EXPECT_EQ(l[0], "subjects,frames,yaw_min_deg,yaw_max_deg,pitch_min_deg,pitch_max_deg,roll_min_deg,roll_max_deg");
  EXPECT_EQ(csv_fields(l[1])[0], "2");
  EXPECT_EQ(csv_fields(l[1])[1], "42");

  const json doc = json::parse(slurp(dir / "out" / "ingest.json"));
  EXPECT_EQ(doc["command"], "ingest");
  EXPECT_EQ(doc["inputs"][0]["sha256"], sha256_file(dir / "in.csv"));
}

TEST(CliIngest, BiwiFixtureMatchesAdapter) {
  const fs::path dir = testing::scratch_dir("cli_biwi");
  const testing::BiwiFixture fx = testing::make_biwi_fixture();
  testing::write_biwi_fixture(dir / "07", fx);
  const Result r = run_cli({"--out", (dir / "out").string(), "ingest", "--input", (dir / "07").string(),
                            "--input-format", "biwi"});
  ASSERT_EQ(r.code, 0) << r.err;
  std::ostringstream expected;
  write_canonical(expected, {ingest_biwi(dir / "07")});
  EXPECT_EQ(slurp(dir / "out" / "poses.csv"), expected.str());

  const PoseLog log = ingest_canonical(dir / "out" / "poses.csv");
  ASSERT_EQ(log.frames.size(), 3u);
  EXPECT_EQ(log.frame_tag, "rgb");
  EXPECT_EQ(log.subject_id, "07");
  for (std::size_t i = 0; i < 3; ++i) {
    const Eigen::Matrix3d r_rgb = fx.cal_r * fx.frame_r[i];
    const Eigen::Vector3d t_rgb = fx.cal_r * fx.frame_t[i] + fx.cal_t;
    EXPECT_LT((log.frames[i].pose.rotation.matrix() - r_rgb).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_LT((log.frames[i].pose.translation - t_rgb).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(CliIngest, MissingCalibrationExitsTwoAndNamesFile) {
  const fs::path dir = testing::scratch_dir("cli_nocal");
  testing::write_biwi_fixture(dir / "03", testing::make_biwi_fixture(), false);
  const Result r = run_cli({"--out", (dir / "out").string(), "ingest", "--input", (dir / "03").string(),
                            "--input-format", "biwi"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("code=MissingCalibration"), std::string::npos) << r.err;
  EXPECT_NE(r.err.find("rgb.cal"), std::string::npos) << r.err;
  EXPECT_FALSE(fs::exists(dir / "out" / "poses.csv"));
}

TEST(CliIngest, MalformedCanonicalExitsTwo) {
  const fs::path dir = testing::scratch_dir("cli_bad");
  spit(dir / "bad.csv", "#poselog v1 frame_tag=rgb\nsubject_id,frame_id,index,qw,qx,qy,qz,tx_mm,ty_mm,tz_mm\n"
                        "S,f0,0,0.9,0,0,0,0,0,0\n");
  const Result r = run_cli({"--out", dir.string(), "ingest", "--input", (dir / "bad.csv").string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("command=ingest"), std::string::npos);
}

// ---------------------------------------------------------------------------
// pairs / eval / sweep
// ---------------------------------------------------------------------------

fs::path simulated_poses(const fs::path& dir, const std::string& extra_seed = "3") {
  const Result r = run_cli({"--out", dir.string(), "--seed", extra_seed, "simulate", "--frames-per-log", "400",
                            "--subjects", "3"});
  EXPECT_EQ(r.code, 0) << r.err;
  return dir / "poses.csv";
}

TEST(CliEval, PredictionsEqualToTruthGiveZeros) {
  const fs::path dir = testing::scratch_dir("cli_eval");
  const fs::path poses = simulated_poses(dir / "sim");
  Result r = run_cli({"--out", (dir / "p").string(), "pairs", "--logs", poses.string(), "--n-pairs", "40"});
  ASSERT_EQ(r.code, 0) << r.err;

  PredictionMap truth;
  for (const PoseLog& log : ingest_canonical_all(poses)) {
    for (const FrameRecord& f : log.frames) truth[{log.subject_id, f.frame_id}] = Prediction{f.pose, true};
  }
  {
    std::ofstream out(dir / "truth.csv");
    write_predictions_csv(out, truth);
  }
  r = run_cli({"--out", (dir / "e").string(), "eval", "--logs", poses.string(), "--pairs",
               (dir / "p" / "pairs.csv").string(), "--pred", "truth=" + (dir / "truth.csv").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto l = lines_of(slurp(dir / "e" / "metrics.csv"));
  ASSERT_EQ(l.size(), 2u);
  const auto f = csv_fields(l[1]);
  EXPECT_EQ(f[0], "hard");
  EXPECT_EQ(f[1], "truth");
  EXPECT_EQ(f[2], "120");
  for (std::size_t i = 3; i < f.size(); ++i) EXPECT_EQ(std::stod(f[i]), 0.0) << i;
  EXPECT_EQ(r.out, slurp(dir / "e" / "metrics.csv"));

  const json doc = json::parse(slurp(dir / "e" / "eval.json"));
  EXPECT_EQ(doc["results"]["metrics"][0]["mae_deg"], 0.0);
  EXPECT_EQ(doc["config"]["estimator.truth.kind"], "table");
  EXPECT_EQ(doc["inputs"].size(), 3u);
}

TEST(CliEval, MissingPredictionExitsTwo) {
  const fs::path dir = testing::scratch_dir("cli_eval_missing");
  const fs::path poses = simulated_poses(dir / "sim");
  ASSERT_EQ(run_cli({"--out", dir.string(), "pairs", "--logs", poses.string(), "--n-pairs", "5"}).code, 0);
  spit(dir / "empty.csv", "subject_id,query_id,qw,qx,qy,qz\n");
  const Result r = run_cli({"--out", dir.string(), "eval", "--logs", poses.string(), "--pairs",
                            (dir / "pairs.csv").string(), "--pred", "x=" + (dir / "empty.csv").string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("code=MissingPrediction"), std::string::npos) << r.err;
}

TEST(CliSweep, SimulatorFixtureGivesMonotoneCurve) {
  const fs::path dir = testing::scratch_dir("cli_sweep");
  const Result sim = run_cli({"--out", (dir / "sim").string(), "simulate", "--frames-per-log", "1000"});
  ASSERT_EQ(sim.code, 0) << sim.err;
  const Result r = run_cli({"--out", (dir / "s").string(), "--set", "estimator.rel.kind=relative", "--set",
                            "estimator.rel.base_deg=0.5", "--set", "estimator.rel.slope_deg_per_deg=0.05", "sweep",
                            "--logs", (dir / "sim" / "poses.csv").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const json doc = json::parse(slurp(dir / "s" / "sweep.json"));
  std::vector<double> idx, mae;
  std::size_t b = 0;
  for (const json& bin : doc["results"]["sweep"]["bins"]) {
    if (bin["pair_count"].get<std::size_t>() >= 30) {
      idx.push_back(static_cast<double>(b));
      mae.push_back(bin["metrics"]["rel"]["mae_deg"].get<double>());
    }
    ++b;
  }
  ASSERT_GE(idx.size(), 10u);
  EXPECT_GT(spearman_correlation(idx, mae), 0.9);
  const std::string svg = slurp(dir / "s" / "sweep.svg");
  EXPECT_NE(svg.find("class=\"count\""), std::string::npos);
  EXPECT_NE(svg.find("data-estimator=\"rel\""), std::string::npos);
}

TEST(CliSweep, PoseAxisNeedsNearestWithin) {
  const fs::path dir = testing::scratch_dir("cli_sweep_bad");
  const fs::path poses = simulated_poses(dir / "sim");
  const Result r = run_cli({"--out", dir.string(), "--set", "estimator.rel.kind=relative", "sweep", "--logs",
                            poses.string(), "--axis", "absolute_query_pose"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("code=InvalidConfig"), std::string::npos);
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

TEST(CliSimulate, SameSeedTwiceGivesIdenticalFiles) {
  const fs::path dir = testing::scratch_dir("cli_sim");
  for (const char* bench : {"hard", "sweep_pose"}) {
    std::vector<std::string> extra;
    if (std::string(bench) == "sweep_pose") extra = {"--policy", "nearest_within", "--step-deg", "3"};
    for (const char* sub : {"a", "b"}) {
      std::vector<std::string> args{"--out", (dir / bench / sub).string(), "--seed", "17", "simulate",
                                    "--benchmark", bench, "--frames-per-log", "300"};
      args.insert(args.end(), extra.begin(), extra.end());
      const Result r = run_cli(args);
      ASSERT_EQ(r.code, 0) << r.err;
    }
    std::size_t files = 0;
    for (const auto& entry : fs::directory_iterator(dir / bench / "a")) {
      EXPECT_EQ(slurp(entry.path()), slurp(dir / bench / "b" / entry.path().filename())) << entry.path();
      ++files;
    }
    EXPECT_GE(files, 3u);
  }
  ASSERT_EQ(run_cli({"--out", (dir / "c").string(), "--seed", "18", "simulate", "--frames-per-log", "300"}).code, 0);
  EXPECT_NE(slurp(dir / "c" / "poses.csv"), slurp(dir / "hard" / "a" / "poses.csv"));
}

TEST(CliSimulate, ConfigFileAndFlagPrecedence) {
  const fs::path dir = testing::scratch_dir("cli_cfg");
  spit(dir / "run.cfg", "# simulation\nsubjects = 2\nframes_per_log=50\nseed=4\n");
  const Result r = run_cli({"--out", (dir / "o").string(), "--config", (dir / "run.cfg").string(), "--format", "json",
                            "simulate", "--frames-per-log", "60"});
  ASSERT_EQ(r.code, 0) << r.err;
  const json doc = json::parse(r.out);
  EXPECT_EQ(doc["seed"], 4);
  EXPECT_EQ(doc["config"]["subjects"], "2");
  EXPECT_EQ(doc["config"]["frames_per_log"], "60");
  EXPECT_EQ(doc["stats"]["frames"], 120);
  EXPECT_EQ(doc, json::parse(slurp(dir / "o" / "simulate.json")));
}

// ---------------------------------------------------------------------------
// loss
// ---------------------------------------------------------------------------

const char* kStageHeader = "stage,tx,ty,tz,qw,qx,qy,qz,fov_h_deg,fov_w_deg,anchor_fov_h_deg,anchor_fov_w_deg\n";

struct StageValues {
  int stage;
  double t[3];
  double q[4];
  double fov[4];  // h, w, anchor h, anchor w (degrees)
};

std::string stage_csv(const std::vector<StageValues>& rows) {
  std::string s = kStageHeader;
  for (const StageValues& r : rows) {
    s += std::to_string(r.stage);
    for (double v : r.t) s += "," + format_number(v);
    for (double v : r.q) s += "," + format_number(v);
    for (double v : r.fov) s += "," + format_number(v);
    s += "\n";
  }
  return s;
}

double total_from(const fs::path& loss_json) {
  return json::parse(slurp(loss_json))["results"]["loss"]["total"].get<double>();
}

TEST(CliLoss, IdenticalFilesGiveZero) {
  const fs::path dir = testing::scratch_dir("cli_loss0");
  spit(dir / "p.csv", stage_csv({{1, {1, 2, 3}, {1, 0, 0, 0}, {60, 70, 80, 90}}, {2, {4, 5, 6}, {0.5, 0.5, 0.5, 0.5}, {50, 55, 60, 65}}}));
  const Result r = run_cli({"--out", dir.string(), "loss", "--pred", (dir / "p.csv").string(), "--true",
                            (dir / "p.csv").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(total_from(dir / "loss.json"), 0.0);
  EXPECT_EQ(lines_of(r.out).back(), "total,,,,,0,0,0,0");
}

TEST(CliLoss, SingleStageEqualsHandSum) {
  const fs::path dir = testing::scratch_dir("cli_loss1");
  const double narrow = 2.0 * std::atan(0.5) * 180.0 / kPi<double>;
  spit(dir / "p.csv", stage_csv({{1, {1, -2, 3}, {1, 0, 0, 0}, {90, 90, 90, 90}}}));
  spit(dir / "t.csv", stage_csv({{1, {0, 0, 0}, {0, 1, 0, 0}, {90, narrow, 90, 90}}}));
  const Result r = run_cli({"--out", dir.string(), "loss", "--pred", (dir / "p.csv").string(), "--true",
                            (dir / "t.csv").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  // |t| = 6, |q - q'|_1 = 2, fov term = |0 - ln(1/2)| = ln 2, lambda_f = 0.5
  EXPECT_NEAR(total_from(dir / "loss.json"), 6.0 + 2.0 + 0.5 * std::log(2.0), 1e-12);
}

long double oracle_logtan(long double deg) {
  return std::log(std::tan(deg * 3.14159265358979323846264338327950288L / 360.0L));
}

long double oracle_loss(const std::vector<StageValues>& pred, const std::vector<StageValues>& truth, long double lt,
                        long double lr, long double lf, long double gamma) {
  const std::size_t k = pred.size();
  long double total = 0;
  for (std::size_t i = 0; i < k; ++i) {
    const StageValues& p = pred[i];
    const StageValues& t = truth[i];
    long double lt_term = 0, lr_term = 0;
    for (int j = 0; j < 3; ++j) lt_term += std::fabs(static_cast<long double>(p.t[j]) - t.t[j]);
    for (int j = 0; j < 4; ++j) lr_term += std::fabs(static_cast<long double>(p.q[j]) - t.q[j]);
    long double lf_term = 0;
    for (int j = 0; j < 2; ++j) {
      lf_term += std::fabs((oracle_logtan(p.fov[j]) - oracle_logtan(p.fov[j + 2])) -
                           (oracle_logtan(t.fov[j]) - oracle_logtan(t.fov[j + 2])));
    }
    total += std::pow(gamma, static_cast<long double>(k - p.stage)) * (lt * lt_term + lr * lr_term + lf * lf_term);
  }
  return total / k;
}

StageValues random_stage(Rng& rng, int stage) {
  StageValues v{stage, {}, {}, {}};
  for (double& t : v.t) t = rng.uniform(-2, 2);
  const Rotationd q = rng.rotation();
  v.q[0] = q.w();
  v.q[1] = q.x();
  v.q[2] = q.y();
  v.q[3] = q.z();
  for (double& f : v.fov) f = rng.uniform(20, 120);
  return v;
}

TEST(CliLoss, FourStagesMatchSummationOracle) {
  const fs::path dir = testing::scratch_dir("cli_loss4");
  Rng rng(61);
  for (double gamma : {0.3, 0.6, 1.0}) {
    std::vector<StageValues> pred, truth;
    for (int s = 1; s <= 4; ++s) {
      pred.push_back(random_stage(rng, s));
      truth.push_back(random_stage(rng, s));
    }
    std::vector<StageValues> shuffled{pred[2], pred[0], pred[3], pred[1]};
    spit(dir / "p.csv", stage_csv(shuffled));
    spit(dir / "t.csv", stage_csv(truth));
    const Result r = run_cli({"--out", dir.string(), "loss", "--pred", (dir / "p.csv").string(), "--true",
                              (dir / "t.csv").string(), "--gamma", format_number(gamma), "--lambda-f", "0.25"});
    ASSERT_EQ(r.code, 0) << r.err;
    const double expected = static_cast<double>(oracle_loss(pred, truth, 1, 1, 0.25L, gamma));
    EXPECT_NEAR(total_from(dir / "loss.json"), expected, 1e-12 * expected) << gamma;
  }
}

TEST(CliLoss, StageCountMismatch) {
  const fs::path dir = testing::scratch_dir("cli_loss_mismatch");
  Rng rng(62);
  spit(dir / "p.csv", stage_csv({random_stage(rng, 1), random_stage(rng, 2)}));
  spit(dir / "t.csv", stage_csv({random_stage(rng, 1)}));
  Result r = run_cli({"--out", dir.string(), "loss", "--pred", (dir / "p.csv").string(), "--true",
                      (dir / "t.csv").string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("code=StageCountMismatch"), std::string::npos) << r.err;
  spit(dir / "t.csv", stage_csv({random_stage(rng, 1), random_stage(rng, 3)}));
  r = run_cli({"--out", dir.string(), "loss", "--pred", (dir / "p.csv").string(), "--true", (dir / "t.csv").string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("code=StageCountMismatch"), std::string::npos) << r.err;
}

// ---------------------------------------------------------------------------
// config handling and report
// ---------------------------------------------------------------------------

TEST(CliConfig, UnknownKeyExitsTwo) {
  const fs::path dir = testing::scratch_dir("cli_unknown");
  spit(dir / "bad.cfg", "frames_per_log=10\nbogus_key=1\n");
  Result r = run_cli({"--out", dir.string(), "--config", (dir / "bad.cfg").string(), "simulate"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("code=InvalidConfig"), std::string::npos) << r.err;
  EXPECT_NE(r.err.find("bogus_key"), std::string::npos);
  EXPECT_NE(r.err.find("bad.cfg:2"), std::string::npos);

  r = run_cli({"--out", dir.string(), "--set", "estimator.a.kind=absolute", "loss", "--pred", "x", "--true", "y"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("code=InvalidConfig"), std::string::npos) << r.err;
}

TEST(CliConfig, DuplicateKeyAndBadFlags) {
  const fs::path dir = testing::scratch_dir("cli_dup");
  spit(dir / "dup.cfg", "subjects=1\nsubjects=2\n");
  Result r = run_cli({"--out", dir.string(), "--config", (dir / "dup.cfg").string(), "simulate"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("code=ParseError"), std::string::npos);

  r = run_cli({"simulate", "--no-such-flag"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("code=UsageError"), std::string::npos);

  r = run_cli({"--format", "xml", "simulate"});
  EXPECT_EQ(r.code, 2);

  r = run_cli({});
  EXPECT_EQ(r.code, 2);

  r = run_cli({"--out", dir.string(), "pairs"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("missing required key 'logs'"), std::string::npos) << r.err;
}

TEST(CliConfig, HelpExitsZero) {
  const Result r = run_cli({"--help"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("simulate"), std::string::npos);
}

TEST(CliReport, ReRendersSweepAndMetrics) {
  const fs::path dir = testing::scratch_dir("cli_report");
  ASSERT_EQ(run_cli({"--out", (dir / "s").string(), "simulate", "--benchmark", "sweep_gap", "--frames-per-log", "200"})
                .code,
            0);
  Result r = run_cli({"--out", (dir / "r").string(), "report", "--input", (dir / "s" / "simulate.json").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(slurp(dir / "r" / "sweep.csv"), slurp(dir / "s" / "sweep.csv"));
  EXPECT_EQ(slurp(dir / "r" / "sweep.svg"), slurp(dir / "s" / "sweep.svg"));

  ASSERT_EQ(run_cli({"--out", (dir / "h").string(), "simulate", "--frames-per-log", "200"}).code, 0);
  r = run_cli({"--out", (dir / "hr").string(), "report", "--input", (dir / "h" / "simulate.json").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(slurp(dir / "hr" / "metrics.csv"), slurp(dir / "h" / "metrics.csv"));

  spit(dir / "broken.json", "{\"format_version\": 1");
  r = run_cli({"--out", dir.string(), "report", "--input", (dir / "broken.json").string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("code=ParseError"), std::string::npos);
}

}  // namespace
}  // namespace anchorpose
