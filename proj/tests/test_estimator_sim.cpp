#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "anchorpose/estimator_sim.hpp"
#include "anchorpose/report.hpp"
#include "test_support.hpp"

namespace anchorpose {
namespace {

using testing::random_pose;
using testing::random_rotation_of_angle;

std::string canonical_text(const std::vector<PoseLog>& logs) {
  std::ostringstream out;
  write_canonical(out, logs);
  return out.str();
}

std::vector<PoseLog> walk_logs(std::uint64_t seed, std::size_t subjects, std::size_t frames) {
  PoseSampler s;
  s.subjects = subjects;
  s.frames_per_log = frames;
  s.step_deg = 3.0;
  s.seed = seed;
  return sample_logs(s);
}

NoiseModel noise(double base, double slope, std::uint64_t seed = 0) {
  NoiseModel nm;
  nm.base_deg = base;
  nm.slope_deg_per_deg = slope;
  nm.seed = seed;
  return nm;
}

// ---------------------------------------------------------------------------
// sampler
// ---------------------------------------------------------------------------

TEST(Sampler, ZeroWidthRangesGiveIdenticalPoses) {
  PoseSampler s;
  s.yaw = {25.0, 25.0};
  s.pitch = {-10.0, -10.0};
  s.roll = {5.0, 5.0};
  s.translation_spread_mm = 0.0;
  s.frames_per_log = 50;
  for (const PoseLog& log : sample_logs(s)) {
    for (const FrameRecord& f : log.frames) {
      EXPECT_EQ(f.pose.rotation, log.frames[0].pose.rotation);
      EXPECT_EQ(f.pose.translation, log.frames[0].pose.translation);
    }
  }
  s.step_deg = 2.0;
  for (const PoseLog& log : sample_logs(s)) {
    for (const FrameRecord& f : log.frames) EXPECT_EQ(f.pose.rotation, log.frames[0].pose.rotation);
  }
}

TEST(Sampler, SameSeedGivesIdenticalLogs) {
  PoseSampler s;
  s.seed = 77;
  s.frames_per_log = 100;
  EXPECT_EQ(canonical_text(sample_logs(s)), canonical_text(sample_logs(s)));
  s.step_deg = 4.0;
  EXPECT_EQ(canonical_text(sample_logs(s)), canonical_text(sample_logs(s)));
  PoseSampler t = s;
  t.seed = 78;
  EXPECT_NE(canonical_text(sample_logs(s)), canonical_text(sample_logs(t)));
}

TEST(Sampler, CoversRangesOverTenThousandFrames) {
  for (double step : {0.0, 5.0}) {
    PoseSampler s;
    s.subjects = 2;
    s.frames_per_log = 5000;
    s.step_deg = step;
    s.seed = 3;
    double lo[3] = {1e9, 1e9, 1e9}, hi[3] = {-1e9, -1e9, -1e9};
    for (const PoseLog& log : sample_logs(s)) {
      ASSERT_NO_THROW(log.validate());
      for (const FrameRecord& f : log.frames) {
        const EulerAnglesd e = euler_from_rotation(f.pose.rotation);
        const double v[3] = {e.yaw, e.pitch, e.roll};
        for (int a = 0; a < 3; ++a) {
          lo[a] = std::min(lo[a], v[a]);
          hi[a] = std::max(hi[a], v[a]);
        }
        EXPECT_LE((f.pose.translation - s.translation_mean_mm).cwiseAbs().maxCoeff(), s.translation_spread_mm);
      }
    }
    const AngleRange ranges[3] = {s.yaw, s.pitch, s.roll};
    for (int a = 0; a < 3; ++a) {
      EXPECT_GE(lo[a], ranges[a].lo - 1e-9);
      EXPECT_LE(hi[a], ranges[a].hi + 1e-9);
      EXPECT_LT(lo[a], ranges[a].lo + 2.0) << a;
      EXPECT_GT(hi[a], ranges[a].hi - 2.0) << a;
    }
  }
}

TEST(Sampler, FirstFrameIsNearIdentity) {
  PoseSampler s;
  for (const PoseLog& log : sample_logs(s)) {
    EXPECT_EQ(log.frames[0].pose.rotation, Rotationd::Identity());
    EXPECT_EQ(log.frames[0].pose.translation, s.translation_mean_mm);
  }
  s.yaw = {10.0, 40.0};
  const EulerAnglesd e = euler_from_rotation(sample_logs(s)[0].frames[0].pose.rotation);
  EXPECT_NEAR(e.yaw, 10.0, 1e-12);
  EXPECT_NEAR(e.pitch, 0.0, 1e-12);
}

TEST(Sampler, IdsAndShape) {
  PoseSampler s;
  s.subjects = 3;
  s.frames_per_log = 4;
  const auto logs = sample_logs(s);
  ASSERT_EQ(logs.size(), 3u);
  EXPECT_EQ(logs[2].subject_id, "S02");
  EXPECT_EQ(logs[0].frames[3].frame_id, "f00003");
  EXPECT_EQ(logs[0].frame_tag, "sim");
}

TEST(Sampler, RejectsInvalidRanges) {
  PoseSampler s;
  s.yaw = {10.0, -10.0};
  try {
    sample_logs(s);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptyRange);
  }
  PoseSampler p;
  p.pitch = {-95.0, 0.0};
  EXPECT_THROW(sample_logs(p), Error);
  PoseSampler z;
  z.frames_per_log = 0;
  EXPECT_THROW(sample_logs(z), Error);
}

// ---------------------------------------------------------------------------
// simulate_absolute
// ---------------------------------------------------------------------------

TEST(SimulateAbsolute, ZeroNoiseIsExact) {
  Rng rng(40);
  for (int i = 0; i < 100; ++i) {
    const SE3Posed t = random_pose(rng);
    const SE3Posed p = simulate_absolute(t, NoiseModel{}, Rotationd::Identity(), rng);
    EXPECT_EQ(p.rotation, t.rotation);
    EXPECT_EQ(p.translation, t.translation);
  }
}

TEST(SimulateAbsolute, ConstantNoiseMeanIsBase) {
  Rng rng(41);
  double sum = 0.0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    const SE3Posed t = random_pose(rng);
    sum += geodesic_deg(simulate_absolute(t, noise(5.0, 0.0), Rotationd::Identity(), rng).rotation, t.rotation);
  }
  EXPECT_NEAR(sum / n, 5.0, 0.2);
}

TEST(SimulateAbsolute, RegressionSlopeMatchesConfiguredSlope) {
  Rng rng(42);
  const Rotationd canonical = rng.rotation();
  const double slope = 0.15, base = 1.5;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const int n = 5000;
  for (int i = 0; i < n; ++i) {
    const double d = rng.uniform(0.0, 90.0);
    const SE3Posed t{random_rotation_of_angle(rng, d) * canonical, Eigen::Vector3d::Zero(), "cam"};
    const double x = geodesic_deg(t.rotation, canonical);
    const double y = geodesic_deg(simulate_absolute(t, noise(base, slope), canonical, rng).rotation, t.rotation);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double fitted = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  EXPECT_NEAR(fitted, slope, 0.1 * slope);
  EXPECT_NEAR((sy - fitted * sx) / n, base, 0.1 * base);
}

TEST(SimulateAbsolute, TranslationNoiseHasConfiguredNorm) {
  Rng rng(43);
  NoiseModel nm;
  nm.trans_noise_mm = 12.5;
  for (int i = 0; i < 100; ++i) {
    const SE3Posed t = random_pose(rng);
    EXPECT_NEAR(translation_distance(simulate_absolute(t, nm, Rotationd::Identity(), rng), t), 12.5, 1e-9);
  }
}

TEST(SimulateAbsolute, MagnitudeIsClamped) {
  const NoiseModel nm = noise(100.0, 2.0);
  EXPECT_EQ(nm.magnitude_deg(90.0), 180.0);
  EXPECT_EQ(nm.magnitude_deg(-1000.0), 0.0);
}

TEST(NoiseModel, RejectsNegativeParameters) {
  for (const NoiseModel& nm : {noise(-1.0, 0.0), noise(0.0, -0.1)}) {
    try {
      SimulatedAbsoluteEstimator("a", nm);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kInvalidConfig);
    }
  }
}

// ---------------------------------------------------------------------------
// simulate_relative
// ---------------------------------------------------------------------------

TEST(SimulateRelative, ZeroNoiseIsExactRelative) {
  Rng rng(44);
  for (int i = 0; i < 100; ++i) {
    const SE3Posed a = random_pose(rng), q = random_pose(rng);
    const SE3Posed r = simulate_relative(a, q, NoiseModel{}, rng);
    const SE3Posed exact = relative(q, a);
    EXPECT_EQ(r.rotation, exact.rotation);
    EXPECT_EQ(r.translation, exact.translation);
  }
}

TEST(SimulateRelative, ZeroGapBaseOneComposedErrorIsOne) {
  Rng rng(45);
  double sum = 0.0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    const SE3Posed a = random_pose(rng);
    SE3Posed q = random_pose(rng);
    q.rotation = a.rotation;
    const SE3Posed composed = apply_anchor(simulate_relative(a, q, noise(1.0, 0.5), rng), a);
    sum += geodesic_deg(composed.rotation, q.rotation);
  }
  EXPECT_NEAR(sum / n, 1.0, 0.1);
}

TEST(SimulateRelative, ComposedErrorWithinNoiseBound) {
  const auto logs = walk_logs(46, 2, 400);
  const double b = 0.8, s = 0.05, theta = 5.0;
  SimulatedRelativeEstimator rel("rel", noise(b, s, 9));
  std::size_t checked = 0;
  for (const PoseLog& log : logs) {
    for (const AnchorAssignment& a : assign_anchors(log, AnchorPolicy{AnchorKind::kNearestWithin, theta, {}})) {
      if (!a.paired) continue;
      const FrameRecord& q = log.frames[a.query_index];
      const SE3Posed p = predict_query_pose(rel, log.subject_id, &log.frames[a.anchor_index], a.anchor_pose, q);
      EXPECT_LE(geodesic_deg(p.rotation, q.pose.rotation), b + s * theta + 1e-9);
      ++checked;
    }
  }
  EXPECT_GT(checked, 700u);
}

TEST(SimulatedRelativeEstimator, NeedsAnchor) {
  SimulatedRelativeEstimator rel("rel", NoiseModel{});
  FrameRecord f;
  f.frame_id = "f0";
  try {
    rel.estimate(EstimateRequest{"S", nullptr, f});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidConfig);
  }
}

TEST(SimulatedEstimators, StreamsDoNotDependOnCallOrder) {
  const auto logs = walk_logs(47, 1, 20);
  const PoseLog& log = logs[0];
  SimulatedAbsoluteEstimator abs("abs", noise(3.0, 0.1, 5));
  SimulatedRelativeEstimator rel("rel", noise(3.0, 0.1, 5));
  std::vector<SE3Posed> forward, backward;
  for (std::size_t i = 1; i < log.frames.size(); ++i) {
    forward.push_back(abs.estimate(EstimateRequest{log.subject_id, nullptr, log.frames[i]}));
    forward.push_back(rel.estimate(EstimateRequest{log.subject_id, &log.frames[i - 1], log.frames[i]}));
  }
  for (std::size_t i = log.frames.size() - 1; i >= 1; --i) {
    backward.push_back(rel.estimate(EstimateRequest{log.subject_id, &log.frames[i - 1], log.frames[i]}));
    backward.push_back(abs.estimate(EstimateRequest{log.subject_id, nullptr, log.frames[i]}));
  }
  std::reverse(backward.begin(), backward.end());
  ASSERT_EQ(forward.size(), backward.size());
  for (std::size_t i = 0; i < forward.size(); ++i) EXPECT_EQ(forward[i].rotation, backward[i].rotation);
}

// ---------------------------------------------------------------------------
// end to end
// ---------------------------------------------------------------------------

TEST(EndToEnd, PerfectEstimatorsGiveZeroReport) {
  const auto logs = sample_logs(PoseSampler{});
  const auto abs = make_perfect_estimator("abs", EstimatorKind::kAbsolute);
  const auto rel = make_perfect_estimator("rel", EstimatorKind::kRelative);
  const Estimator* est[] = {abs.get(), rel.get()};
  for (BenchmarkKind k : {BenchmarkKind::kHardPairs, BenchmarkKind::kEasyPairs}) {
    EndToEndConfig c;
    c.benchmark = k;
    const EndToEndResult r = run_end_to_end(logs, est, c);
    ASSERT_EQ(r.metrics.size(), 2u);
    for (const auto& [id, m] : r.metrics) {
      EXPECT_GT(m.n, 0u);
      EXPECT_LT(m.mae_deg, 1e-9) << id;
      EXPECT_LT(m.translation->l2_mean_mm, 1e-9) << id;
    }
  }
}

TEST(EndToEnd, RelativeBeatsAbsoluteAboveCrossover) {
  PoseSampler s;
  s.frames_per_log = 1000;
  const auto logs = sample_logs(s);
  // absolute 1 + 0.2 d, relative 3 + 0.05 d: crossover at 13.3 deg
  SimulatedAbsoluteEstimator abs("abs", noise(1.0, 0.2, 1));
  SimulatedRelativeEstimator rel("rel", noise(3.0, 0.05, 1));
  const Estimator* est[] = {&abs, &rel};
  EndToEndConfig c;
  c.benchmark = BenchmarkKind::kSweepGap;
  const EndToEndResult r = run_end_to_end(logs, est, c);
  ASSERT_TRUE(r.sweep.has_value());
  std::size_t compared = 0;
  for (const SweepBin& b : r.sweep->bins) {
    if (b.pair_count == 0) continue;
    if (b.lo_deg >= 15.0) {
      EXPECT_LT(b.per_estimator[1].geodesic_mae_deg, b.per_estimator[0].geodesic_mae_deg) << b.lo_deg;
      ++compared;
    }
    if (b.hi_deg <= 10.0) EXPECT_GT(b.per_estimator[1].geodesic_mae_deg, b.per_estimator[0].geodesic_mae_deg);
  }
  EXPECT_GT(compared, 10u);
}

TEST(EndToEnd, RelativeWinsHardPairsByLargerMarginThanEasy) {
  const auto logs = sample_logs(PoseSampler{});
  SimulatedAbsoluteEstimator abs("abs", noise(2.0, 0.1, 2));
  SimulatedRelativeEstimator rel("rel", noise(1.0, 0.03, 2));
  const Estimator* est[] = {&abs, &rel};
  EndToEndConfig hard, easy;
  hard.benchmark = BenchmarkKind::kHardPairs;
  easy.benchmark = BenchmarkKind::kEasyPairs;
  const auto h = run_end_to_end(logs, est, hard).metrics;
  const auto e = run_end_to_end(logs, est, easy).metrics;
  const double hard_margin = h[0].second.mae_deg - h[1].second.mae_deg;
  const double easy_margin = e[0].second.mae_deg - e[1].second.mae_deg;
  EXPECT_GT(hard_margin, 0.0);
  EXPECT_GT(easy_margin, 0.0);
  EXPECT_GT(hard_margin, easy_margin);
}

TEST(EndToEnd, GapSweepRisesMonotonically) {
  PoseSampler s;
  s.frames_per_log = 1000;
  const auto logs = sample_logs(s);
  SimulatedRelativeEstimator rel("rel", noise(0.5, 0.05, 3));
  const Estimator* est[] = {&rel};
  EndToEndConfig c;
  c.benchmark = BenchmarkKind::kSweepGap;
  const SweepReport r = *run_end_to_end(logs, est, c).sweep;
  std::vector<double> idx, mae;
  for (std::size_t b = 0; b < r.bins.size(); ++b) {
    if (r.bins[b].pair_count < 30) continue;
    idx.push_back(static_cast<double>(b));
    mae.push_back(r.bins[b].per_estimator[0].mae_deg);
  }
  ASSERT_GE(idx.size(), 10u);
  EXPECT_GT(spearman_correlation(idx, mae), 0.9);
}

TEST(EndToEnd, NearestWithinCurveIsFlatAcrossAbsolutePose) {
  const auto logs = walk_logs(48, 4, 1500);
  const double base = 1.0;
  SimulatedRelativeEstimator rel("rel", noise(base, 0.03, 4));
  const Estimator* est[] = {&rel};
  EndToEndConfig c;
  c.benchmark = BenchmarkKind::kSweepPose;
  c.policy = AnchorPolicy{AnchorKind::kNearestWithin, 5.0, {}};
  const SweepReport r = *run_end_to_end(logs, est, c).sweep;
  double lo = 1e9, hi = -1e9;
  std::size_t used = 0;
  for (const SweepBin& b : r.bins) {
    if (b.pair_count < 30) continue;
    lo = std::min(lo, b.per_estimator[0].mae_deg);
    hi = std::max(hi, b.per_estimator[0].mae_deg);
    EXPECT_LT(b.per_estimator[0].mae_deg, 2.0);
    ++used;
  }
  ASSERT_GE(used, 8u);
  EXPECT_LT(hi - lo, 2.0 * base);
}

TEST(EndToEnd, PredictedAnchorsAddExactlyTheAnchorError) {
  const auto logs = walk_logs(49, 2, 200);
  SimulatedAbsoluteEstimator abs("abs", noise(2.0, 0.05, 6));
  SimulatedRelativeEstimator rel("rel", noise(1.0, 0.03, 6));
  const auto perfect = make_perfect_estimator("perfect", EstimatorKind::kRelative);
  std::size_t checked = 0;
  for (const PoseLog& log : logs) {
    const FramePoseMap preds = predict_all_frames(log, abs);
    const auto gt = assign_anchors(log, AnchorPolicy{});
    const auto pr = assign_anchors(log, AnchorPolicy{AnchorKind::kExternalPredicted, 5.0, "abs"}, &preds);
    for (std::size_t i = 0; i < gt.size(); ++i) {
      const FrameRecord& q = log.frames[i];
      const FrameRecord* anchor = &log.frames[gt[i].anchor_index];
      const double anchor_err = geodesic_deg(pr[i].anchor_pose.rotation, gt[i].anchor_pose.rotation);
      const SE3Posed with_gt = predict_query_pose(rel, log.subject_id, anchor, gt[i].anchor_pose, q);
      const SE3Posed with_pred = predict_query_pose(rel, log.subject_id, anchor, pr[i].anchor_pose, q);
      EXPECT_NEAR(geodesic_deg(with_pred.rotation, with_gt.rotation), anchor_err, 1e-9);
      const SE3Posed exact_rel = predict_query_pose(*perfect, log.subject_id, anchor, pr[i].anchor_pose, q);
      EXPECT_NEAR(geodesic_deg(exact_rel.rotation, q.pose.rotation), anchor_err, 1e-9);
      ++checked;
    }
  }
  EXPECT_EQ(checked, 400u);
}

TEST(EndToEnd, IdenticalSeedsGiveByteIdenticalReports) {
  auto run = [](std::uint64_t seed) {
    PoseSampler s;
    s.seed = seed;
    s.frames_per_log = 200;
    const auto logs = sample_logs(s);
    SimulatedAbsoluteEstimator abs("abs", noise(2.0, 0.1, seed));
    SimulatedRelativeEstimator rel("rel", noise(1.0, 0.03, seed));
    const Estimator* est[] = {&abs, &rel};
    EndToEndConfig c;
    c.pairs.seed = seed;
    c.pairs.n_pairs = 40;
    std::ostringstream out;
    const EndToEndResult r = run_end_to_end(logs, est, c);
    write_pairs_csv(out, *r.pairs);
    out << dump_json(to_json(r.metrics));
    c.benchmark = BenchmarkKind::kSweepGap;
    out << dump_json(to_json(*run_end_to_end(logs, est, c).sweep));
    return out.str();
  };
  EXPECT_EQ(run(8), run(8));
  EXPECT_NE(run(8), run(9));
}

TEST(BenchmarkKind, ParseRoundTrip) {
  for (BenchmarkKind k : {BenchmarkKind::kHardPairs, BenchmarkKind::kEasyPairs, BenchmarkKind::kSweepGap,
                          BenchmarkKind::kSweepPose}) {
    EXPECT_EQ(parse_benchmark_kind(to_string(k)), k);
  }
  EXPECT_THROW(parse_benchmark_kind("medium"), Error);
}

}  // namespace
}  // namespace anchorpose
