#include "tag/experiments.hpp"
#include "tag/kinematics.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

using namespace tag;
using oracle::rad;

namespace {

const std::vector<double> kBenchMeans{3.14, 7.97, 13.96};
const std::vector<double> kBenchTheory{3.12, 7.18, 14.83};

LaserGeometryd bench_geometry() { return LaserGeometryd{0.0, 8.56, {}}; }

std::size_t count_lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

}  // namespace

// ---------------------------------------------------------------------------
// sweep

TEST(Sweep, FortyRecordsPerTrial) {
  EXPECT_EQ(sweep_sample_count(0.05, 2.0), 40);
  EXPECT_EQ(sweep_sample_count(0.1, 1.0), 10);
  EXPECT_EQ(sweep_sample_count(0.3, 1.0), 4);
  SweepOptions opt;
  opt.trials = 3;
  const auto recs = run_stroke_sweep(TagParametersd{}, opt);
  ASSERT_EQ(recs.size(), 120u);
  for (int t = 0; t < 3; ++t) {
    for (int k = 0; k < 40; ++k) {
      const auto& r = recs[static_cast<std::size_t>(t * 40 + k)];
      EXPECT_EQ(r.trial_id, t);
      EXPECT_NEAR(r.stroke_mm, 0.05 * k, 1e-12);
      EXPECT_TRUE(r.error.empty());
    }
  }
}

TEST(Sweep, RestRecordIsZeroInEveryColumn) {
  SweepOptions opt;
  opt.trials = 4;
  opt.noise.angle_sigma_deg = 0.5;
  for (const auto& r : run_stroke_sweep(TagParametersd{}, opt)) {
    if (r.stroke_mm != 0.0) continue;
    EXPECT_EQ(*r.model_dtheta_deg, 0.0);
    EXPECT_EQ(*r.model_dtheta_noelong_deg, 0.0);
    EXPECT_EQ(*r.estimated_dtheta_deg, 0.0);
  }
}

TEST(Sweep, ModelAtOneMillimetre) {
  SweepOptions opt;
  opt.trials = 1;
  const auto recs = run_stroke_sweep(TagParametersd{}, opt);
  EXPECT_NEAR(*recs[20].model_dtheta_deg, oracle::kPhiAt1mmDeg, 1e-10);
  EXPECT_NEAR(*recs[20].model_dtheta_deg, 20.39, 0.005);
  EXPECT_FALSE(recs[20].estimated_dtheta_deg.has_value());  // no measurement without noise or images
}

TEST(Sweep, ModelCurvesIncreasingConvexAndClose) {
  SweepOptions opt;
  opt.trials = 1;
  opt.step_mm = 0.01;
  const auto recs = run_stroke_sweep(TagParametersd{}, opt);
  double worst_14 = 0.0, worst_20 = 0.0;
  for (std::size_t k = 0; k < recs.size(); ++k) {
    const double with = *recs[k].model_dtheta_deg, without = *recs[k].model_dtheta_noelong_deg;
    EXPECT_LE(with, without);  // elongation absorbs part of the stroke
    const double diff = without - with;
    if (recs[k].stroke_mm <= 1.4 + 1e-12) worst_14 = std::max(worst_14, diff);
    worst_20 = std::max(worst_20, diff);
    if (k >= 2) {
      for (bool elong : {true, false}) {
        auto v = [&](std::size_t i) {
          return elong ? *recs[i].model_dtheta_deg : *recs[i].model_dtheta_noelong_deg;
        };
        EXPECT_GT(v(k), v(k - 1));
        EXPECT_GT(v(k) - v(k - 1), v(k - 1) - v(k - 2) - 1e-12);  // concave up
      }
    }
  }
  EXPECT_LT(worst_14, 0.5);
  EXPECT_LT(worst_20, 1.0);
}

TEST(Sweep, NoisyEstimatesStayAboveFloor) {
  SweepOptions opt;
  opt.trials = 5;
  opt.noise.angle_sigma_deg = 0.3;
  for (const auto& r : run_stroke_sweep(TagParametersd{}, opt)) {
    ASSERT_TRUE(r.estimated_dtheta_deg.has_value());
    EXPECT_GE(*r.estimated_dtheta_deg, -1.0);
  }
}

TEST(Sweep, ImagePathTracksModel) {
  SweepOptions opt;
  opt.trials = 2;
  opt.step_mm = 0.25;
  opt.max_mm = 1.75;  // keeps phi inside the pipeline's validated 0-35 deg range
  opt.use_images = true;
  const auto recs = run_stroke_sweep(TagParametersd{}, opt);
  ASSERT_EQ(recs.size(), 14u);
  for (const auto& r : recs) {
    ASSERT_TRUE(r.error.empty()) << r.error;
    ASSERT_TRUE(r.estimated_dtheta_deg.has_value());
    EXPECT_NEAR(*r.estimated_dtheta_deg, *r.model_dtheta_deg, 0.5);
  }
  EXPECT_LT(sweep_rmse(recs), 0.25);
}

TEST(Sweep, ParallelImagePathMatchesSerialTrials) {
  SweepOptions opt;
  opt.step_mm = 0.5;
  opt.max_mm = 1.5;
  opt.use_images = true;
  opt.noise = {0.2, 5.0};
  opt.trials = 3;
  const auto together = run_stroke_sweep(TagParametersd{}, opt);
  opt.trials = 1;
  const auto alone = run_stroke_sweep(TagParametersd{}, opt);
  ASSERT_EQ(alone.size(), 3u);
  for (std::size_t k = 0; k < alone.size(); ++k) {
    EXPECT_EQ(alone[k].estimated_dtheta_deg, together[k].estimated_dtheta_deg);
  }
}

TEST(Sweep, Preconditions) {
  SweepOptions opt;
  opt.max_mm = 2.5;
  EXPECT_THROW(run_stroke_sweep(TagParametersd{}, opt), DomainError);
  opt = {};
  opt.step_mm = 0.0;
  EXPECT_THROW(run_stroke_sweep(TagParametersd{}, opt), DomainError);
  opt = {};
  opt.trials = 0;
  EXPECT_THROW(run_stroke_sweep(TagParametersd{}, opt), DomainError);
}

TEST(Sweep, UnrenderableFrameBecomesRecordError) {
  SweepOptions opt;
  opt.trials = 1;
  opt.step_mm = 0.5;
  opt.use_images = true;
  opt.render.crop = {200, 240, 140, 124};  // holds the rest edge; steeper edges rise out of it
  opt.pipeline.crop = opt.render.crop;
  const auto recs = run_stroke_sweep(TagParametersd{}, opt);
  ASSERT_EQ(recs.size(), 4u);
  EXPECT_TRUE(recs.front().error.empty());
  EXPECT_FALSE(recs.back().error.empty());
  EXPECT_FALSE(recs.back().estimated_dtheta_deg.has_value());
  EXPECT_TRUE(recs.back().model_dtheta_deg.has_value());
}

TEST(Sweep, ReplayFillsModelColumns) {
  const std::vector<SweepMeasurement> rows{{0, 0.0, 0.0}, {0, 1.0, 19.0}, {1, 1.0, 21.0}};
  const auto recs = replay_sweep(rows, TagParametersd{});
  ASSERT_EQ(recs.size(), 3u);
  EXPECT_NEAR(*recs[1].model_dtheta_deg, oracle::kPhiAt1mmDeg, 1e-10);
  EXPECT_EQ(*recs[2].estimated_dtheta_deg, 21.0);
  // Per-stroke means: 0 vs 0 and 20 vs 20.385...
  EXPECT_NEAR(sweep_rmse(recs), (oracle::kPhiAt1mmDeg - 20.0) / std::sqrt(2.0), 1e-12);
}

// ---------------------------------------------------------------------------
// steering

TEST(Steering, TheoryColumn) {
  const auto recs = run_laser_steering(TagParametersd{}, bench_geometry());
  ASSERT_EQ(recs.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_NEAR(recs[i].theoretical_dx_mm, kBenchTheory[i], 0.005);
    EXPECT_EQ(recs[i].measured_dx_mm.size(), 5u);
    EXPECT_GE(recs[i].std_dx_mm, 0.0);
    const double mean = std::accumulate(recs[i].measured_dx_mm.begin(), recs[i].measured_dx_mm.end(), 0.0) / 5.0;
    EXPECT_NEAR(recs[i].percent_error, 100.0 * (mean - recs[i].theoretical_dx_mm) / recs[i].theoretical_dx_mm,
                1e-12);
  }
  EXPECT_NEAR(recs[2].commanded_stroke_mm, oracle::kStrokeAt30Deg, 1e-12);
}

TEST(Steering, ZeroNoiseIsExact) {
  SteeringOptions opt;
  opt.sigma_mm = 0.0;
  for (const auto& r : run_laser_steering(TagParametersd{}, bench_geometry(), opt)) {
    EXPECT_EQ(r.mean_dx_mm, r.theoretical_dx_mm);
    EXPECT_EQ(r.std_dx_mm, 0.0);
    EXPECT_EQ(r.percent_error, 0.0);
  }
}

TEST(Steering, SampleStdAndSign) {
  const auto over = summarize_steering(10.0, {3.0, 3.2, 3.4}, bench_geometry(), TagParametersd{});
  EXPECT_NEAR(over.mean_dx_mm, 3.2, 1e-12);
  EXPECT_NEAR(over.std_dx_mm, 0.2, 1e-12);  // n - 1 denominator
  EXPECT_GT(over.percent_error, 0.0);
  const auto under = summarize_steering(30.0, {13.0}, bench_geometry(), TagParametersd{});
  EXPECT_LT(under.percent_error, 0.0);
  EXPECT_EQ(under.std_dx_mm, 0.0);
  EXPECT_THROW(summarize_steering(10.0, {}, bench_geometry(), TagParametersd{}), DomainError);
}

TEST(Steering, ReplayOfTableMeans) {
  std::vector<SteeringMeasurement> rows;
  const double angles[] = {10.0, 20.0, 30.0};
  for (int i = 0; i < 3; ++i) rows.push_back({angles[i], 0, kBenchMeans[static_cast<std::size_t>(i)]});
  const auto recs = replay_steering(rows, bench_geometry(), TagParametersd{});
  ASSERT_EQ(recs.size(), 3u);
  const double expected[] = {0.6, 11.0, -5.9};
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(recs[i].percent_error, expected[i], 0.2);
  EXPECT_NEAR(steering_rmse(recs), 0.68, 0.01);
}

TEST(Steering, RejectsAnglesAtOrBeyondFortyFive) {
  SteeringOptions opt;
  opt.angles_deg = {10.0, 45.0};
  EXPECT_THROW(run_laser_steering(TagParametersd{}, bench_geometry(), opt), DomainError);
}

// ---------------------------------------------------------------------------
// rmse

TEST(Rmse, Examples) {
  const std::vector<double> a{1.0, 1.0}, z{0.0, 0.0};
  EXPECT_EQ(rmse(a, z), 1.0);
  EXPECT_EQ(rmse(a, a), 0.0);
  const double hand = std::sqrt((0.02 * 0.02 + 0.79 * 0.79 + 0.87 * 0.87) / 3.0);
  EXPECT_NEAR(rmse(kBenchMeans, kBenchTheory), hand, 1e-12);
  EXPECT_NEAR(rmse(kBenchMeans, kBenchTheory), 0.679, 5e-4);
}

TEST(Rmse, Preconditions) {
  const std::vector<double> one{1.0}, two{1.0, 2.0}, none;
  EXPECT_THROW(rmse(one, two), DomainError);
  EXPECT_THROW(rmse(none, none), DomainError);
}

TEST(Rmse, PropertiesRandom) {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(-50.0, 50.0);
  std::uniform_int_distribution<int> len(1, 20);
  for (int i = 0; i < 500; ++i) {
    const int n = len(rng);
    std::vector<double> a(static_cast<std::size_t>(n)), b(static_cast<std::size_t>(n));
    for (auto& x : a) x = u(rng);
    for (auto& x : b) x = u(rng);
    EXPECT_EQ(rmse(a, b), rmse(b, a));
    EXPECT_GE(rmse(a, b), 0.0);
    EXPECT_EQ(rmse(a, a), 0.0);
    if (a != b) EXPECT_GT(rmse(a, b), 0.0);
  }
}

// ---------------------------------------------------------------------------
// reports

TEST(Reports, HeaderOnlyForEmptyInput) {
  EXPECT_EQ(sweep_csv({}), "trial_id,stroke_mm,model_dtheta_deg,model_dtheta_noelong_deg,estimated_dtheta_deg\n");
  EXPECT_EQ(steering_csv({}), "phi_deg,trial_id,theoretical_dx_mm,measured_dx_mm\n");
  EXPECT_EQ(steering_summary_csv({}), "phi_deg,theoretical_dx_mm,mean_dx_mm,std_dx_mm,percent_error\n");
  EXPECT_EQ(calibration_csv(CalibrationResult{}), "iteration,l_mm,c,residual_rmse_deg\n");
}

TEST(Reports, SweepRowCountsAndEmptyCells) {
  SweepOptions opt;
  opt.trials = 1;
  const std::string csv = sweep_csv(run_stroke_sweep(TagParametersd{}, opt));
  EXPECT_EQ(count_lines(csv), 41u);
  std::istringstream in(csv);
  std::string header, row0, row1;
  std::getline(in, header);
  std::getline(in, row0);
  std::getline(in, row1);
  EXPECT_EQ(row0, "0,0,0,0,");
  EXPECT_EQ(row1.substr(0, 7), "0,0.05,");
}

TEST(Reports, SameSeedByteIdentical) {
  SweepOptions opt;
  opt.noise.angle_sigma_deg = 0.4;
  opt.seed = 77;
  EXPECT_EQ(sweep_csv(run_stroke_sweep(TagParametersd{}, opt)), sweep_csv(run_stroke_sweep(TagParametersd{}, opt)));
  SteeringOptions sopt;
  sopt.seed = 77;
  const auto a = run_laser_steering(TagParametersd{}, bench_geometry(), sopt);
  const auto b = run_laser_steering(TagParametersd{}, bench_geometry(), sopt);
  EXPECT_EQ(steering_csv(a), steering_csv(b));
  EXPECT_EQ(steering_summary_csv(a), steering_summary_csv(b));
  sopt.seed = 78;
  EXPECT_NE(steering_csv(run_laser_steering(TagParametersd{}, bench_geometry(), sopt)), steering_csv(a));
}

TEST(Reports, ExportWritesFile) {
  const auto dir = std::filesystem::temp_directory_path() / "tag_report_test" / "nested";
  std::filesystem::remove_all(dir);
  export_report(dir.string(), "x.csv", "a,b\n1,2\n");
  std::ifstream in(dir / "x.csv");
  std::stringstream ss;
  ss << in.rdbuf();
  EXPECT_EQ(ss.str(), "a,b\n1,2\n");
  EXPECT_FALSE(std::filesystem::exists(dir / "x.csv.tmp"));
}

TEST(Reports, ParseRoundTrips) {
  SteeringOptions sopt;
  const auto recs = run_laser_steering(TagParametersd{}, bench_geometry(), sopt);
  const auto rows = parse_steering_measurements(steering_csv(recs));
  ASSERT_EQ(rows.size(), 15u);
  const auto again = replay_steering(rows, bench_geometry(), TagParametersd{});
  EXPECT_EQ(steering_summary_csv(again), steering_summary_csv(recs));

  SweepOptions opt;
  opt.trials = 2;
  opt.noise.angle_sigma_deg = 0.3;
  const auto sweep = run_stroke_sweep(TagParametersd{}, opt);
  const auto meas = parse_sweep_measurements(sweep_csv(sweep));
  ASSERT_EQ(meas.size(), 80u);
  EXPECT_EQ(sweep_csv(replay_sweep(meas, TagParametersd{})), sweep_csv(sweep));
}

TEST(Reports, ParseErrorsAndHeaderOnly) {
  EXPECT_TRUE(parse_steering_measurements("phi_deg,trial_id,measured_dx_mm\n").empty());
  EXPECT_TRUE(parse_sweep_measurements("trial_id,stroke_mm,estimated_dtheta_deg\n").empty());
  EXPECT_THROW(parse_steering_measurements(""), IoError);
  EXPECT_THROW(parse_steering_measurements("phi_deg,trial_id\n10,0\n"), IoError);
  EXPECT_THROW(parse_sweep_measurements("trial_id,stroke_mm,estimated_dtheta_deg\n0,abc,1\n"), IoError);

  const auto cal = parse_calibration_samples("stroke_mm,angle_deg\n0,0\n1,30\n\n");
  ASSERT_EQ(cal.size(), 2u);
  EXPECT_NEAR(cal[1].phi_rad, rad(30.0), 1e-15);
  EXPECT_THROW(parse_calibration_samples("stroke_mm,foo\n0,0\n"), IoError);
}
