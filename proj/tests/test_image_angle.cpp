#include "tag/image_angle.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

using namespace tag;
using oracle::rad;

namespace {

GrayImage step_image(int width, int height, int first_bright_row) {
  GrayImage img(width, height, 0);
  img.pixels().bottomRows(height - first_bright_row).setConstant(255);
  return img;
}

EdgeLineFit fit_of_slope(double m) {
  EdgeLineFit f;
  f.slope = m;
  return f;
}

}  // namespace

// ---------------------------------------------------------------------------
// threshold

TEST(Threshold, BoundaryValues) {
  GrayImage img(4, 1);
  img(0, 0) = 0;
  img(0, 1) = 125;
  img(0, 2) = 126;
  img(0, 3) = 255;
  const GrayImage out = threshold_binary(img);
  EXPECT_EQ(out(0, 0), 0);
  EXPECT_EQ(out(0, 1), 0);
  EXPECT_EQ(out(0, 2), 255);
  EXPECT_EQ(out(0, 3), 255);
}

TEST(Threshold, IdempotentAndBinaryOnRandomImages) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> px(0, 255);
  for (int trial = 0; trial < 50; ++trial) {
    GrayImage img(31, 17);
    for (int r = 0; r < img.height(); ++r)
      for (int c = 0; c < img.width(); ++c) img(r, c) = static_cast<std::uint8_t>(px(rng));
    const GrayImage once = threshold_binary(img);
    EXPECT_EQ(threshold_binary(once), once);
    EXPECT_TRUE(((once.pixels() == 0) || (once.pixels() == 255)).all());
  }
}

TEST(Threshold, AllBlackStaysBlack) {
  const GrayImage black(20, 10, 0);
  EXPECT_EQ(threshold_binary(black), black);
}

// ---------------------------------------------------------------------------
// canny

TEST(Canny, UniformImageHasNoEdges) {
  EXPECT_TRUE(canny_edges(GrayImage(40, 30, 0)).empty());
  EXPECT_TRUE(canny_edges(GrayImage(40, 30, 255)).empty());
  EXPECT_TRUE(canny_edges(GrayImage(40, 30, 77)).empty());
}

TEST(Canny, HorizontalStepStaysInBand) {
  for (int aperture : {3, 5, 7}) {
    const auto edges = canny_edges(step_image(40, 40, 20), {100, 150, aperture});
    ASSERT_FALSE(edges.empty()) << "aperture " << aperture;
    std::set<int> cols;
    for (const auto& e : edges) {
      // The step lies between rows 19 and 20.
      EXPECT_LE(std::abs(e.row - 19.5), 1.0);
      cols.insert(e.col);
    }
    EXPECT_EQ(cols.size(), 40u);  // one continuous line, replicated borders
  }
}

TEST(Canny, RejectsBadConfig) {
  const GrayImage img(10, 10);
  EXPECT_THROW(canny_edges(img, {150, 100, 7}), DomainError);
  EXPECT_THROW(canny_edges(img, {100, 150, 4}), DomainError);
  EXPECT_THROW(canny_edges(img, {100, 150, 1}), DomainError);
}

TEST(Canny, TagCropDominatedByTopEdge) {
  const PipelineConfig cfg = default_pipeline_config();
  const GrayImage crop = threshold_binary(crop_image(render_synthetic_tag(rad(10.0)), cfg.crop));
  const auto edges = canny_edges(crop, cfg.canny);
  ASSERT_FALSE(edges.empty());
  const EdgeLineFit fit = fit_edge_line(edges);
  int near = 0;
  for (const auto& e : edges) {
    const double dist = std::abs(e.row - (fit.slope * e.col + fit.intercept)) / std::hypot(1.0, fit.slope);
    if (dist < 1.5) ++near;
  }
  EXPECT_GE(near, static_cast<int>(0.95 * edges.size()));
}

// ---------------------------------------------------------------------------
// line fit and slope-to-angle conversion

TEST(FitEdgeLine, Examples) {
  const std::vector<PixelCoord> diag{{0, 0}, {1, 1}, {2, 2}};
  const auto f = fit_edge_line(diag);
  EXPECT_NEAR(f.slope, 1.0, 1e-15);
  EXPECT_NEAR(f.intercept, 0.0, 1e-15);
  EXPECT_EQ(f.inlier_count, 3);

  const std::vector<PixelCoord> flat{{0, 7}, {3, 7}, {9, 7}, {12, 7}};
  const auto h = fit_edge_line(flat);
  EXPECT_EQ(h.slope, 0.0);
  EXPECT_EQ(h.fit_residual_rms, 0.0);
  EXPECT_EQ(angle_from_slope(h), 0.0);
}

TEST(FitEdgeLine, VerticalIsFlaggedNotDivided) {
  const std::vector<PixelCoord> vertical{{5, 0}, {5, 1}, {5, 9}};
  const auto f = fit_edge_line(vertical);
  EXPECT_TRUE(f.degenerate_vertical);
  EXPECT_EQ(angle_from_slope(f), 90.0);
}

TEST(FitEdgeLine, NeedsTwoDistinctPoints) {
  EXPECT_THROW(fit_edge_line(std::vector<PixelCoord>{}), DomainError);
  EXPECT_THROW(fit_edge_line(std::vector<PixelCoord>{{1, 1}}), DomainError);
  EXPECT_THROW(fit_edge_line(std::vector<PixelCoord>{{1, 1}, {1, 1}, {1, 1}}), DomainError);
}

TEST(AngleFromSlope, Examples) {
  EXPECT_NEAR(angle_from_slope(fit_of_slope(1.0)), 45.0, 1e-12);
  EXPECT_NEAR(angle_from_slope(fit_of_slope(-1.0)), 45.0, 1e-12);
  EXPECT_EQ(angle_from_slope(fit_of_slope(0.0)), 0.0);
  EXPECT_NEAR(angle_from_slope(fit_of_slope(std::tan(rad(30.0)))), 30.0, 1e-12);
}

TEST(AngleFromSlope, InverseOfTangentRandom) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> alpha(1e-3, 90.0 - 1e-3);
  for (int i = 0; i < 1000; ++i) {
    const double a = alpha(rng);
    EXPECT_NEAR(angle_from_slope(fit_of_slope(std::tan(rad(a)))), a, 1e-9);
  }
}

TEST(AngleFromSlope, ExactLatticeLinesThroughFit) {
  // Lines with rational slope p/q pass exactly through integer pixels.
  std::mt19937_64 rng(23);
  std::uniform_int_distribution<int> d(1, 12);
  for (int i = 0; i < 200; ++i) {
    const int p = d(rng), q = d(rng);
    std::vector<PixelCoord> pts;
    for (int k = 0; k < 6; ++k) pts.push_back({k * q, 3 + k * p});
    const double expected = oracle::deg(std::atan2(p, q));
    EXPECT_NEAR(angle_from_slope(fit_edge_line(pts)), expected, 1e-9);
  }
}

// ---------------------------------------------------------------------------
// renderer

TEST(Render, RestPoseTopEdgeIsHorizontal) {
  const PipelineConfig cfg = default_pipeline_config();
  const auto est = estimate_angle_detailed(render_synthetic_tag(0.0), cfg);
  ASSERT_FALSE(est.edges.empty());
  const int row0 = est.edges.front().row;
  for (const auto& e : est.edges) EXPECT_EQ(e.row, row0);
  EXPECT_EQ(est.angle_deg, 0.0);
}

TEST(Render, SameSeedSameImage) {
  RenderParams rp;
  rp.noise_sigma = 5.0;
  rp.seed = 42;
  const GrayImage a = render_synthetic_tag(rad(12.0), rp);
  const GrayImage b = render_synthetic_tag(rad(12.0), rp);
  EXPECT_EQ(a, b);
  rp.seed = 43;
  EXPECT_FALSE(render_synthetic_tag(rad(12.0), rp) == a);
}

TEST(Render, BinaryWithoutNoise) {
  const GrayImage img = render_synthetic_tag(rad(33.0));
  EXPECT_TRUE(((img.pixels() == 0) || (img.pixels() == 255)).all());
  EXPECT_GT((img.pixels() == 255).count(), 0);
}

TEST(Render, GeometryErrors) {
  RenderParams small;
  small.width = 300;
  EXPECT_THROW(render_synthetic_tag(0.0, small), DomainError);

  RenderParams off;
  off.crop = {200, 400, 140, 100};  // below the top edge
  try {
    render_synthetic_tag(rad(5.0), off);
    FAIL();
  } catch (const DomainError& e) {
    EXPECT_EQ(e.kind(), ErrorKind::GeometryOutsideCrop);
  }
  EXPECT_THROW(render_synthetic_tag(rad(45.0)), DomainError);
  EXPECT_THROW(render_synthetic_tag(-0.01), DomainError);
  EXPECT_THROW(GrayImage(0, 5), DomainError);
}

TEST(Render, FifteenDegreeSlope) {
  const auto est = estimate_angle_detailed(render_synthetic_tag(rad(15.0)), default_pipeline_config());
  EXPECT_NEAR(std::abs(est.fit.slope), std::tan(rad(15.0)), 0.005 * std::tan(rad(15.0)));
}

// ---------------------------------------------------------------------------
// full pipeline

TEST(EstimateAngle, NoiseFreeGrid) {
  const PipelineConfig cfg = default_pipeline_config();
  for (int i = 0; i <= 70; ++i) {
    const double phi = 0.5 * i;
    EXPECT_NEAR(estimate_angle(render_synthetic_tag(rad(phi)), cfg), phi, 0.25) << phi;
  }
}

TEST(EstimateAngle, NoisyTrials) {
  const PipelineConfig cfg = default_pipeline_config();
  int within = 0;
  for (int trial = 0; trial < 100; ++trial) {
    RenderParams rp;
    rp.noise_sigma = 5.0;
    rp.seed = 1000 + static_cast<std::uint64_t>(trial);
    const double phi = 0.5 * (trial % 71);
    try {
      if (std::abs(estimate_angle(render_synthetic_tag(rad(phi), rp), cfg) - phi) <= 1.0) ++within;
    } catch (const DomainError&) {
    }
  }
  EXPECT_GE(within, 95);
}

TEST(EstimateAngle, TwentyFiveDegreesNoisy) {
  RenderParams rp;
  rp.noise_sigma = 5.0;
  rp.seed = 25;
  EXPECT_NEAR(estimate_angle(render_synthetic_tag(rad(25.0), rp), default_pipeline_config()), 25.0, 1.0);
}

TEST(EstimateAngle, DeltaThetaTracksRotation) {
  const PipelineConfig cfg = default_pipeline_config();
  const double rest = estimate_angle(render_synthetic_tag(0.0), cfg);
  for (double phi : {2.5, 10.0, 20.0, 27.5, 35.0}) {
    EXPECT_NEAR(estimate_angle(render_synthetic_tag(rad(phi)), cfg) - rest, phi, 0.25);
  }
}

TEST(EstimateAngle, AllBlackIsNoEdge) {
  try {
    estimate_angle(GrayImage(570, 612, 0), default_pipeline_config());
    FAIL();
  } catch (const DomainError& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NoEdge);
  }
}

TEST(EstimateAngle, ValidatesConfig) {
  PipelineConfig cfg = default_pipeline_config();
  cfg.crop.width = 10000;
  EXPECT_THROW(estimate_angle(GrayImage(570, 612), cfg), DomainError);
  cfg = default_pipeline_config();
  cfg.threshold = 256;
  EXPECT_THROW(estimate_angle(GrayImage(570, 612), cfg), DomainError);
}

// ---------------------------------------------------------------------------
// PGM and CSV

TEST(Pgm, RoundTrip) {
  RenderParams rp;
  rp.noise_sigma = 20.0;
  rp.seed = 9;
  const GrayImage img = render_synthetic_tag(rad(7.0), rp);
  EXPECT_EQ(decode_pgm(encode_pgm(img)), img);
  const std::string header = encode_pgm(img).substr(0, 15);
  EXPECT_EQ(header, "P5\n570 612\n255\n");
}

TEST(Pgm, AcceptsCommentsAndRejectsMalformed) {
  const std::string px(6, '\x80');
  const GrayImage ok = decode_pgm("P5\n# made by hand\n3 2\n255\n" + px);
  EXPECT_EQ(ok.width(), 3);
  EXPECT_EQ(ok.height(), 2);
  EXPECT_EQ(ok(1, 2), 0x80);

  EXPECT_THROW(decode_pgm("P2\n3 2\n255\n" + px), IoError);
  EXPECT_THROW(decode_pgm("P5\n3 2\n65535\n" + px), IoError);
  EXPECT_THROW(decode_pgm("P5\n3 2\n255\n" + px.substr(0, 5)), IoError);
  EXPECT_THROW(decode_pgm("P5\n3 x\n255\n" + px), IoError);
  EXPECT_THROW(decode_pgm(""), IoError);
}

TEST(EdgesCsv, Format) {
  const std::vector<PixelCoord> pts{{3, 4}, {10, 2}};
  EXPECT_EQ(edges_to_csv(pts), "col,row\n3,4\n10,2\n");
  EXPECT_EQ(edges_to_csv(std::vector<PixelCoord>{}), "col,row\n");
}
