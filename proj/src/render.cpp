#include "tag/image_angle.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <random>

namespace tag {

GrayImage::GrayImage(int width, int height, std::uint8_t fill)
    : pixels_(Pixels::Constant(height, width, fill)) {
  if (width <= 0 || height <= 0) {
    throw DomainError(ErrorKind::InvalidParameter, "image dimensions must be positive");
  }
}

PipelineConfig default_pipeline_config() {
  PipelineConfig cfg;
  cfg.crop = RenderParams{}.crop;
  return cfg;
}

namespace {

using Point = Eigen::Vector2d;  // (col, row)

// Liang-Barsky: does segment a-b touch the axis-aligned box [lo, hi]?
bool segment_hits_box(const Point& a, const Point& b, const Point& lo, const Point& hi) {
  double t0 = 0.0, t1 = 1.0;
  const Point d = b - a;
  for (int axis = 0; axis < 2; ++axis) {
    const std::array<double, 2> p{-d[axis], d[axis]};
    const std::array<double, 2> q{a[axis] - lo[axis], hi[axis] - a[axis]};
    for (int k = 0; k < 2; ++k) {
      if (p[k] == 0.0) {
        if (q[k] < 0.0) return false;
        continue;
      }
      const double t = q[k] / p[k];
      if (p[k] < 0.0) {
        t0 = std::max(t0, t);
      } else {
        t1 = std::min(t1, t);
      }
      if (t0 > t1) return false;
    }
  }
  return true;
}

}  // namespace

GrayImage render_synthetic_tag(double phi_rad, const RenderParams& rp) {
  if (!(phi_rad >= 0.0) || !(phi_rad < std::numbers::pi / 4.0)) {
    throw DomainError(ErrorKind::UnreachableAngle, "render: phi outside [0, 45 deg)");
  }
  if (rp.width <= 0 || rp.height <= 0 || !(rp.edge_length_px > 0.0) || !(rp.thickness_px > 0.0) ||
      !(rp.noise_sigma >= 0.0)) {
    throw DomainError(ErrorKind::InvalidParameter, "render: invalid dimensions or noise sigma");
  }

  // Edge direction rises to the right; body normal points down-right.
  const Point u(std::cos(phi_rad), -std::sin(phi_rad));
  const Point v(std::sin(phi_rad), std::cos(phi_rad));
  const Point p0(rp.pivot_col, rp.pivot_row);
  const std::array<Point, 4> quad{p0, p0 + rp.edge_length_px * u,
                                  p0 + rp.edge_length_px * u + rp.thickness_px * v,
                                  p0 + rp.thickness_px * v};

  for (const Point& q : quad) {
    if (q.x() < 0.0 || q.y() < 0.0 || q.x() > rp.width - 1.0 || q.y() > rp.height - 1.0) {
      throw DomainError(ErrorKind::GeometryOutsideCrop, "render: polygon leaves the image");
    }
  }

  const CropRect& c = rp.crop;
  if (c.x < 0 || c.y < 0 || c.width <= 0 || c.height <= 0 || c.x + c.width > rp.width ||
      c.y + c.height > rp.height) {
    throw DomainError(ErrorKind::GeometryOutsideCrop, "render: crop outside image");
  }
  const double margin = rp.crop_margin_px;
  const double tan_phi = std::tan(phi_rad);
  for (int col : {c.x, c.x + c.width - 1}) {
    const double row = rp.pivot_row - (col - rp.pivot_col) * tan_phi;
    if (row < c.y + margin || row > c.y + c.height - 1 - margin) {
      throw DomainError(ErrorKind::GeometryOutsideCrop, "render: top edge does not span the crop");
    }
  }
  const Point lo(c.x - margin, c.y - margin);
  const Point hi(c.x + c.width - 1 + margin, c.y + c.height - 1 + margin);
  for (int e = 1; e < 4; ++e) {
    if (segment_hits_box(quad[e], quad[(e + 1) % 4], lo, hi)) {
      throw DomainError(ErrorKind::GeometryOutsideCrop,
                        "render: a non-top edge of the silhouette enters the crop");
    }
  }

  // Hard fill: a pixel centre is inside when it lies on the body side of the
  // top edge and within the other three half-planes.
  GrayImage img(rp.width, rp.height, 0);
  for (int row = 0; row < rp.height; ++row) {
    for (int col = 0; col < rp.width; ++col) {
      const Point rel = Point(col, row) - p0;
      const double along = rel.dot(u);
      const double across = rel.dot(v);
      if (along >= 0.0 && along <= rp.edge_length_px && across >= 0.0 &&
          across <= rp.thickness_px) {
        img(row, col) = 255;
      }
    }
  }

  if (rp.noise_sigma > 0.0) {
    std::mt19937_64 rng(rp.seed);
    std::normal_distribution<double> noise(0.0, rp.noise_sigma);
    for (auto& px : img.pixels().reshaped<Eigen::RowMajor>()) {
      const double value = std::round(static_cast<double>(px) + noise(rng));
      px = static_cast<std::uint8_t>(std::clamp(value, 0.0, 255.0));
    }
  }
  return img;
}

}  // namespace tag
