#include "tag/image_angle.hpp"

#include "tag/io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <numbers>
#include <set>
#include <sstream>
#include <utility>

namespace tag {

void validate_pipeline(const PipelineConfig& cfg, int width, int height) {
  if (cfg.threshold < 0 || cfg.threshold > 255) {
    throw DomainError(ErrorKind::InvalidParameter, "threshold must be in [0, 255]");
  }
  if (!(cfg.canny.low > 0.0) || !(cfg.canny.low < cfg.canny.high)) {
    throw DomainError(ErrorKind::InvalidParameter, "canny: need 0 < low < high");
  }
  if (cfg.canny.aperture < 3 || cfg.canny.aperture > 31 || cfg.canny.aperture % 2 == 0) {
    throw DomainError(ErrorKind::InvalidParameter, "canny: aperture must be odd in [3, 31]");
  }
  const CropRect& c = cfg.crop;
  if (c.x < 0 || c.y < 0 || c.width <= 0 || c.height <= 0 || c.x + c.width > width ||
      c.y + c.height > height) {
    throw DomainError(ErrorKind::InvalidParameter, "crop rectangle outside image bounds");
  }
}

GrayImage crop_image(const GrayImage& img, const CropRect& r) {
  if (r.x < 0 || r.y < 0 || r.width <= 0 || r.height <= 0 || r.x + r.width > img.width() ||
      r.y + r.height > img.height()) {
    throw DomainError(ErrorKind::InvalidParameter, "crop rectangle outside image bounds");
  }
  return GrayImage(GrayImage::Pixels(img.pixels().block(r.y, r.x, r.height, r.width)));
}

GrayImage threshold_binary(const GrayImage& img, int cut) {
  GrayImage::Pixels out = (img.pixels().cast<int>() > cut).select(
      GrayImage::Pixels::Constant(img.height(), img.width(), 255),
      GrayImage::Pixels::Zero(img.height(), img.width()));
  return GrayImage(std::move(out));
}

EdgeLineFit fit_edge_line(std::span<const PixelCoord> points) {
  std::set<std::pair<int, int>> distinct;
  for (const auto& p : points) distinct.emplace(p.col, p.row);
  if (distinct.size() < 2) {
    throw DomainError(ErrorKind::InsufficientData, "line fit needs at least two distinct points");
  }

  const double n = static_cast<double>(points.size());
  double mean_col = 0.0, mean_row = 0.0;
  for (const auto& p : points) {
    mean_col += p.col;
    mean_row += p.row;
  }
  mean_col /= n;
  mean_row /= n;

  double sxx = 0.0, sxy = 0.0;
  for (const auto& p : points) {
    const double dx = p.col - mean_col;
    sxx += dx * dx;
    sxy += dx * (p.row - mean_row);
  }

  EdgeLineFit fit;
  fit.inlier_count = static_cast<int>(points.size());
  if (sxx <= 1e-12 * n) {
    fit.degenerate_vertical = true;
    fit.slope = std::numeric_limits<double>::infinity();
    fit.intercept = mean_col;  // the line is col = intercept
    double ss = 0.0;
    for (const auto& p : points) ss += (p.col - mean_col) * (p.col - mean_col);
    fit.fit_residual_rms = std::sqrt(ss / n);
    return fit;
  }
  fit.slope = sxy / sxx;
  fit.intercept = mean_row - fit.slope * mean_col;
  double ss = 0.0;
  for (const auto& p : points) {
    const double r = p.row - (fit.slope * p.col + fit.intercept);
    ss += r * r;
  }
  fit.fit_residual_rms = std::sqrt(ss / n);
  return fit;
}

double angle_from_slope(const EdgeLineFit& fit) {
  if (fit.degenerate_vertical) return 90.0;
  if (fit.slope == 0.0) return 0.0;
  return 90.0 - rad_to_deg(std::atan(std::abs(1.0 / fit.slope)));
}

AngleEstimate estimate_angle_detailed(const GrayImage& img, const PipelineConfig& cfg) {
  validate_pipeline(cfg, img.width(), img.height());
  const GrayImage binary = threshold_binary(crop_image(img, cfg.crop), cfg.threshold);
  auto edges = canny_edges(binary, cfg.canny);
  if (edges.empty()) {
    throw DomainError(ErrorKind::NoEdge, "no edge pixels found in the crop");
  }
  const EdgeLineFit fit = fit_edge_line(edges);
  return {angle_from_slope(fit), fit, std::move(edges)};
}

double estimate_angle(const GrayImage& img, const PipelineConfig& cfg) {
  return estimate_angle_detailed(img, cfg).angle_deg;
}

// --- PGM -----------------------------------------------------------------

std::string encode_pgm(const GrayImage& img) {
  std::string out = "P5\n" + std::to_string(img.width()) + " " + std::to_string(img.height()) +
                    "\n255\n";
  const auto bytes = img.data();
  out.append(reinterpret_cast<const char*>(bytes.data()), bytes.size());
  return out;
}

namespace {

// Reads the next header token, skipping whitespace and '#' comments.
std::string next_token(const std::string& s, std::size_t& pos) {
  while (pos < s.size()) {
    if (s[pos] == '#') {
      while (pos < s.size() && s[pos] != '\n') ++pos;
    } else if (std::isspace(static_cast<unsigned char>(s[pos]))) {
      ++pos;
    } else {
      break;
    }
  }
  const std::size_t start = pos;
  while (pos < s.size() && !std::isspace(static_cast<unsigned char>(s[pos])) && s[pos] != '#') ++pos;
  return s.substr(start, pos - start);
}

int parse_header_int(const std::string& tok) {
  if (tok.empty() || tok.find_first_not_of("0123456789") != std::string::npos || tok.size() > 9) {
    throw IoError("pgm: bad header field '" + tok + "'");
  }
  return std::stoi(tok);
}

}  // namespace

GrayImage decode_pgm(const std::string& bytes) {
  std::size_t pos = 0;
  if (next_token(bytes, pos) != "P5") throw IoError("pgm: expected P5 magic");
  const int width = parse_header_int(next_token(bytes, pos));
  const int height = parse_header_int(next_token(bytes, pos));
  const int maxval = parse_header_int(next_token(bytes, pos));
  if (width <= 0 || height <= 0) throw IoError("pgm: non-positive dimensions");
  if (maxval != 255) throw IoError("pgm: only 8-bit (maxval 255) images are supported");
  if (pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[pos]))) {
    throw IoError("pgm: missing whitespace after header");
  }
  ++pos;
  const std::size_t count = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  if (bytes.size() - pos < count) throw IoError("pgm: truncated pixel data");
  GrayImage img(width, height);
  std::copy_n(reinterpret_cast<const std::uint8_t*>(bytes.data() + pos), count, img.pixels().data());
  return img;
}

GrayImage read_pgm(const std::string& path) { return decode_pgm(read_file(path)); }

void write_pgm(const std::string& path, const GrayImage& img) {
  write_file_atomic(path, encode_pgm(img));
}

std::string edges_to_csv(std::span<const PixelCoord> points) {
  std::ostringstream out;
  out << "col,row\n";
  for (const auto& p : points) out << p.col << ',' << p.row << '\n';
  return out.str();
}

}  // namespace tag
