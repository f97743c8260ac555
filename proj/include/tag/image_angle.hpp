#ifndef TAG_IMAGE_ANGLE_HPP
#define TAG_IMAGE_ANGLE_HPP

// Mirror-angle estimation from grayscale images: crop, binary threshold,
// Canny edges, least-squares line through the edge, slope-to-angle. Also a
// synthetic renderer that stands in for benchtop photographs.

#include "tag/model_core.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace tag {

/// Row-major 8-bit raster. Row 0 is the top of the image.
class GrayImage {
 public:
  using Pixels = Eigen::Array<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  GrayImage() = default;
  GrayImage(int width, int height, std::uint8_t fill = 0);
  explicit GrayImage(Pixels pixels) : pixels_(std::move(pixels)) {}

  int width() const { return static_cast<int>(pixels_.cols()); }
  int height() const { return static_cast<int>(pixels_.rows()); }

  std::uint8_t operator()(int row, int col) const { return pixels_(row, col); }
  std::uint8_t& operator()(int row, int col) { return pixels_(row, col); }

  const Pixels& pixels() const { return pixels_; }
  Pixels& pixels() { return pixels_; }

  std::span<const std::uint8_t> data() const {
    return {pixels_.data(), static_cast<std::size_t>(pixels_.size())};
  }

  friend bool operator==(const GrayImage& a, const GrayImage& b) {
    return a.width() == b.width() && a.height() == b.height() && (a.pixels_ == b.pixels_).all();
  }

 private:
  Pixels pixels_;
};

struct PixelCoord {
  int col;
  int row;
  friend bool operator==(const PixelCoord&, const PixelCoord&) = default;
};

struct CropRect {
  int x = 0;
  int y = 0;
  int width = 0;
  int height = 0;
};

struct CannyConfig {
  double low = 100.0;
  double high = 150.0;
  int aperture = 7;
};

struct PipelineConfig {
  CropRect crop;
  int threshold = 125;
  CannyConfig canny;
};

/// Checks 0 < low < high, odd aperture in [3, 31], threshold in [0, 255], and
/// the crop rectangle inside a width x height image.
void validate_pipeline(const PipelineConfig& cfg, int width, int height);

struct EdgeLineFit {
  double slope = 0.0;  // d(row)/d(col)
  double intercept = 0.0;
  int inlier_count = 0;
  double fit_residual_rms = 0.0;  // pixels
  bool degenerate_vertical = false;
};

/// Synthetic mirror-holder silhouette: a bright quadrilateral whose top edge
/// starts at the pivot and runs `edge_length_px` to the right; the body extends
/// `thickness_px` below it. The whole shape rotates by phi about the pivot so
/// the top edge rises to the right (image rows grow downward).
struct RenderParams {
  int width = 570;
  int height = 612;
  double pivot_col = 10.0;
  double pivot_row = 355.0;
  double edge_length_px = 490.0;
  double thickness_px = 250.0;
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;
  CropRect crop{200, 17, 140, 347};
  /// Minimum clearance, in pixels, between the crop and any non-top edge.
  int crop_margin_px = 8;
};

/// Pipeline config whose crop matches the default renderer layout.
PipelineConfig default_pipeline_config();

/// Renders the silhouette at rotation phi (radians, [0, pi/4)). Throws
/// GeometryOutsideCrop if the polygon leaves the image, the top edge does not
/// cross the crop, or another edge comes within crop_margin_px of the crop.
GrayImage render_synthetic_tag(double phi_rad, const RenderParams& params = {});

GrayImage crop_image(const GrayImage& img, const CropRect& rect);

/// I > cut -> 255, I <= cut -> 0.
GrayImage threshold_binary(const GrayImage& img, int cut = 125);

std::vector<PixelCoord> canny_edges(const GrayImage& img, const CannyConfig& cfg = {});

/// Least squares of row on column. Throws InsufficientData for fewer than two
/// distinct points.
EdgeLineFit fit_edge_line(std::span<const PixelCoord> points);

/// 90 deg - atan(|1/m|), in degrees. Vertical fits give 90, horizontal 0.
double angle_from_slope(const EdgeLineFit& fit);

struct AngleEstimate {
  double angle_deg;
  EdgeLineFit fit;
  std::vector<PixelCoord> edges;  // crop coordinates
};

AngleEstimate estimate_angle_detailed(const GrayImage& img, const PipelineConfig& cfg);

/// crop -> threshold -> Canny -> line fit -> angle (degrees).
double estimate_angle(const GrayImage& img, const PipelineConfig& cfg);

// Binary PGM (P5, maxval 255).
std::string encode_pgm(const GrayImage& img);
GrayImage decode_pgm(const std::string& bytes);
GrayImage read_pgm(const std::string& path);
void write_pgm(const std::string& path, const GrayImage& img);

/// "col,row" header followed by one line per edge pixel.
std::string edges_to_csv(std::span<const PixelCoord> points);

}  // namespace tag

#endif  // TAG_IMAGE_ANGLE_HPP
