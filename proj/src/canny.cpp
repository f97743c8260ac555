#include "tag/image_angle.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <vector>

// Canny contract used here:
//  1. 3x3 binomial smoothing ([1 2 1]/4 separable).
//  2. Gradient by separable Sobel-type kernels of size `aperture`:
//     smoothing taps C(k-1, i) normalised to sum 1, derivative taps
//     C(k-3, i) * [-1 0 1] normalised so the positive taps sum to 1.
//     An ideal step of height h therefore peaks at magnitude h, which puts
//     the low/high thresholds on the 0..255 intensity scale.
//  3. L2 magnitude, direction quantised to 0/45/90/135 deg, non-maximum
//     suppression (strictly greater than one neighbour, >= the other).
//  4. Hysteresis: magnitude > high seeds an edge, > low extends it through
//     8-connected neighbours.
// Borders are replicated for convolution; NMS treats outside pixels as 0.

namespace tag {
namespace {

using Field = Eigen::Array<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

std::vector<double> binomial_row(int n) {
  std::vector<double> row{1.0};
  for (int i = 1; i < n; ++i) {
    std::vector<double> next(row.size() + 1, 0.0);
    for (std::size_t j = 0; j < row.size(); ++j) {
      next[j] += row[j];
      next[j + 1] += row[j];
    }
    row = std::move(next);
  }
  return row;
}

std::vector<double> smoothing_kernel(int size) {
  auto k = binomial_row(size);
  double sum = 0.0;
  for (double v : k) sum += v;
  for (double& v : k) v /= sum;
  return k;
}

std::vector<double> derivative_kernel(int size) {
  const auto base = binomial_row(size - 2);
  std::vector<double> k(static_cast<std::size_t>(size), 0.0);
  // Convolve base with [-1, 0, 1] (increasing index = increasing intensity).
  for (std::size_t j = 0; j < base.size(); ++j) {
    k[j] -= base[j];
    k[j + 2] += base[j];
  }
  double positive = 0.0;
  for (double v : k) positive += std::max(v, 0.0);
  for (double& v : k) v /= positive;
  return k;
}

Field convolve_rows(const Field& in, const std::vector<double>& k) {
  const int rows = static_cast<int>(in.rows());
  const int cols = static_cast<int>(in.cols());
  const int r = static_cast<int>(k.size()) / 2;
  Field out(rows, cols);
  for (int y = 0; y < rows; ++y) {
    for (int x = 0; x < cols; ++x) {
      double acc = 0.0;
      for (int t = -r; t <= r; ++t) {
        acc += k[static_cast<std::size_t>(t + r)] * in(y, std::clamp(x + t, 0, cols - 1));
      }
      out(y, x) = acc;
    }
  }
  return out;
}

Field convolve_cols(const Field& in, const std::vector<double>& k) {
  const int rows = static_cast<int>(in.rows());
  const int cols = static_cast<int>(in.cols());
  const int r = static_cast<int>(k.size()) / 2;
  Field out(rows, cols);
  for (int y = 0; y < rows; ++y) {
    for (int x = 0; x < cols; ++x) {
      double acc = 0.0;
      for (int t = -r; t <= r; ++t) {
        acc += k[static_cast<std::size_t>(t + r)] * in(std::clamp(y + t, 0, rows - 1), x);
      }
      out(y, x) = acc;
    }
  }
  return out;
}

}  // namespace

std::vector<PixelCoord> canny_edges(const GrayImage& img, const CannyConfig& cfg) {
  if (!(cfg.low > 0.0) || !(cfg.low < cfg.high)) {
    throw DomainError(ErrorKind::InvalidParameter, "canny: need 0 < low < high");
  }
  if (cfg.aperture < 3 || cfg.aperture > 31 || cfg.aperture % 2 == 0) {
    throw DomainError(ErrorKind::InvalidParameter, "canny: aperture must be odd in [3, 31]");
  }
  const int rows = img.height();
  const int cols = img.width();
  if (rows == 0 || cols == 0) return {};

  const Field source = img.pixels().cast<double>();
  const auto blur = smoothing_kernel(3);
  const Field smoothed = convolve_cols(convolve_rows(source, blur), blur);

  const auto smooth = smoothing_kernel(cfg.aperture);
  const auto deriv = derivative_kernel(cfg.aperture);
  const Field gx = convolve_cols(convolve_rows(smoothed, deriv), smooth);
  const Field gy = convolve_rows(convolve_cols(smoothed, deriv), smooth);
  const Field mag = (gx.square() + gy.square()).sqrt();

  auto mag_at = [&](int y, int x) {
    return (y < 0 || y >= rows || x < 0 || x >= cols) ? 0.0 : mag(y, x);
  };

  // Non-maximum suppression.
  Field thin = Field::Zero(rows, cols);
  constexpr double kTan22 = 0.41421356237309503;  // tan(22.5 deg)
  for (int y = 0; y < rows; ++y) {
    for (int x = 0; x < cols; ++x) {
      const double m = mag(y, x);
      if (m <= cfg.low) continue;
      const double ax = std::abs(gx(y, x));
      const double ay = std::abs(gy(y, x));
      int dx = 0, dy = 0;
      if (ay <= ax * kTan22) {
        dx = 1;  // gradient ~horizontal: compare left/right
      } else if (ax <= ay * kTan22) {
        dy = 1;  // gradient ~vertical: compare up/down
      } else {
        const bool same_sign = (gx(y, x) > 0.0) == (gy(y, x) > 0.0);
        dx = 1;
        dy = same_sign ? 1 : -1;
      }
      if (m > mag_at(y - dy, x - dx) && m >= mag_at(y + dy, x + dx)) thin(y, x) = m;
    }
  }

  // Hysteresis, 8-connected flood from strong pixels.
  std::vector<std::uint8_t> state(static_cast<std::size_t>(rows) * cols, 0);  // 1 = edge
  std::vector<int> stack;
  for (int y = 0; y < rows; ++y) {
    for (int x = 0; x < cols; ++x) {
      if (thin(y, x) <= cfg.high || state[y * cols + x]) continue;
      state[y * cols + x] = 1;
      stack.push_back(y * cols + x);
      while (!stack.empty()) {
        const int idx = stack.back();
        stack.pop_back();
        const int cy = idx / cols, cx = idx % cols;
        for (int ny = cy - 1; ny <= cy + 1; ++ny) {
          for (int nx = cx - 1; nx <= cx + 1; ++nx) {
            if (ny < 0 || ny >= rows || nx < 0 || nx >= cols) continue;
            const int n = ny * cols + nx;
            if (!state[n] && thin(ny, nx) > cfg.low) {
              state[n] = 1;
              stack.push_back(n);
            }
          }
        }
      }
    }
  }

  std::vector<PixelCoord> edges;
  for (int y = 0; y < rows; ++y) {
    for (int x = 0; x < cols; ++x) {
      if (state[y * cols + x]) edges.push_back({x, y});
    }
  }
  return edges;
}

}  // namespace tag
