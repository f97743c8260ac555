#include "tag/experiments.hpp"

#include "tag/kinematics.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <random>

namespace tag {
namespace {

constexpr double kDomainPenaltySlope = 10.0;

struct Problem {
  std::span<const CalibrationSample> samples;
  double c_prior;
  double prior_scale;
  double prior_weight;

  // Residual vector: one entry per sample, then the prior on c.
  Eigen::VectorXd residuals(const Eigen::Vector2d& x, Eigen::MatrixXd* jac) const {
    const double l = x[0], c = x[1];
    const Eigen::Index n = static_cast<Eigen::Index>(samples.size());
    Eigen::VectorXd r(n + 1);
    if (jac) jac->resize(n + 1, 2);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double t = samples[i].stroke_mm;
      const double arg = (1.0 - c) * t / l;
      const double darg_dl = -(1.0 - c) * t / (l * l);
      const double darg_dc = -t / l;
      double f, df;
      if (arg >= 1.0) {
        f = std::numbers::pi / 2.0 + kDomainPenaltySlope * (arg - 1.0);
        df = kDomainPenaltySlope;
      } else {
        f = std::asin(arg);
        df = 1.0 / std::sqrt(1.0 - arg * arg);
      }
      r[i] = f - samples[i].phi_rad;
      if (jac) {
        (*jac)(i, 0) = df * darg_dl;
        (*jac)(i, 1) = df * darg_dc;
      }
    }
    r[n] = prior_weight * (c - c_prior) / prior_scale;
    if (jac) {
      (*jac)(n, 0) = 0.0;
      (*jac)(n, 1) = prior_weight / prior_scale;
    }
    return r;
  }

  double data_rmse_deg(const Eigen::Vector2d& x) const {
    const Eigen::VectorXd r = residuals(x, nullptr);
    const Eigen::Index n = r.size() - 1;
    return rad_to_deg(std::sqrt(r.head(n).squaredNorm() / static_cast<double>(n)));
  }
};

// Projects c onto [0, 1); l must stay positive.
std::optional<Eigen::Vector2d> project(Eigen::Vector2d x) {
  if (!x.allFinite() || !(x[0] > 0.0)) return std::nullopt;
  x[1] = std::clamp(x[1], 0.0, 1.0 - 1e-9);
  return x;
}

}  // namespace

CalibrationResult calibrate(std::span<const CalibrationSample> samples, const TagParametersd& init,
                            const CalibrationOptions& opt) {
  if (samples.size() < 4) {
    throw DomainError(ErrorKind::InsufficientData, "calibration needs at least 4 samples");
  }
  const auto [lo, hi] = std::minmax_element(
      samples.begin(), samples.end(),
      [](const CalibrationSample& a, const CalibrationSample& b) { return a.stroke_mm < b.stroke_mm; });
  if (hi->stroke_mm - lo->stroke_mm < 0.5) {
    throw DomainError(ErrorKind::InsufficientData, "calibration samples must span >= 0.5 mm of stroke");
  }
  if (!(init.fulcrum_length_mm > 0.0)) {
    throw DomainError(ErrorKind::InvalidParameter, "initial fulcrum length must be positive");
  }

  const double c0 = elongation_coefficient(init);
  if (!(c0 >= 0.0 && c0 < 1.0)) {
    throw DomainError(ErrorKind::UnreachableConfiguration, "initial elongation coefficient outside [0, 1)");
  }
  const Problem problem{samples, c0, std::max(c0, 1e-3), opt.prior_weight};

  Eigen::Vector2d x(init.fulcrum_length_mm, c0);
  Eigen::MatrixXd jac;
  Eigen::VectorXd r = problem.residuals(x, &jac);
  double cost = r.squaredNorm();
  double lambda = opt.initial_damping;

  CalibrationResult result;
  result.history.push_back({0, x[0], x[1], problem.data_rmse_deg(x)});

  bool first = true;
  for (int it = 1; it <= opt.max_iterations; ++it) {
    result.iterations = it;
    const Eigen::Matrix2d jtj = jac.transpose() * jac;
    const Eigen::Vector2d grad = jac.transpose() * r;

    bool accepted = false;
    while (lambda < 1e20) {
      Eigen::Matrix2d damped = jtj;
      damped.diagonal() += lambda * jtj.diagonal().cwiseMax(1e-12);
      const Eigen::Vector2d step = damped.ldlt().solve(-grad);
      if (first) {
        result.first_step_norm = step.norm();
        first = false;
      }
      if (step.norm() < opt.step_tolerance) {
        result.converged = true;
        break;
      }
      if (const auto candidate = project(x + step)) {
        Eigen::MatrixXd cand_jac;
        const Eigen::VectorXd cand_r = problem.residuals(*candidate, &cand_jac);
        const double cand_cost = cand_r.squaredNorm();
        if (cand_cost < cost) {
          x = *candidate;
          r = cand_r;
          jac = std::move(cand_jac);
          cost = cand_cost;
          lambda = std::max(lambda / 10.0, 1e-12);
          accepted = true;
          result.history.push_back({it, x[0], x[1], problem.data_rmse_deg(x)});
          break;
        }
      }
      lambda *= 10.0;
    }
    if (result.converged || !accepted) break;
  }

  result.fulcrum_length_mm = x[0];
  result.elongation_coefficient = x[1];
  result.residual_rmse_deg = problem.data_rmse_deg(x);
  return result;
}

std::vector<CalibrationSample> synthetic_calibration_samples(const TagParametersd& truth, int count,
                                                             double max_stroke_mm,
                                                             double noise_sigma_deg,
                                                             std::uint64_t seed) {
  if (count < 1) throw DomainError(ErrorKind::InvalidParameter, "sample count must be positive");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<CalibrationSample> out;
  for (int k = 0; k < count; ++k) {
    const double t = count == 1 ? max_stroke_mm : max_stroke_mm * k / (count - 1);
    const double z = noise(rng);
    out.push_back({t, phi_from_stroke(t, truth) + deg_to_rad(noise_sigma_deg * z)});
  }
  return out;
}

}  // namespace tag
