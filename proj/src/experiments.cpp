#include "tag/experiments.hpp"

#include "tag/kinematics.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <map>
#include <numeric>
#include <random>

namespace tag {
namespace {

std::mt19937_64 trial_stream(std::uint64_t seed, std::uint32_t a, std::uint32_t b = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), a, b};
  return std::mt19937_64(seq);
}

double gaussian(std::mt19937_64& rng, double sigma) {
  // Always consume one draw so the stream layout does not depend on sigma.
  const double z = std::normal_distribution<double>(0.0, 1.0)(rng);
  return sigma * z;
}

std::vector<SweepRecord> run_sweep_trial(const TagParametersd& p, const TagParametersd& rigid,
                                         const SweepOptions& opt, int trial) {
  const int n = sweep_sample_count(opt.step_mm, opt.max_mm);
  const bool measuring = opt.use_images || opt.noise.angle_sigma_deg > 0.0;
  auto rng = trial_stream(opt.seed, static_cast<std::uint32_t>(trial));

  std::vector<SweepRecord> out;
  out.reserve(static_cast<std::size_t>(n));
  std::vector<std::optional<double>> raw_estimate(static_cast<std::size_t>(n));

  for (int k = 0; k < n; ++k) {
    SweepRecord rec;
    rec.trial_id = trial;
    rec.stroke_mm = std::round(k * opt.step_mm * 1e9) / 1e9;  // snap to a 1 nm grid
    const double jitter_deg = gaussian(rng, opt.noise.angle_sigma_deg);
    const std::uint64_t frame_seed = rng();
    try {
      const double phi = phi_from_stroke(rec.stroke_mm, p);
      rec.model_dtheta_deg = rad_to_deg(phi);
      rec.model_dtheta_noelong_deg = rad_to_deg(phi_from_stroke(rec.stroke_mm, rigid));
      if (measuring) {
        // The holder rests on a physical stop, so it cannot rotate below zero.
        const double true_deg = std::max(0.0, rad_to_deg(phi) + jitter_deg);
        if (opt.use_images) {
          RenderParams rp = opt.render;
          rp.noise_sigma = opt.noise.pixel_sigma;
          rp.seed = frame_seed;
          raw_estimate[k] = estimate_angle(render_synthetic_tag(deg_to_rad(true_deg), rp), opt.pipeline);
        } else {
          raw_estimate[k] = true_deg;
        }
      }
    } catch (const DomainError& e) {
      rec.error = e.what();
    }
    out.push_back(std::move(rec));
  }

  // Δθ relative to the first frame of the trial. Model columns start at 0
  // already because phi(0) = 0.
  if (measuring && n > 0) {
    const auto& base = raw_estimate.front();
    for (int k = 0; k < n; ++k) {
      if (!raw_estimate[k]) continue;
      if (!base) {
        if (out[k].error.empty()) out[k].error = "rest frame has no estimate";
        continue;
      }
      out[k].estimated_dtheta_deg = *raw_estimate[k] - *base;
    }
  }
  return out;
}

}  // namespace

int sweep_sample_count(double step_mm, double max_mm) {
  if (!(step_mm > 0.0) || !(max_mm > 0.0)) {
    throw DomainError(ErrorKind::InvalidParameter, "sweep step and max must be positive");
  }
  // Guard against 2.0 / 0.05 = 40.000000000000004.
  return static_cast<int>(std::ceil(max_mm / step_mm - 1e-9));
}

std::vector<SweepRecord> run_stroke_sweep(const TagParametersd& p, const SweepOptions& opt) {
  validate_parameters(p);
  if (opt.max_mm > p.max_stroke_mm) {
    throw DomainError(ErrorKind::InvalidParameter, "sweep max exceeds max_stroke_mm");
  }
  if (opt.trials < 1) throw DomainError(ErrorKind::InvalidParameter, "trials must be >= 1");
  sweep_sample_count(opt.step_mm, opt.max_mm);
  if (opt.use_images) validate_pipeline(opt.pipeline, opt.render.width, opt.render.height);

  TagParametersd rigid = p;
  rigid.spring_constant_n_per_mm = 0.0;

  std::vector<std::vector<SweepRecord>> per_trial(static_cast<std::size_t>(opt.trials));
  if (opt.use_images && opt.trials > 1) {
    std::vector<std::future<std::vector<SweepRecord>>> jobs;
    for (int t = 0; t < opt.trials; ++t) {
      jobs.push_back(std::async(std::launch::async, run_sweep_trial, std::cref(p), std::cref(rigid),
                                std::cref(opt), t));
    }
    for (int t = 0; t < opt.trials; ++t) per_trial[t] = jobs[t].get();
  } else {
    for (int t = 0; t < opt.trials; ++t) per_trial[t] = run_sweep_trial(p, rigid, opt, t);
  }

  std::vector<SweepRecord> all;
  for (auto& trial : per_trial) {
    all.insert(all.end(), std::make_move_iterator(trial.begin()), std::make_move_iterator(trial.end()));
  }
  return all;
}

std::vector<SweepRecord> replay_sweep(std::span<const SweepMeasurement> rows, const TagParametersd& p) {
  validate_parameters(p);
  TagParametersd rigid = p;
  rigid.spring_constant_n_per_mm = 0.0;
  std::vector<SweepRecord> out;
  out.reserve(rows.size());
  for (const auto& row : rows) {
    SweepRecord rec;
    rec.trial_id = row.trial_id;
    rec.stroke_mm = row.stroke_mm;
    rec.estimated_dtheta_deg = row.estimated_dtheta_deg;
    try {
      rec.model_dtheta_deg = rad_to_deg(phi_from_stroke(row.stroke_mm, p));
      rec.model_dtheta_noelong_deg = rad_to_deg(phi_from_stroke(row.stroke_mm, rigid));
    } catch (const DomainError& e) {
      rec.error = e.what();
    }
    out.push_back(std::move(rec));
  }
  return out;
}

double sweep_rmse(std::span<const SweepRecord> records) {
  // Key strokes to the nearest micrometre so 0.1 and 0.1000000001 collide.
  struct Acc {
    double model = 0.0;
    double sum = 0.0;
    int n = 0;
  };
  std::map<long long, Acc> by_stroke;
  for (const auto& r : records) {
    if (!r.model_dtheta_deg || !r.estimated_dtheta_deg) continue;
    auto& acc = by_stroke[std::llround(r.stroke_mm * 1e6)];
    acc.model = *r.model_dtheta_deg;
    acc.sum += *r.estimated_dtheta_deg;
    ++acc.n;
  }
  std::vector<double> model, mean;
  for (const auto& [key, acc] : by_stroke) {
    model.push_back(acc.model);
    mean.push_back(acc.sum / acc.n);
  }
  return rmse(mean, model);
}

// ---------------------------------------------------------------------------

SteeringRecord summarize_steering(double phi_deg, std::vector<double> measured, const LaserGeometryd& g,
                                  const TagParametersd& p) {
  if (measured.empty()) {
    throw DomainError(ErrorKind::InsufficientData, "steering: no measurements for angle");
  }
  const double phi = deg_to_rad(phi_deg);
  SteeringRecord rec;
  rec.phi_deg = phi_deg;
  rec.theoretical_dx_mm = delta_x(phi, g);
  rec.commanded_stroke_mm = stroke_from_phi(phi, p);
  const double n = static_cast<double>(measured.size());
  rec.mean_dx_mm = std::accumulate(measured.begin(), measured.end(), 0.0) / n;
  double ss = 0.0;
  for (double m : measured) ss += (m - rec.mean_dx_mm) * (m - rec.mean_dx_mm);
  rec.std_dx_mm = measured.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  rec.percent_error = 100.0 * (rec.mean_dx_mm - rec.theoretical_dx_mm) / rec.theoretical_dx_mm;
  rec.measured_dx_mm = std::move(measured);
  return rec;
}

std::vector<SteeringRecord> run_laser_steering(const TagParametersd& p, const LaserGeometryd& g,
                                               const SteeringOptions& opt) {
  validate_parameters(p);
  validate_geometry(g);
  if (opt.trials < 1) throw DomainError(ErrorKind::InvalidParameter, "trials must be >= 1");
  if (!(opt.sigma_mm >= 0.0)) throw DomainError(ErrorKind::InvalidParameter, "sigma must be >= 0");
  std::vector<SteeringRecord> out;
  for (std::size_t i = 0; i < opt.angles_deg.size(); ++i) {
    const double phi_deg = opt.angles_deg[i];
    if (!(phi_deg > 0.0) || !(phi_deg < 45.0)) {
      throw DomainError(ErrorKind::BeamParallel, "steering angles must lie in (0, 45) deg");
    }
    const double theory = delta_x(deg_to_rad(phi_deg), g);
    auto rng = trial_stream(opt.seed, static_cast<std::uint32_t>(i), 0x5eedu);
    std::vector<double> measured;
    for (int t = 0; t < opt.trials; ++t) measured.push_back(theory + gaussian(rng, opt.sigma_mm));
    out.push_back(summarize_steering(phi_deg, std::move(measured), g, p));
  }
  return out;
}

std::vector<SteeringRecord> replay_steering(std::span<const SteeringMeasurement> rows,
                                            const LaserGeometryd& g, const TagParametersd& p) {
  std::vector<double> order;
  std::map<double, std::vector<double>> by_angle;
  for (const auto& r : rows) {
    auto [it, inserted] = by_angle.try_emplace(r.phi_deg);
    if (inserted) order.push_back(r.phi_deg);
    it->second.push_back(r.measured_dx_mm);
  }
  std::vector<SteeringRecord> out;
  for (double phi : order) out.push_back(summarize_steering(phi, by_angle[phi], g, p));
  return out;
}

double rmse(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || a.size() != b.size()) {
    throw DomainError(ErrorKind::InsufficientData, "rmse needs two equal-length non-empty series");
  }
  double ss = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) ss += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(ss / static_cast<double>(a.size()));
}

double steering_rmse(std::span<const SteeringRecord> records) {
  std::vector<double> mean, theory;
  for (const auto& r : records) {
    mean.push_back(r.mean_dx_mm);
    theory.push_back(r.theoretical_dx_mm);
  }
  return rmse(mean, theory);
}

}  // namespace tag
