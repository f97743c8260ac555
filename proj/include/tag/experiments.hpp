#ifndef TAG_EXPERIMENTS_HPP
#define TAG_EXPERIMENTS_HPP

// Benchtop analyses at desk scale: the stroke sweep (mirror angle vs. tendon
// stroke), the laser-steering study (endpoint displacement at fixed mirror
// angles), their statistics, and a least-squares fit of the stroke->angle
// model to measured data.

#include "tag/image_angle.hpp"
#include "tag/model_core.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace tag {

// ---------------------------------------------------------------------------
// Stroke sweep
// ---------------------------------------------------------------------------

struct SweepRecord {
  int trial_id = 0;
  double stroke_mm = 0.0;
  std::optional<double> model_dtheta_deg;          // with elongation
  std::optional<double> model_dtheta_noelong_deg;  // c = 0
  std::optional<double> estimated_dtheta_deg;
  std::string error;  // empty when the record is complete
};

struct SweepNoise {
  double angle_sigma_deg = 0.0;  // jitter on the true mirror angle
  double pixel_sigma = 0.0;      // additive image noise (image path only)
};

struct SweepOptions {
  double step_mm = 0.05;
  double max_mm = 2.0;
  int trials = 5;
  std::uint64_t seed = 1;
  SweepNoise noise;
  /// Render each frame and run the angle pipeline to obtain the estimate.
  bool use_images = false;
  RenderParams render;
  PipelineConfig pipeline = default_pipeline_config();
};

/// Samples per trial: ceil(max / step). Sample k sits at stroke k * step, so
/// sample 0 is the rest frame every Δθ is measured against.
int sweep_sample_count(double step_mm, double max_mm);

/// Runs `trials` independent sweeps. Each record carries the model Δθ with and
/// without elongation; when a measurement is simulated (image path or angle
/// noise) it also carries the estimated Δθ. Failures on a single frame are
/// recorded in `error` rather than thrown. Each trial draws from its own
/// seeded stream, so results do not depend on scheduling.
std::vector<SweepRecord> run_stroke_sweep(const TagParametersd& p, const SweepOptions& opt = {});

/// Measured row for replay: model columns are filled in by `replay_sweep`.
struct SweepMeasurement {
  int trial_id = 0;
  double stroke_mm = 0.0;
  double estimated_dtheta_deg = 0.0;
};

std::vector<SweepRecord> replay_sweep(std::span<const SweepMeasurement> rows, const TagParametersd& p);

/// Averages estimated Δθ across trials at each stroke, then returns the RMSE
/// against the elongation model. Records missing either value are skipped.
double sweep_rmse(std::span<const SweepRecord> records);

// ---------------------------------------------------------------------------
// Laser steering
// ---------------------------------------------------------------------------

struct SteeringRecord {
  double phi_deg = 0.0;
  double commanded_stroke_mm = 0.0;
  double theoretical_dx_mm = 0.0;
  std::vector<double> measured_dx_mm;
  double mean_dx_mm = 0.0;
  double std_dx_mm = 0.0;  // sample standard deviation (n - 1)
  double percent_error = 0.0;
};

struct SteeringOptions {
  std::vector<double> angles_deg{10.0, 20.0, 30.0};
  int trials = 5;
  double sigma_mm = 0.3;
  std::uint64_t seed = 1;
};

/// Builds the statistics row for one mirror angle. percent_error is
/// 100 * (mean - theoretical) / theoretical: positive means overshoot.
SteeringRecord summarize_steering(double phi_deg, std::vector<double> measured_dx_mm,
                                  const LaserGeometryd& g, const TagParametersd& p);

std::vector<SteeringRecord> run_laser_steering(const TagParametersd& p, const LaserGeometryd& g,
                                               const SteeringOptions& opt = {});

struct SteeringMeasurement {
  double phi_deg = 0.0;
  int trial_id = 0;
  double measured_dx_mm = 0.0;
};

/// Groups measurements by angle (in first-seen order) and summarizes each.
std::vector<SteeringRecord> replay_steering(std::span<const SteeringMeasurement> rows,
                                            const LaserGeometryd& g, const TagParametersd& p);

/// sqrt(mean((a_i - b_i)^2)). Throws InsufficientData on empty or mismatched input.
double rmse(std::span<const double> a, std::span<const double> b);

/// RMSE of per-angle mean displacement against theory.
double steering_rmse(std::span<const SteeringRecord> records);

// ---------------------------------------------------------------------------
// Calibration
// ---------------------------------------------------------------------------

struct CalibrationSample {
  double stroke_mm = 0.0;
  double phi_rad = 0.0;
};

struct CalibrationOptions {
  int max_iterations = 100;
  double step_tolerance = 1e-10;
  /// Weight of the residual w * (c - c_material) / c_material. The data fix
  /// only the ratio (1 - c) / l, so this term decides how the ratio is split;
  /// the optimum has c = c_material for any w > 0.
  double prior_weight = 1.0;
  double initial_damping = 1e-3;
};

struct CalibrationIterate {
  int iteration = 0;
  double l_mm = 0.0;
  double c = 0.0;
  double residual_rmse_deg = 0.0;
};

struct CalibrationResult {
  double fulcrum_length_mm = 0.0;
  double elongation_coefficient = 0.0;
  double residual_rmse_deg = 0.0;
  int iterations = 0;
  bool converged = false;
  double first_step_norm = 0.0;
  std::vector<CalibrationIterate> history;  // initial point plus accepted steps
};

/// Fits (l, c) of phi = asin((1 - c) t / l) by Levenberg-Marquardt damped
/// Gauss-Newton starting from `init`; c is projected onto [0, 1) each step.
/// Needs at least 4 samples spanning 0.5 mm of stroke. Points outside the arcsin domain at the current iterate
/// use the penalised residual pi/2 + 10 (arg - 1) - phi.
CalibrationResult calibrate(std::span<const CalibrationSample> samples, const TagParametersd& init,
                            const CalibrationOptions& opt = {});

/// Noise-free or noisy (stroke, phi) samples generated from the model.
std::vector<CalibrationSample> synthetic_calibration_samples(const TagParametersd& truth, int count,
                                                             double max_stroke_mm,
                                                             double noise_sigma_deg,
                                                             std::uint64_t seed);

// ---------------------------------------------------------------------------
// Reports (CSV)
// ---------------------------------------------------------------------------

std::string sweep_csv(std::span<const SweepRecord> records);
std::string steering_csv(std::span<const SteeringRecord> records);
std::string steering_summary_csv(std::span<const SteeringRecord> records);
std::string calibration_csv(const CalibrationResult& result);

/// Writes `content` atomically to `dir/name`, creating `dir` if needed.
void export_report(const std::string& dir, const std::string& name, const std::string& content);

std::vector<SweepMeasurement> parse_sweep_measurements(const std::string& csv);
std::vector<SteeringMeasurement> parse_steering_measurements(const std::string& csv);
/// Needs a stroke_mm column and one of angle_deg / estimated_dtheta_deg /
/// model_dtheta_deg (first present wins). Blank cells are skipped.
std::vector<CalibrationSample> parse_calibration_samples(const std::string& csv);

}  // namespace tag

#endif  // TAG_EXPERIMENTS_HPP
