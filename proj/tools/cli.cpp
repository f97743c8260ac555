#include "cli.hpp"

#include "tag/experiments.hpp"
#include "tag/image_angle.hpp"
#include "tag/io.hpp"
#include "tag/kinematics.hpp"
#include "tag/model_core.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <ostream>
#include <sstream>

namespace tag::cli {
namespace {

namespace fs = std::filesystem;

struct ModelOptions {
  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<double> v1;
  std::optional<double> v2;
};

void add_model_options(CLI::App* cmd, ModelOptions& m) {
  cmd->add_option("--config", m.config_path,
                  std::string("key = value parameter file (default: $") + kConfigEnvVar + ")");
  cmd->add_option("--set", m.overrides, "override one parameter, e.g. --set fulcrum_length_mm=2.9");
  cmd->add_option("--v1", m.v1, "source-to-mirror beam segment, mm")->check(CLI::NonNegativeNumber);
  cmd->add_option("--v2", m.v2, "mirror-to-surface distance, mm")->check(CLI::PositiveNumber);
}

ModelConfig resolve_config(ModelOptions& m) {
  ModelConfig cfg;
  if (m.config_path.empty()) {
    if (const char* env = std::getenv(kConfigEnvVar); env && *env) m.config_path = env;
  }
  if (!m.config_path.empty()) cfg = load_config_file(m.config_path);
  for (const auto& kv : m.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw CLI::ValidationError("--set", "expected key=value, got '" + kv + "'");
    apply_config_text(kv.substr(0, eq) + " = " + kv.substr(eq + 1), cfg);
  }
  if (m.v1) cfg.geometry.v1_mm = *m.v1;
  if (m.v2) cfg.geometry.v2_mm = *m.v2;
  validate_parameters(cfg.params);
  validate_geometry(cfg.geometry);
  validate_actuator(cfg.actuator);
  return cfg;
}

std::string fixed(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

nlohmann::json parameter_snapshot(const ModelConfig& cfg) {
  return {
      {"fulcrum_length_mm", cfg.params.fulcrum_length_mm},
      {"spring_constant_n_per_mm", cfg.params.spring_constant_n_per_mm},
      {"wire_length_mm", cfg.params.wire_length_mm},
      {"wire_modulus_gpa", cfg.params.wire_modulus_gpa},
      {"wire_radius_mm", cfg.params.wire_radius_mm},
      {"max_stroke_mm", cfg.params.max_stroke_mm},
      {"rest_incident_deg", cfg.params.rest_incident_deg},
      {"v1_mm", cfg.geometry.v1_mm},
      {"v2_mm", cfg.geometry.v2_mm},
      {"lead_screw_pitch_mm_per_rev", cfg.actuator.lead_screw_pitch_mm_per_rev},
      {"encoder_counts_per_rev", cfg.actuator.encoder_counts_per_rev},
      {"elongation_coefficient", elongation_coefficient(cfg.params)},
  };
}

void write_manifest(const std::string& dir, const std::string& command, const ModelOptions& m,
                    const ModelConfig& cfg, std::optional<std::uint64_t> seed, nlohmann::json settings) {
  nlohmann::json manifest = {
      {"command", command},
      {"tool_version", kVersion},
      {"config_path", m.config_path},
      {"output_dir", dir},
      {"parameters", parameter_snapshot(cfg)},
      {"settings", std::move(settings)},
  };
  manifest["seed"] = seed ? nlohmann::json(*seed) : nlohmann::json(nullptr);
  export_report(dir, "manifest.json", manifest.dump(2) + "\n");
}

std::string format_point(const Eigen::Vector3d& p) {
  return "(" + fixed(p.x()) + ", " + fixed(p.y()) + ", " + fixed(p.z()) + ")";
}

// --- fk ---------------------------------------------------------------------

struct FkOptions {
  ModelOptions model;
  std::optional<double> stroke;
  std::optional<double> phi_deg;
  std::optional<double> revs;
  std::string base_transform;
};

int cmd_fk(FkOptions& o, std::ostream& out) {
  const int given = (o.stroke ? 1 : 0) + (o.phi_deg ? 1 : 0) + (o.revs ? 1 : 0);
  if (given != 1) throw CLI::ValidationError("fk", "give exactly one of --stroke, --phi, --revs");
  ModelConfig cfg = resolve_config(o.model);
  if (!o.base_transform.empty()) cfg.geometry.base_transform = load_transform_file(o.base_transform);

  double stroke = 0.0, phi = 0.0;
  if (o.phi_deg) {
    phi = deg_to_rad(*o.phi_deg);
    stroke = stroke_from_phi(phi, cfg.params);
  } else {
    stroke = o.stroke ? *o.stroke : stroke_from_motor(*o.revs, cfg.actuator);
    phi = phi_from_stroke(stroke, cfg.params);
  }
  const double delta = deg_to_rad(cfg.params.rest_incident_deg) + phi;
  const auto tip = laser_point(phi, cfg.geometry, Frame::Tip);
  const auto base = laser_point(phi, cfg.geometry, Frame::Base);

  out << "stroke: " << fixed(stroke) << " mm\n"
      << "motor: " << fixed(motor_from_stroke(stroke, cfg.actuator)) << " rev\n"
      << "phi: " << fixed(rad_to_deg(phi)) << " deg\n"
      << "incident: " << fixed(rad_to_deg(delta)) << " deg\n"
      << "theta1: " << fixed(rad_to_deg(tip.theta1_rad)) << " deg\n"
      << "delta_x: " << fixed(delta_x(phi, cfg.geometry)) << " mm\n"
      << "endpoint_tip: " << format_point(tip.position_mm) << " mm\n"
      << "endpoint_base: " << format_point(base.position_mm) << " mm\n";
  return kOk;
}

// --- ik ---------------------------------------------------------------------

struct IkOptions {
  ModelOptions model;
  double dx = 0.0;
};

int cmd_ik(IkOptions& o, std::ostream& out) {
  const ModelConfig cfg = resolve_config(o.model);
  const double phi = ik_phi_from_delta_x(o.dx, cfg.geometry);
  const double stroke = stroke_from_phi(phi, cfg.params);
  out << "delta_x: " << fixed(o.dx) << " mm\n"
      << "phi: " << fixed(rad_to_deg(phi)) << " deg\n"
      << "theta1: " << fixed(rad_to_deg(2.0 * phi)) << " deg\n"
      << "stroke: " << fixed(stroke) << " mm\n"
      << "motor: " << fixed(motor_from_stroke(stroke, cfg.actuator)) << " rev\n";
  if (stroke > cfg.params.max_stroke_mm) {
    out << "warning: stroke exceeds max_stroke_mm (" << fixed(cfg.params.max_stroke_mm) << " mm)\n";
  }
  return kOk;
}

// --- sweep ------------------------------------------------------------------

struct SweepCliOptions {
  ModelOptions model;
  SweepOptions sweep;
  std::string out_dir = ".";
  std::string replay;
};

int cmd_sweep(SweepCliOptions& o, std::ostream& out, std::ostream& err) {
  const ModelConfig cfg = resolve_config(o.model);
  std::vector<SweepRecord> records;
  nlohmann::json settings;
  if (!o.replay.empty()) {
    const auto rows = parse_sweep_measurements(read_file(o.replay));
    records = replay_sweep(rows, cfg.params);
    settings = {{"replay", o.replay}};
  } else {
    records = run_stroke_sweep(cfg.params, o.sweep);
    settings = {{"step_mm", o.sweep.step_mm},
                {"max_mm", o.sweep.max_mm},
                {"trials", o.sweep.trials},
                {"angle_noise_deg", o.sweep.noise.angle_sigma_deg},
                {"pixel_noise", o.sweep.noise.pixel_sigma},
                {"images", o.sweep.use_images}};
  }
  export_report(o.out_dir, "sweep.csv", sweep_csv(records));
  write_manifest(o.out_dir, "sweep", o.model, cfg,
                 o.replay.empty() ? std::optional<std::uint64_t>(o.sweep.seed) : std::nullopt, settings);

  const auto failed = std::count_if(records.begin(), records.end(), [](const auto& r) { return !r.error.empty(); });
  out << "records: " << records.size() << "\n";
  if (failed > 0) err << "warning: " << failed << " record(s) carry errors\n";
  const bool has_estimates =
      std::any_of(records.begin(), records.end(), [](const auto& r) { return r.estimated_dtheta_deg.has_value(); });
  if (has_estimates) out << "rmse_trial_mean: " << fixed(sweep_rmse(records)) << " deg\n";
  out << "wrote: " << (fs::path(o.out_dir) / "sweep.csv").string() << "\n";
  return kOk;
}

// --- steer ------------------------------------------------------------------

struct SteerCliOptions {
  ModelOptions model;
  SteeringOptions steer;
  std::string out_dir = ".";
  std::string replay;
};

int cmd_steer(SteerCliOptions& o, std::ostream& out) {
  const ModelConfig cfg = resolve_config(o.model);
  std::vector<SteeringRecord> records;
  nlohmann::json settings;
  if (!o.replay.empty()) {
    const auto rows = parse_steering_measurements(read_file(o.replay));
    records = replay_steering(rows, cfg.geometry, cfg.params);
    settings = {{"replay", o.replay}};
  } else {
    records = run_laser_steering(cfg.params, cfg.geometry, o.steer);
    settings = {{"angles_deg", o.steer.angles_deg}, {"trials", o.steer.trials}, {"sigma_mm", o.steer.sigma_mm}};
  }
  export_report(o.out_dir, "steering.csv", steering_csv(records));
  export_report(o.out_dir, "steering_summary.csv", steering_summary_csv(records));
  write_manifest(o.out_dir, "steer", o.model, cfg,
                 o.replay.empty() ? std::optional<std::uint64_t>(o.steer.seed) : std::nullopt, settings);

  out << "phi_deg  theoretical_mm  mean_mm  std_mm  percent_error\n";
  for (const auto& r : records) {
    out << fixed(r.phi_deg, 2) << "  " << fixed(r.theoretical_dx_mm, 4) << "  " << fixed(r.mean_dx_mm, 4) << "  "
        << fixed(r.std_dx_mm, 4) << "  " << fixed(r.percent_error, 3) << "\n";
  }
  out << "rmse: " << fixed(steering_rmse(records), 4) << " mm\n";
  return kOk;
}

// --- calibrate --------------------------------------------------------------

struct CalibrateCliOptions {
  ModelOptions model;
  std::string samples;
  int count = 40;
  double noise_deg = 0.0;
  std::uint64_t seed = 1;
  std::optional<double> init_l;
  std::string out_dir = ".";
};

int cmd_calibrate(CalibrateCliOptions& o, std::ostream& out) {
  const ModelConfig cfg = resolve_config(o.model);
  std::vector<CalibrationSample> samples;
  if (!o.samples.empty()) {
    samples = parse_calibration_samples(read_file(o.samples));
  } else {
    const double span = cfg.params.max_stroke_mm;
    samples = synthetic_calibration_samples(cfg.params, o.count, span, o.noise_deg, o.seed);
  }
  TagParametersd init = cfg.params;
  if (o.init_l) init.fulcrum_length_mm = *o.init_l;
  const CalibrationResult result = calibrate(samples, init);

  export_report(o.out_dir, "calibration.csv", calibration_csv(result));
  nlohmann::json settings = {{"samples", o.samples.empty() ? std::string("synthetic") : o.samples},
                             {"sample_count", samples.size()},
                             {"noise_deg", o.noise_deg},
                             {"init_l_mm", init.fulcrum_length_mm}};
  write_manifest(o.out_dir, "calibrate", o.model, cfg,
                 o.samples.empty() ? std::optional<std::uint64_t>(o.seed) : std::nullopt, settings);

  out << "l: " << fixed(result.fulcrum_length_mm) << " mm\n"
      << "c: " << fixed(result.elongation_coefficient, 8) << "\n"
      << "residual_rmse: " << fixed(result.residual_rmse_deg) << " deg\n"
      << "iterations: " << result.iterations << "\n"
      << "converged: " << (result.converged ? "yes" : "no") << "\n";
  return kOk;
}

// --- estimate-angle ---------------------------------------------------------

struct EstimateCliOptions {
  std::string input;
  std::vector<int> crop;
  PipelineConfig pipeline = default_pipeline_config();
  std::string edges_dir;
  std::string out_dir;
};

int cmd_estimate(EstimateCliOptions& o, std::ostream& out) {
  if (!o.crop.empty()) {
    if (o.crop.size() != 4) throw CLI::ValidationError("--crop", "expected x,y,width,height");
    o.pipeline.crop = {o.crop[0], o.crop[1], o.crop[2], o.crop[3]};
  }
  std::vector<fs::path> files;
  if (fs::is_directory(o.input)) {
    for (const auto& entry : fs::directory_iterator(o.input)) {
      if (entry.is_regular_file() && entry.path().extension() == ".pgm") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw IoError("no .pgm files in " + o.input);
  } else if (fs::exists(o.input)) {
    files.push_back(o.input);
  } else {
    throw IoError("no such file or directory: " + o.input);
  }

  std::string csv = "file,angle_deg,dtheta_deg\n";
  out << csv;
  std::optional<double> first;
  for (const auto& path : files) {
    const auto est = estimate_angle_detailed(read_pgm(path.string()), o.pipeline);
    if (!first) first = est.angle_deg;
    const std::string line = path.filename().string() + "," + fixed(est.angle_deg) + "," +
                             fixed(est.angle_deg - *first) + "\n";
    out << line;
    csv += line;
    if (!o.edges_dir.empty()) {
      export_report(o.edges_dir, path.stem().string() + "_edges.csv", edges_to_csv(est.edges));
    }
  }
  if (!o.out_dir.empty()) {
    export_report(o.out_dir, "estimates.csv", csv);
    const auto& c = o.pipeline.crop;
    nlohmann::json settings = {{"input", o.input},
                               {"crop", {c.x, c.y, c.width, c.height}},
                               {"threshold", o.pipeline.threshold},
                               {"canny_low", o.pipeline.canny.low},
                               {"canny_high", o.pipeline.canny.high},
                               {"canny_aperture", o.pipeline.canny.aperture}};
    ModelOptions none;
    write_manifest(o.out_dir, "estimate-angle", none, ModelConfig{}, std::nullopt, settings);
  }
  return kOk;
}

// --- render -----------------------------------------------------------------

struct RenderCliOptions {
  double phi_deg = 0.0;
  std::string output;
  double noise = 0.0;
  std::uint64_t seed = 0;
};

int cmd_render(RenderCliOptions& o, std::ostream& out) {
  RenderParams rp;
  rp.noise_sigma = o.noise;
  rp.seed = o.seed;
  const GrayImage img = render_synthetic_tag(deg_to_rad(o.phi_deg), rp);
  const fs::path path(o.output);
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  write_pgm(o.output, img);
  out << "wrote: " << o.output << " (" << img.width() << "x" << img.height() << ", phi " << fixed(o.phi_deg, 3)
      << " deg)\n";
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Tendon-actuated galvanometer kinematics and benchtop simulation", "tagsim"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  FkOptions fk;
  auto* fk_cmd = app.add_subcommand("fk", "stroke or mirror angle -> incident angle, deflection, endpoint");
  add_model_options(fk_cmd, fk.model);
  fk_cmd->add_option("--stroke", fk.stroke, "tendon stroke, mm");
  fk_cmd->add_option("--phi", fk.phi_deg, "mirror rotation, deg");
  fk_cmd->add_option("--revs", fk.revs, "lead-screw revolutions");
  fk_cmd->add_option("--base-transform", fk.base_transform, "file with the 4x4 robot-base transform");

  IkOptions ik;
  auto* ik_cmd = app.add_subcommand("ik", "endpoint displacement -> mirror angle and stroke");
  add_model_options(ik_cmd, ik.model);
  ik_cmd->add_option("--dx", ik.dx, "endpoint displacement, mm")->required()->check(CLI::NonNegativeNumber);

  SweepCliOptions sweep;
  auto* sweep_cmd = app.add_subcommand("sweep", "stroke sweep: model and simulated Δθ per stroke step");
  add_model_options(sweep_cmd, sweep.model);
  sweep_cmd->add_option("--step", sweep.sweep.step_mm, "stroke step, mm")->check(CLI::PositiveNumber);
  sweep_cmd->add_option("--max", sweep.sweep.max_mm, "sweep length, mm")->check(CLI::PositiveNumber);
  sweep_cmd->add_option("--trials", sweep.sweep.trials)->check(CLI::PositiveNumber);
  sweep_cmd->add_option("--seed", sweep.sweep.seed);
  sweep_cmd->add_option("--angle-noise", sweep.sweep.noise.angle_sigma_deg, "mirror-angle jitter sigma, deg")
      ->check(CLI::NonNegativeNumber);
  sweep_cmd->add_option("--pixel-noise", sweep.sweep.noise.pixel_sigma, "image intensity noise sigma")
      ->check(CLI::NonNegativeNumber);
  sweep_cmd->add_flag("--images", sweep.sweep.use_images, "estimate angles from rendered frames");
  sweep_cmd->add_option("--out", sweep.out_dir, "output directory");
  sweep_cmd->add_option("--replay", sweep.replay, "measured CSV (trial_id,stroke_mm,estimated_dtheta_deg)");

  SteerCliOptions steer;
  auto* steer_cmd = app.add_subcommand("steer", "laser-steering study at fixed mirror angles");
  add_model_options(steer_cmd, steer.model);
  steer_cmd->add_option("--angles", steer.steer.angles_deg, "mirror angles, deg")->delimiter(',');
  steer_cmd->add_option("--trials", steer.steer.trials)->check(CLI::PositiveNumber);
  steer_cmd->add_option("--sigma", steer.steer.sigma_mm, "measurement noise sigma, mm")
      ->check(CLI::NonNegativeNumber);
  steer_cmd->add_option("--seed", steer.steer.seed);
  steer_cmd->add_option("--out", steer.out_dir, "output directory");
  steer_cmd->add_option("--replay", steer.replay, "measured CSV (phi_deg,trial_id,measured_dx_mm)");

  CalibrateCliOptions cal;
  auto* cal_cmd = app.add_subcommand("calibrate", "fit fulcrum length and elongation coefficient");
  add_model_options(cal_cmd, cal.model);
  cal_cmd->add_option("--samples", cal.samples, "CSV with stroke_mm and an angle column");
  cal_cmd->add_option("--count", cal.count, "synthetic sample count")->check(CLI::Range(4, 100000));
  cal_cmd->add_option("--noise-deg", cal.noise_deg, "synthetic angle noise sigma, deg")
      ->check(CLI::NonNegativeNumber);
  cal_cmd->add_option("--seed", cal.seed);
  cal_cmd->add_option("--init-l", cal.init_l, "initial fulcrum length, mm")->check(CLI::PositiveNumber);
  cal_cmd->add_option("--out", cal.out_dir, "output directory");

  EstimateCliOptions est;
  auto* est_cmd = app.add_subcommand("estimate-angle", "mirror angle from a PGM image or a directory of them");
  est_cmd->add_option("input", est.input, "PGM file or directory")->required();
  est_cmd->add_option("--crop", est.crop, "x,y,width,height")->delimiter(',');
  est_cmd->add_option("--threshold", est.pipeline.threshold)->check(CLI::Range(0, 255));
  est_cmd->add_option("--canny-low", est.pipeline.canny.low);
  est_cmd->add_option("--canny-high", est.pipeline.canny.high);
  est_cmd->add_option("--aperture", est.pipeline.canny.aperture);
  est_cmd->add_option("--edges-dir", est.edges_dir, "write per-image edge CSVs here");
  est_cmd->add_option("--out", est.out_dir, "write estimates.csv and manifest.json here");

  RenderCliOptions render;
  auto* render_cmd = app.add_subcommand("render", "render a synthetic mirror-holder image (PGM)");
  render_cmd->add_option("--phi", render.phi_deg, "mirror rotation, deg")->required();
  render_cmd->add_option("--out", render.output, "output .pgm path")->required();
  render_cmd->add_option("--noise", render.noise, "intensity noise sigma")->check(CLI::NonNegativeNumber);
  render_cmd->add_option("--seed", render.seed);

  std::vector<std::string> argv_storage{"tagsim"};
  argv_storage.insert(argv_storage.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& a : argv_storage) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
    if (fk_cmd->parsed()) return cmd_fk(fk, out);
    if (ik_cmd->parsed()) return cmd_ik(ik, out);
    if (sweep_cmd->parsed()) return cmd_sweep(sweep, out, err);
    if (steer_cmd->parsed()) return cmd_steer(steer, out);
    if (cal_cmd->parsed()) return cmd_calibrate(cal, out);
    if (est_cmd->parsed()) return cmd_estimate(est, out);
    if (render_cmd->parsed()) return cmd_render(render, out);
    return kUsage;
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << "\n";
    return kOk;
  } catch (const CLI::Error& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const DomainError& e) {
    err << "model error: " << e.what() << "\n";
    return kModelDomain;
  } catch (const IoError& e) {
    err << "i/o error: " << e.what() << "\n";
    return kIo;
  } catch (const fs::filesystem_error& e) {
    err << "i/o error: " << e.what() << "\n";
    return kIo;
  }
}

}  // namespace tag::cli
