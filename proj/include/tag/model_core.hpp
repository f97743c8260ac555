#ifndef TAG_MODEL_CORE_HPP
#define TAG_MODEL_CORE_HPP

// Physical parameters, unit conventions, and the rigid transform shared by the
// tendon-actuated galvanometer (TAG) toolkit.
//
// Units: lengths in mm, stiffness in N/mm, modulus in GPa. Angles are radians
// everywhere in code; degrees appear only at I/O boundaries (config file, CLI,
// CSV columns suffixed _deg).

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace tag {

enum class ErrorKind {
  InvalidParameter,
  UnreachableConfiguration,
  UnreachableAngle,
  BeamParallel,
  Singular,
  InvalidTransform,
  NoEdge,
  InsufficientData,
  GeometryOutsideCrop,
};

/// Raised when an input lies outside the model's domain.
class DomainError : public std::domain_error {
 public:
  DomainError(ErrorKind kind, const std::string& what)
      : std::domain_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// File-system or parse failure.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

template <typename Scalar>
constexpr Scalar deg_to_rad(Scalar deg) {
  return deg * std::numbers::pi_v<Scalar> / Scalar(180);
}

template <typename Scalar>
constexpr Scalar rad_to_deg(Scalar rad) {
  return rad * Scalar(180) / std::numbers::pi_v<Scalar>;
}

// ---------------------------------------------------------------------------
// HomogeneousTransform
// ---------------------------------------------------------------------------

/// 4x4 rigid transform [R p; 0 1]. Instances built through `from_matrix` are
/// checked for orthonormal R with det +1 and an exact (0,0,0,1) bottom row.
template <typename Scalar>
class HomogeneousTransform {
 public:
  using Matrix4 = Eigen::Matrix<Scalar, 4, 4>;
  using Matrix3 = Eigen::Matrix<Scalar, 3, 3>;
  using Vector3 = Eigen::Matrix<Scalar, 3, 1>;

  static constexpr double kRigidTolerance = 1e-9;

  HomogeneousTransform() : m_(Matrix4::Identity()) {}

  static HomogeneousTransform identity() { return {}; }

  static HomogeneousTransform from_matrix(const Matrix4& m) {
    if (!is_rigid(m)) {
      throw DomainError(ErrorKind::InvalidTransform,
                        "matrix is not a rigid homogeneous transform");
    }
    return HomogeneousTransform(m);
  }

  static HomogeneousTransform from_parts(const Matrix3& rotation, const Vector3& translation) {
    Matrix4 m = Matrix4::Identity();
    m.template topLeftCorner<3, 3>() = rotation;
    m.template topRightCorner<3, 1>() = translation;
    return from_matrix(m);
  }

  static bool is_rigid(const Matrix4& m) {
    if (!m.allFinite()) return false;
    if (m(3, 0) != Scalar(0) || m(3, 1) != Scalar(0) || m(3, 2) != Scalar(0) ||
        m(3, 3) != Scalar(1)) {
      return false;
    }
    const Matrix3 r = m.template topLeftCorner<3, 3>();
    const Scalar ortho_err = (r.transpose() * r - Matrix3::Identity()).cwiseAbs().maxCoeff();
    return ortho_err <= Scalar(kRigidTolerance) &&
           std::abs(r.determinant() - Scalar(1)) <= Scalar(kRigidTolerance);
  }

  const Matrix4& matrix() const { return m_; }
  Matrix3 rotation() const { return m_.template topLeftCorner<3, 3>(); }
  Vector3 translation() const { return m_.template topRightCorner<3, 1>(); }

  Vector3 apply(const Vector3& point) const { return rotation() * point + translation(); }

  HomogeneousTransform inverse() const {
    const Matrix3 rt = rotation().transpose();
    Matrix4 m = Matrix4::Identity();
    m.template topLeftCorner<3, 3>() = rt;
    m.template topRightCorner<3, 1>() = -rt * translation();
    return HomogeneousTransform(m);
  }

  friend HomogeneousTransform operator*(const HomogeneousTransform& a,
                                        const HomogeneousTransform& b) {
    Matrix4 m = a.m_ * b.m_;
    m.template bottomRows<1>() << Scalar(0), Scalar(0), Scalar(0), Scalar(1);
    return HomogeneousTransform(m);
  }

 private:
  explicit HomogeneousTransform(const Matrix4& m) : m_(m) {}
  Matrix4 m_;
};

using Transformd = HomogeneousTransform<double>;

// ---------------------------------------------------------------------------
// Parameter sets
// ---------------------------------------------------------------------------

template <typename Scalar>
struct TagParameters {
  Scalar fulcrum_length_mm = Scalar(2.83);
  Scalar spring_constant_n_per_mm = Scalar(0.269);
  Scalar wire_length_mm = Scalar(142);
  Scalar wire_modulus_gpa = Scalar(53.97);
  Scalar wire_radius_mm = Scalar(0.178);
  Scalar max_stroke_mm = Scalar(2.0);
  Scalar rest_incident_deg = Scalar(45);

  static TagParameters nominal() { return {}; }
};

template <typename Scalar>
struct LaserGeometry {
  Scalar v1_mm = Scalar(0);
  Scalar v2_mm = Scalar(8.56);
  HomogeneousTransform<Scalar> base_transform;
};

struct ActuatorConfig {
  double lead_screw_pitch_mm_per_rev = 0.6;
  int encoder_counts_per_rev = 1200;
};

using TagParametersd = TagParameters<double>;
using LaserGeometryd = LaserGeometry<double>;

/// Dimensionless tendon-elongation coefficient c = 2 Ks L / (E pi r^2).
/// E is converted from GPa to N/mm^2 so c is unitless.
template <typename Scalar>
Scalar elongation_coefficient(const TagParameters<Scalar>& p) {
  const Scalar modulus_n_per_mm2 = p.wire_modulus_gpa * Scalar(1000);
  const Scalar area_mm2 = std::numbers::pi_v<Scalar> * p.wire_radius_mm * p.wire_radius_mm;
  return Scalar(2) * p.spring_constant_n_per_mm * p.wire_length_mm / (modulus_n_per_mm2 * area_mm2);
}

/// Returns `p` unchanged when every invariant holds, throws DomainError otherwise.
/// Spring constant may be zero (rigid-tendon limit); everything else must be > 0.
template <typename Scalar>
const TagParameters<Scalar>& validate_parameters(const TagParameters<Scalar>& p) {
  auto require_positive = [](Scalar v, const char* name) {
    if (!(v > Scalar(0)) || !std::isfinite(static_cast<double>(v))) {
      throw DomainError(ErrorKind::InvalidParameter, std::string(name) + " must be positive");
    }
  };
  require_positive(p.fulcrum_length_mm, "fulcrum_length_mm");
  require_positive(p.wire_length_mm, "wire_length_mm");
  require_positive(p.wire_modulus_gpa, "wire_modulus_gpa");
  require_positive(p.wire_radius_mm, "wire_radius_mm");
  require_positive(p.max_stroke_mm, "max_stroke_mm");
  require_positive(p.rest_incident_deg, "rest_incident_deg");
  if (!(p.spring_constant_n_per_mm >= Scalar(0))) {
    throw DomainError(ErrorKind::InvalidParameter, "spring_constant_n_per_mm must be non-negative");
  }
  if (!(p.max_stroke_mm < p.fulcrum_length_mm)) {
    throw DomainError(ErrorKind::UnreachableConfiguration,
                      "max_stroke_mm must be shorter than fulcrum_length_mm");
  }
  const Scalar c = elongation_coefficient(p);
  if (!(c < Scalar(1))) {
    throw DomainError(ErrorKind::UnreachableConfiguration,
                      "elongation coefficient >= 1: wire too compliant for the model");
  }
  if ((Scalar(1) - c) * p.max_stroke_mm / p.fulcrum_length_mm > Scalar(1)) {
    throw DomainError(ErrorKind::UnreachableConfiguration,
                      "arcsin argument exceeds 1 at max stroke");
  }
  return p;
}

template <typename Scalar>
void validate_geometry(const LaserGeometry<Scalar>& g) {
  if (!(g.v1_mm >= Scalar(0))) {
    throw DomainError(ErrorKind::InvalidParameter, "v1_mm must be non-negative");
  }
  if (!(g.v2_mm > Scalar(0))) {
    throw DomainError(ErrorKind::InvalidParameter, "v2_mm must be positive");
  }
  if (!HomogeneousTransform<Scalar>::is_rigid(g.base_transform.matrix())) {
    throw DomainError(ErrorKind::InvalidTransform, "base transform is not rigid");
  }
}

void validate_actuator(const ActuatorConfig& cfg);

/// Lead-screw map: one motor revolution advances the wire by one pitch.
inline double stroke_from_motor(double revs, const ActuatorConfig& cfg) {
  return revs * cfg.lead_screw_pitch_mm_per_rev;
}

inline double motor_from_stroke(double stroke_mm, const ActuatorConfig& cfg) {
  return stroke_mm / cfg.lead_screw_pitch_mm_per_rev;
}

inline double revs_from_counts(long long counts, const ActuatorConfig& cfg) {
  return static_cast<double>(counts) / cfg.encoder_counts_per_rev;
}

// ---------------------------------------------------------------------------
// Configuration file
// ---------------------------------------------------------------------------

struct ModelConfig {
  TagParametersd params;
  LaserGeometryd geometry;
  ActuatorConfig actuator;
};

/// Applies `key = value` lines onto `cfg`. Blank lines and `#` comments are
/// ignored; unknown keys and malformed numbers raise IoError.
void apply_config_text(const std::string& text, ModelConfig& cfg);

ModelConfig load_config_file(const std::string& path);

std::string to_config_text(const ModelConfig& cfg);

/// Reads 16 whitespace-separated numbers (row-major) and validates rigidity.
Transformd load_transform_file(const std::string& path);

}  // namespace tag

#endif  // TAG_MODEL_CORE_HPP
