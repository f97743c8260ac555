#ifndef TAG_KINEMATICS_HPP
#define TAG_KINEMATICS_HPP

// Stroke -> mirror angle -> reflected-beam endpoint for the TAG mirror, and the
// analytic inverses.
//
// Chain of quantities:
//   t_s (tendon stroke, mm)
//     -> phi   = asin((1 - c) t_s / l)          mirror rotation from rest
//     -> delta = rest_incident + phi            laser incident angle
//     -> theta1 = 2 phi                         reflected-beam deflection
//     -> p = (v1 - v2 tan theta1, v2, 0)        beam endpoint, tip frame
//
// Sign convention: increasing phi moves the endpoint toward -x in the tip
// frame; delta_x reports the unsigned displacement.

#include "tag/model_core.hpp"

#include <cmath>
#include <numbers>

namespace tag {

template <typename Scalar>
struct MirrorState {
  Scalar stroke_mm;
  Scalar phi_rad;
  Scalar incident_angle_rad;
};

enum class Frame { Tip, Base };

template <typename Scalar>
struct LaserEndpoint {
  Eigen::Matrix<Scalar, 3, 1> position_mm;
  Scalar theta1_rad;
  Frame frame;
};

/// phi = asin((1 - c) * t_s / l). Throws UnreachableAngle when the stroke is
/// negative, beyond max_stroke, or the arcsin argument exceeds 1.
template <typename Scalar>
Scalar phi_from_stroke(Scalar stroke_mm, const TagParameters<Scalar>& p) {
  if (!(stroke_mm >= Scalar(0)) || stroke_mm > p.max_stroke_mm) {
    throw DomainError(ErrorKind::UnreachableAngle, "stroke outside [0, max_stroke_mm]");
  }
  const Scalar arg = (Scalar(1) - elongation_coefficient(p)) * stroke_mm / p.fulcrum_length_mm;
  if (arg > Scalar(1)) {
    throw DomainError(ErrorKind::UnreachableAngle, "arcsin argument exceeds 1");
  }
  return std::asin(arg);
}

/// t_s = l sin(phi) / (1 - c), the stroke-decomposition identity solved for t_s.
template <typename Scalar>
Scalar stroke_from_phi(Scalar phi_rad, const TagParameters<Scalar>& p) {
  if (!(phi_rad >= Scalar(0)) || !(phi_rad < std::numbers::pi_v<Scalar> / Scalar(2))) {
    throw DomainError(ErrorKind::UnreachableAngle, "phi outside [0, pi/2)");
  }
  return p.fulcrum_length_mm * std::sin(phi_rad) / (Scalar(1) - elongation_coefficient(p));
}

template <typename Scalar>
Scalar incident_angle(Scalar stroke_mm, const TagParameters<Scalar>& p) {
  return deg_to_rad(p.rest_incident_deg) + phi_from_stroke(stroke_mm, p);
}

template <typename Scalar>
MirrorState<Scalar> mirror_state(Scalar stroke_mm, const TagParameters<Scalar>& p) {
  const Scalar phi = phi_from_stroke(stroke_mm, p);
  return {stroke_mm, phi, deg_to_rad(p.rest_incident_deg) + phi};
}

/// Law of reflection: rotating the mirror by phi deflects the beam by 2 phi.
/// phi >= 45 deg would send the beam parallel to (or away from) the surface.
template <typename Scalar>
Scalar reflection_angle(Scalar phi_rad) {
  if (!(phi_rad >= Scalar(0))) {
    throw DomainError(ErrorKind::BeamParallel, "phi must be non-negative");
  }
  if (!(phi_rad < std::numbers::pi_v<Scalar> / Scalar(4))) {
    throw DomainError(ErrorKind::BeamParallel, "phi >= 45 deg: beam never reaches the scan plane");
  }
  return Scalar(2) * phi_rad;
}

/// Standard DH link transform Rz(theta) Tz(d) Tx(a) Rx(alpha).
template <typename Scalar>
HomogeneousTransform<Scalar> dh_row(Scalar theta, Scalar d, Scalar a, Scalar alpha) {
  using std::cos;
  using std::sin;
  const Scalar ct = cos(theta), st = sin(theta);
  const Scalar ca = cos(alpha), sa = sin(alpha);
  typename HomogeneousTransform<Scalar>::Matrix4 m;
  m << ct, -st * ca, st * sa, a * ct,
       st, ct * ca, -ct * sa, a * st,
       Scalar(0), sa, ca, d,
       Scalar(0), Scalar(0), Scalar(0), Scalar(1);
  return HomogeneousTransform<Scalar>::from_matrix(m);
}

/// Tip-to-endpoint transform from the three DH rows of the TAG chain:
///   r: (theta 0, d 0, a v1, alpha 0)
///   1: (theta1, d 0, a 0, alpha -pi/2)
///   l: (theta 0, d v2 / cos(theta1), a 0, alpha 0)
/// The 1/cos term lets the last "link" stretch until the beam meets the plane.
template <typename Scalar>
HomogeneousTransform<Scalar> dh_transform(Scalar theta1_rad, const LaserGeometry<Scalar>& g) {
  const Scalar c = std::cos(theta1_rad);
  if (!(std::abs(theta1_rad) < std::numbers::pi_v<Scalar> / Scalar(2)) || c <= Scalar(0)) {
    throw DomainError(ErrorKind::Singular, "theta1 at +-pi/2: beam parallel to scan plane");
  }
  const Scalar half_pi = std::numbers::pi_v<Scalar> / Scalar(2);
  return dh_row(Scalar(0), Scalar(0), g.v1_mm, Scalar(0)) *
         dh_row(theta1_rad, Scalar(0), Scalar(0), -half_pi) *
         dh_row(Scalar(0), g.v2_mm / c, Scalar(0), Scalar(0));
}

template <typename Scalar>
LaserEndpoint<Scalar> laser_point(Scalar phi_rad, const LaserGeometry<Scalar>& g,
                                  Frame frame = Frame::Tip) {
  const Scalar theta1 = reflection_angle(phi_rad);
  // Tip-frame point is assigned exactly so y = v2 and z = 0 hold bit-for-bit.
  Eigen::Matrix<Scalar, 3, 1> p(g.v1_mm - g.v2_mm * std::tan(theta1), g.v2_mm, Scalar(0));
  if (frame == Frame::Base) p = g.base_transform.apply(p);
  return {p, theta1, frame};
}

/// Unsigned endpoint displacement from the rest position: v2 tan(2 phi).
template <typename Scalar>
Scalar delta_x(Scalar phi_rad, const LaserGeometry<Scalar>& g) {
  return g.v2_mm * std::tan(reflection_angle(phi_rad));
}

template <typename Scalar>
Scalar ik_phi_from_delta_x(Scalar dx_mm, const LaserGeometry<Scalar>& g) {
  if (!(dx_mm >= Scalar(0))) {
    throw DomainError(ErrorKind::InvalidParameter, "dx must be non-negative");
  }
  return Scalar(0.5) * std::atan(dx_mm / g.v2_mm);
}

template <typename Scalar>
Scalar ik_stroke_from_delta_x(Scalar dx_mm, const LaserGeometry<Scalar>& g,
                              const TagParameters<Scalar>& p) {
  return stroke_from_phi(ik_phi_from_delta_x(dx_mm, g), p);
}

}  // namespace tag

#endif  // TAG_KINEMATICS_HPP
