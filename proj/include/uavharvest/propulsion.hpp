#pragma once

// Rotary-wing propulsion power and energy for level straight flight and
// vertical climb/descent, including acceleration through the thrust balance.

#include <cmath>
#include <optional>
#include <string>

#include "uavharvest/errors.hpp"
#include "uavharvest/trajectory.hpp"

namespace uavh {

struct AirframeParams {
  double weight_newton = 20.0;           // W
  double air_density = 1.225;            // kg/m^3
  double flat_plate_area = 0.0151;       // m^2, fuselage equivalent
  double rotor_radius = 0.4;             // m
  double rotor_disc_area = 0.503;        // m^2
  double blade_angular_velocity = 300.0; // rad/s
  double fuselage_drag_ratio = 0.6;
  double rotor_solidity = 0.05;
  double profile_drag_coeff = 0.012;
  double induced_power_factor = 0.1;
  double mass_kg = 2.04;
  double gravity = 9.8;                  // m/s^2

  bool operator==(const AirframeParams&) const = default;
};

// Closed-form constants of the power model. p0 is blade profile power,
// p1 induced hover power, p2 the thrust-independent part used in vertical
// flight.
struct PowerConstants {
  double p0_watt = 0.0;
  double p1_watt = 0.0;
  double p2_watt = 0.0;
  double c1 = 0.0;  // s^2/m^2
  double c2 = 0.0;  // s^2/m^2
  double c3 = 0.0;  // s^2/m
  double c4 = 0.0;  // s^2/m^2
  double c5 = 0.0;  // kg/m

  double hover_watt() const { return p0_watt + p1_watt; }
};

enum class VerticalDirection { descent, climb };

inline void validate(const AirframeParams& a) {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw InvalidParameter(name, "must be finite and strictly positive");
    }
  };
  positive(a.weight_newton, "weight_newton");
  positive(a.air_density, "air_density");
  positive(a.flat_plate_area, "flat_plate_area");
  positive(a.rotor_radius, "rotor_radius");
  positive(a.rotor_disc_area, "rotor_disc_area");
  positive(a.blade_angular_velocity, "blade_angular_velocity");
  positive(a.fuselage_drag_ratio, "fuselage_drag_ratio");
  positive(a.rotor_solidity, "rotor_solidity");
  positive(a.profile_drag_coeff, "profile_drag_coeff");
  positive(a.induced_power_factor, "induced_power_factor");
  positive(a.mass_kg, "mass_kg");
  positive(a.gravity, "gravity");
}

// Weight and mass are stored independently; the reference airframe is itself
// ~2% off m*g, so a mismatch is reported rather than rejected.
inline std::optional<std::string> weight_mass_warning(const AirframeParams& a,
                                                      double tolerance = 0.02) {
  const double mg = a.mass_kg * a.gravity;
  const double rel = std::abs(a.weight_newton - mg) / mg;
  if (rel <= tolerance) return std::nullopt;
  return "weight_newton differs from mass_kg*gravity by " + std::to_string(rel * 100.0) + "%";
}

inline PowerConstants derive_constants(const AirframeParams& a) {
  validate(a);
  const double rho = a.air_density;
  const double area = a.rotor_disc_area;
  const double w = a.weight_newton;
  const double tip = a.blade_angular_velocity * a.rotor_radius;
  const double induced_hover = std::pow(w, 1.5) / std::sqrt(2.0 * rho * area);

  PowerConstants c;
  c.p0_watt = a.profile_drag_coeff / 8.0 * rho * a.rotor_solidity * area * tip * tip * tip;
  c.p1_watt = (1.0 + a.induced_power_factor) * induced_hover;
  c.p2_watt = c.p0_watt + a.induced_power_factor * induced_hover;
  c.c1 = 3.0 / (tip * tip);
  c.c2 = rho * a.flat_plate_area / (2.0 * w);
  c.c3 = a.mass_kg / w;
  c.c4 = rho * area / w;
  c.c5 = 0.5 * a.fuselage_drag_ratio * rho * a.rotor_solidity * area;
  return c;
}

// Level-flight power at speed V with along-track acceleration a. The thrust
// tilt term combines fuselage drag and inertia: c2*V^2 + c3*a.
inline double straight_power(double speed, double accel, const PowerConstants& c) {
  if (!(speed >= 0.0)) throw InvalidParameter("speed", "must be non-negative");
  const double v2 = speed * speed;
  const double tilt = c.c2 * v2 + c.c3 * accel;
  const double k2 = 1.0 + tilt * tilt;
  const double cv2 = c.c4 * v2;
  // sqrt(k2 + cv2^2) - cv2 cancels badly at high speed; use the conjugate form.
  const double root = std::sqrt(k2 + cv2 * cv2);
  const double induced_inner = k2 / (root + cv2);
  return c.p0_watt * (1.0 + c.c1 * v2) + c.p1_watt * std::sqrt(k2) * std::sqrt(induced_inner) +
         c.c5 * v2 * speed;
}

// Rotor thrust during vertical flight for an acceleration measured along the
// direction of travel.
inline double vertical_thrust(double accel, VerticalDirection dir, const AirframeParams& a) {
  if (!(std::abs(accel) < a.gravity)) {
    throw ModelDomainError("vertical acceleration magnitude must stay below gravity");
  }
  const double t = dir == VerticalDirection::descent ? a.weight_newton - a.mass_kg * accel
                                                      : a.weight_newton + a.mass_kg * accel;
  if (!(t > 0.0)) throw ModelDomainError("vertical flight requires positive rotor thrust");
  return t;
}

// Momentum-theory radical (T/2) * sqrt(V^2 + 2T/(rho A)).
inline double vertical_radical(double speed, double thrust, const AirframeParams& a) {
  return 0.5 * thrust * std::sqrt(speed * speed + 2.0 * thrust / (a.air_density * a.rotor_disc_area));
}

inline double vertical_power(double speed, double accel, VerticalDirection dir,
                             const PowerConstants& c, const AirframeParams& a) {
  if (!(speed >= 0.0)) throw InvalidParameter("speed", "must be non-negative");
  const double thrust = vertical_thrust(accel, dir, a);
  return c.p2_watt + 0.5 * thrust * speed + vertical_radical(speed, thrust, a);
}

// Left-endpoint rectangle sum over slots n = 1..N of step * P(v_n, a_n).
// Slots flown backwards are evaluated at |v| with the acceleration mirrored.
inline double straight_energy(const DiscreteTrajectory& t, const PowerConstants& c) {
  double e = 0.0;
  for (std::size_t n = 1; n < t.positions.size(); ++n) {
    const double v = t.velocities[n];
    const double a = v < 0.0 ? -t.accels[n] : t.accels[n];
    e += straight_power(std::abs(v), a, c);
  }
  return e * t.step;
}

// Energy for a vertical leg with positions measured along the direction of
// travel. The W*v/2 and m*a*v/2 parts are integrated exactly into boundary
// terms; the radical is summed per slot.
inline double vertical_energy(const DiscreteTrajectory& t, VerticalDirection dir,
                              const PowerConstants& c, const AirframeParams& a) {
  if (t.slots() == 0) return 0.0;
  const double sign = dir == VerticalDirection::descent ? -1.0 : 1.0;
  const double v0 = t.velocities.front();
  const double v1 = t.velocities.back();
  double e = c.p2_watt * t.duration() +
             0.5 * a.weight_newton * (t.positions.back() - t.positions.front()) +
             sign * 0.25 * a.mass_kg * (v1 * v1 - v0 * v0);
  double radical = 0.0;
  for (std::size_t n = 1; n < t.positions.size(); ++n) {
    const double thrust = vertical_thrust(t.accels[n], dir, a);
    radical += vertical_radical(std::abs(t.velocities[n]), thrust, a);
  }
  return e + radical * t.step;
}

}  // namespace uavh
