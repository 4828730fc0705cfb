#pragma once

// Rest-to-rest velocity profiles, their discretization on a uniform time grid
// and kinematic feasibility checks.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "uavharvest/errors.hpp"
#include "uavharvest/propulsion.hpp"
#include "uavharvest/trajectory.hpp"

namespace uavh {

struct KinematicLimits {
  double v_max = 30.0;  // m/s
  double a_max = 5.0;   // m/s^2

  bool operator==(const KinematicLimits&) const = default;
};

inline void validate(const KinematicLimits& l) {
  if (!(l.v_max > 0.0) || !std::isfinite(l.v_max)) {
    throw InvalidParameter("v_max", "must be finite and strictly positive");
  }
  if (!(l.a_max > 0.0) || !std::isfinite(l.a_max)) {
    throw InvalidParameter("a_max", "must be finite and strictly positive");
  }
}

enum class ProfileShape { triangle, trapezoid };

// Accelerate at `accel`, optionally cruise at `peak_speed`, decelerate at
// `accel` to rest.
struct VelocityProfile {
  ProfileShape shape = ProfileShape::triangle;
  double distance = 0.0;
  double duration = 0.0;
  double peak_speed = 0.0;
  double accel = 0.0;

  double ramp_time() const { return accel > 0.0 ? peak_speed / accel : 0.0; }

  double position_at(double t) const {
    if (t <= 0.0) return 0.0;
    if (t >= duration) return distance;
    const double tr = ramp_time();
    if (t < tr) return 0.5 * accel * t * t;
    const double ramp_dist = 0.5 * accel * tr * tr;
    const double cruise_end = duration - tr;
    if (t <= cruise_end) return ramp_dist + peak_speed * (t - tr);
    const double left = duration - t;
    return distance - 0.5 * accel * left * left;
  }

  double speed_at(double t) const {
    if (t <= 0.0 || t >= duration) return 0.0;
    const double tr = ramp_time();
    if (t < tr) return accel * t;
    if (t <= duration - tr) return peak_speed;
    return accel * (duration - t);
  }
};

// The triangle/trapezoid profile at the acceleration limit. Triangle when the
// distance is too short to reach v_max.
inline VelocityProfile feasible_profile(double distance, const KinematicLimits& limits) {
  validate(limits);
  if (!(distance >= 0.0) || !std::isfinite(distance)) {
    throw InvalidParameter("distance", "must be finite and non-negative");
  }
  VelocityProfile p;
  p.distance = distance;
  p.accel = limits.a_max;
  const double switch_distance = limits.v_max * limits.v_max / limits.a_max;
  if (distance < switch_distance) {
    p.shape = ProfileShape::triangle;
    p.duration = 2.0 * std::sqrt(distance / limits.a_max);
    p.peak_speed = limits.a_max * p.duration / 2.0;
  } else {
    p.shape = ProfileShape::trapezoid;
    p.duration = distance / limits.v_max + limits.v_max / limits.a_max;
    p.peak_speed = limits.v_max;
  }
  return p;
}

// Symmetric trapezoid that covers `distance` in exactly `duration` using
// acceleration `accel`; falls back to a triangle when the ramps meet.
inline VelocityProfile profile_for_duration(double distance, double duration, double accel) {
  VelocityProfile p;
  p.distance = distance;
  p.duration = duration;
  p.accel = accel;
  if (distance <= 0.0 || duration <= 0.0) {
    p.duration = std::max(duration, 0.0);
    return p;
  }
  const double disc = accel * accel * duration * duration - 4.0 * accel * distance;
  if (disc <= 0.0) {
    p.shape = ProfileShape::triangle;
    p.accel = 4.0 * distance / (duration * duration);
    p.peak_speed = p.accel * duration / 2.0;
    return p;
  }
  p.shape = ProfileShape::trapezoid;
  p.peak_speed = 0.5 * (accel * duration - std::sqrt(disc));
  return p;
}

// Samples the profile at t_n = n*step for n <= N-1 with step = duration/(N-1);
// the last slot holds position so the trajectory ends at rest. Velocities and
// accelerations are the backward differences of the samples, so they are
// averages of the analytic ones and never exceed the profile's limits.
inline DiscreteTrajectory discretize(const VelocityProfile& profile, std::size_t slots) {
  if (slots < 2) throw InvalidParameter("slots", "at least 2 slots are required");
  if (profile.duration <= 0.0 || profile.distance <= 0.0) {
    return DiscreteTrajectory::stationary(slots, 0.0, 0.0);
  }
  const double step = profile.duration / static_cast<double>(slots - 1);
  std::vector<double> q(slots + 1);
  for (std::size_t n = 0; n + 1 < slots; ++n) q[n] = profile.position_at(step * static_cast<double>(n));
  q[slots - 1] = profile.distance;
  q[slots] = profile.distance;
  return DiscreteTrajectory::from_positions(step, std::move(q));
}

// Samples the profile with a given step and holds the final position until
// `slots` slots are filled. Requires (slots - 1) * step >= profile.duration.
inline DiscreteTrajectory discretize_padded(const VelocityProfile& profile, double step,
                                            std::size_t slots) {
  if (slots < 2) throw InvalidParameter("slots", "at least 2 slots are required");
  if (!(step > 0.0)) throw InvalidParameter("step", "must be strictly positive");
  if (static_cast<double>(slots - 1) * step < profile.duration * (1.0 - 1e-12)) {
    throw InvalidParameter("slots", "horizon shorter than the profile");
  }
  std::vector<double> q(slots + 1);
  for (std::size_t n = 0; n <= slots; ++n) {
    const double t = step * static_cast<double>(n);
    q[n] = t >= profile.duration ? profile.distance : profile.position_at(t);
  }
  q[slots - 1] = profile.distance;
  q[slots] = profile.distance;
  return DiscreteTrajectory::from_positions(step, std::move(q));
}

// Slot count targeting `target_step` seconds per slot, clamped to
// [min_slots, max_slots].
inline std::size_t default_slot_count(double duration, double target_step = 0.25,
                                      std::size_t min_slots = 40, std::size_t max_slots = 400) {
  if (!(duration > 0.0)) return min_slots;
  const auto n = static_cast<std::size_t>(std::ceil(duration / target_step));
  return std::clamp(n, min_slots, max_slots);
}

enum class ViolationKind { velocity, acceleration, start_position, end_position, start_velocity,
                           end_velocity, finite_difference };

inline const char* to_string(ViolationKind k) {
  switch (k) {
    case ViolationKind::velocity: return "velocity";
    case ViolationKind::acceleration: return "acceleration";
    case ViolationKind::start_position: return "start_position";
    case ViolationKind::end_position: return "end_position";
    case ViolationKind::start_velocity: return "start_velocity";
    case ViolationKind::end_velocity: return "end_velocity";
    case ViolationKind::finite_difference: return "finite_difference";
  }
  return "unknown";
}

struct Violation {
  ViolationKind kind;
  std::size_t index;
  double magnitude;  // amount by which the constraint is exceeded
};

struct ValidationReport {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
  std::size_t count(ViolationKind k) const {
    return static_cast<std::size_t>(std::count_if(violations.begin(), violations.end(),
                                                  [k](const Violation& v) { return v.kind == k; }));
  }
  std::string summary() const {
    std::string s;
    for (const auto& v : violations) {
      if (!s.empty()) s += "; ";
      s += std::string(to_string(v.kind)) + "[" + std::to_string(v.index) + "] by " +
           std::to_string(v.magnitude);
    }
    return s;
  }
};

struct ValidationTolerances {
  double relative = 1e-9;   // on limits
  double position = 1e-6;   // m, on endpoints
  double velocity = 1e-9;   // m/s, on rest-to-rest boundaries
};

inline ValidationReport validate(const DiscreteTrajectory& t, const KinematicLimits& limits,
                                 std::pair<double, double> endpoints, bool rest_to_rest,
                                 const ValidationTolerances& tol = {}) {
  ValidationReport r;
  const std::size_t n = t.positions.size();
  if (n < 2 || t.velocities.size() != n || t.accels.size() != n) {
    r.violations.push_back({ViolationKind::finite_difference, 0, 1.0});
    return r;
  }
  const double v_lim = limits.v_max * (1.0 + tol.relative);
  const double a_lim = limits.a_max * (1.0 + tol.relative);
  for (std::size_t i = 1; i < n; ++i) {
    if (t.step > 0.0) {
      const double v = (t.positions[i] - t.positions[i - 1]) / t.step;
      const double a = (t.velocities[i] - t.velocities[i - 1]) / t.step;
      const double dv = std::abs(v - t.velocities[i]);
      const double da = std::abs(a - t.accels[i]);
      if (dv > 1e-12 * (1.0 + std::abs(v)) || da > 1e-12 * (1.0 + std::abs(a))) {
        r.violations.push_back({ViolationKind::finite_difference, i, std::max(dv, da)});
      }
    }
    const double av = std::abs(t.velocities[i]);
    if (av > v_lim) r.violations.push_back({ViolationKind::velocity, i, av - limits.v_max});
    const double aa = std::abs(t.accels[i]);
    if (aa > a_lim) r.violations.push_back({ViolationKind::acceleration, i, aa - limits.a_max});
  }
  const double s0 = std::abs(t.positions.front() - endpoints.first);
  if (s0 > tol.position) r.violations.push_back({ViolationKind::start_position, 0, s0});
  const double s1 = std::abs(t.positions.back() - endpoints.second);
  if (s1 > tol.position) r.violations.push_back({ViolationKind::end_position, n - 1, s1});
  if (rest_to_rest) {
    const double v0 = std::abs(t.velocities.front());
    if (v0 > tol.velocity) r.violations.push_back({ViolationKind::start_velocity, 0, v0});
    const double v1 = std::abs(t.velocities.back());
    if (v1 > tol.velocity) r.violations.push_back({ViolationKind::end_velocity, n - 1, v1});
  }
  return r;
}

// Horizon E/(P0+P1) derived from a feasible segment energy.
inline double fly_time_bound(double feasible_energy, const PowerConstants& c) {
  if (!(feasible_energy > 0.0)) {
    throw InvalidParameter("feasible_energy", "must be strictly positive");
  }
  return feasible_energy / c.hover_watt();
}

}  // namespace uavh
