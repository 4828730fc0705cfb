#pragma once

#include <cstddef>
#include <vector>

#include "uavharvest/errors.hpp"

namespace uavh {

// A 1-D path sampled on a uniform grid t_n = n * step, n = 0..N.
//
// velocities[n] = (positions[n] - positions[n-1]) / step and
// accels[n] = (velocities[n] - velocities[n-1]) / step for n >= 1.
// Index 0 holds the boundary state: velocities[0] is the initial speed and
// accels[0] is unused (kept at zero). A zero step is allowed only for the
// degenerate zero-length trajectory, in which case every array is zero.
struct DiscreteTrajectory {
  double step = 0.0;
  std::vector<double> positions;
  std::vector<double> velocities;
  std::vector<double> accels;

  std::size_t slots() const { return positions.empty() ? 0 : positions.size() - 1; }
  double duration() const { return step * static_cast<double>(slots()); }

  // Builds v_n and a_n from positions by backward differences.
  static DiscreteTrajectory from_positions(double step, std::vector<double> positions,
                                           double initial_velocity = 0.0) {
    if (positions.size() < 2) {
      throw InvalidParameter("positions", "a trajectory needs at least one slot");
    }
    if (!(step >= 0.0)) throw InvalidParameter("step", "must be non-negative");
    DiscreteTrajectory t;
    t.step = step;
    t.positions = std::move(positions);
    const std::size_t n = t.positions.size();
    t.velocities.assign(n, 0.0);
    t.accels.assign(n, 0.0);
    if (step == 0.0) {
      for (double q : t.positions) {
        if (q != t.positions.front()) {
          throw InvalidParameter("step", "zero step requires a stationary path");
        }
      }
      return t;
    }
    t.velocities[0] = initial_velocity;
    for (std::size_t i = 1; i < n; ++i) {
      t.velocities[i] = (t.positions[i] - t.positions[i - 1]) / step;
      t.accels[i] = (t.velocities[i] - t.velocities[i - 1]) / step;
    }
    return t;
  }

  // Stationary trajectory at `position` lasting slots * step.
  static DiscreteTrajectory stationary(std::size_t slots, double step, double position = 0.0) {
    return from_positions(step, std::vector<double>(slots + 1, position));
  }
};

}  // namespace uavh
