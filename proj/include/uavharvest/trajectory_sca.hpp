#pragma once

// Successive convex approximation of minimum-energy rest-to-rest legs.
//
// Straight legs: the induced-power term is written as P1 (1 + A^2) / B with
// slacks A >= |c2 v^2 + c3 a| and B^2 <= sqrt(1 + A^2 + c4^2 v^4) + c4 v^2.
// The concave pieces are replaced by first-order Taylor bounds around the
// previous iterate, giving a convex subproblem whose optimum can only lower
// the true energy.
//
// Vertical legs: the radical (T/2) sqrt(v^2 + 2T/(rho A)) becomes (T/2) X
// with X^2 >= v^2 + 2T/(rho A); the bilinear a*X product is bounded above
// through the difference-of-squares identity.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "uavharvest/barrier_solver.hpp"
#include "uavharvest/errors.hpp"
#include "uavharvest/kinematics.hpp"
#include "uavharvest/propulsion.hpp"
#include "uavharvest/trajectory.hpp"

namespace uavh {

enum class DurationRule { lemma2_bound, multiple_of_feasible };

struct ScaSettings {
  int max_outer_iters = 50;
  double objective_tol = 1e-4;      // relative decrease that ends the loop
  double subproblem_kkt_tol = 1e-3; // absolute duality gap / KKT residual, J
  std::size_t slots = 0;            // 0: derive from slot_step
  double slot_step = 0.25;          // s
  std::size_t min_slots = 40;
  std::size_t max_slots = 400;
  DurationRule duration_rule = DurationRule::lemma2_bound;
  double duration_multiple = 1.5;
  double padding_speed = 1e-3;      // m/s
  double padding_position = 1e-2;   // m

  bool operator==(const ScaSettings&) const = default;
};

inline void validate(const ScaSettings& s) {
  if (s.max_outer_iters < 1) throw InvalidParameter("max_outer_iters", "must be >= 1");
  if (!(s.objective_tol > 0.0)) throw InvalidParameter("objective_tol", "must be positive");
  if (!(s.subproblem_kkt_tol > 0.0)) throw InvalidParameter("subproblem_kkt_tol", "must be positive");
  if (!(s.slot_step > 0.0)) throw InvalidParameter("slot_step", "must be positive");
  if (s.min_slots < 4) throw InvalidParameter("min_slots", "must be >= 4");
  if (s.max_slots < s.min_slots) throw InvalidParameter("max_slots", "must be >= min_slots");
  if (s.slots != 0 && s.slots < 4) throw InvalidParameter("slots", "must be 0 or >= 4");
  if (!(s.duration_multiple > 1.0)) throw InvalidParameter("duration_multiple", "must exceed 1");
}

struct ScaTrace {
  std::vector<double> objective;     // true discrete energy of each accepted iterate, J
  std::vector<double> max_residual;  // largest relative slack residual of that iterate
  std::vector<double> duality_gap;   // of the subproblem that produced the iterate
  std::vector<double> kkt_residual;
  bool degraded = false;             // some subproblem hit its iteration cap
  bool converged = false;            // stopped on objective_tol
};

inline void write_trace_csv(std::ostream& os, const ScaTrace& trace) {
  os << "iter,objective_J,max_residual\n";
  os.precision(17);
  for (std::size_t i = 0; i < trace.objective.size(); ++i) {
    os << i << ',' << trace.objective[i] << ',' << trace.max_residual[i] << '\n';
  }
}

// Upper bound on the product x*y, tight at (x0, y0):
//   x y = ((x+y)^2 - (x-y)^2)/4 <= ((x+y)^2 - 2(x0-y0)(x-y) + (x0-y0)^2)/4.
inline double product_upper_bound(double x, double y, double x0, double y0) {
  const double s = x + y;
  const double d0 = x0 - y0;
  return 0.25 * (s * s - 2.0 * d0 * (x - y) + d0 * d0);
}

// Lower bound on sqrt(1 + A^2 + c4^2 v^4) + c4 v^2 (jointly convex in (A, v)),
// tight at (A0, v0).
inline double radical_lower_bound(double A, double v, double A0, double v0, double c4) {
  const double s0 = std::sqrt(1.0 + A0 * A0 + c4 * c4 * v0 * v0 * v0 * v0);
  return s0 + c4 * v0 * v0 + (A0 * (A - A0) + 2.0 * c4 * c4 * v0 * v0 * v0 * (v - v0)) / s0 +
         2.0 * c4 * v0 * (v - v0);
}

namespace sca_detail {

using convex::GradEntry;
using convex::HessEntry;

// Affine function of at most three variables.
struct Affine {
  double c = 0.0;
  std::array<GradEntry, 3> e{};
  int n = 0;

  double eval(const Eigen::VectorXd& x) const {
    double r = c;
    for (int i = 0; i < n; ++i) r += e[i].value * x[e[i].index];
    return r;
  }
  void add(int idx, double w) {
    for (int i = 0; i < n; ++i) {
      if (e[i].index == idx) {
        e[i].value += w;
        return;
      }
    }
    e[n++] = {idx, w};
  }
  Affine scaled(double s) const {
    Affine r = *this;
    r.c *= s;
    for (int i = 0; i < n; ++i) r.e[i].value *= s;
    return r;
  }
};

// Collects gradient and Hessian entries of one term.
struct Term {
  std::array<GradEntry, 8> g{};
  int ng = 0;
  std::array<HessEntry, 24> h{};
  int nh = 0;

  void grad(int idx, double w) {
    if (w == 0.0) return;
    for (int i = 0; i < ng; ++i) {
      if (g[i].index == idx) {
        g[i].value += w;
        return;
      }
    }
    g[ng++] = {idx, w};
  }
  void grad(const Affine& a, double w) {
    for (int i = 0; i < a.n; ++i) grad(a.e[i].index, w * a.e[i].value);
  }
  void hess(int r, int c, double w) {
    if (w == 0.0) return;
    if (r < c) std::swap(r, c);
    for (int i = 0; i < nh; ++i) {
      if (h[i].row == r && h[i].col == c) {
        h[i].value += w;
        return;
      }
    }
    h[nh++] = {r, c, w};
  }
  void outer_self(const Affine& a, double w) {
    for (int i = 0; i < a.n; ++i) {
      for (int j = 0; j <= i; ++j) {
        hess(a.e[i].index, a.e[j].index, w * a.e[i].value * a.e[j].value);
      }
    }
  }
  std::span<const GradEntry> gs() const { return {g.data(), static_cast<std::size_t>(ng)}; }
  std::span<const HessEntry> hs() const { return {h.data(), static_cast<std::size_t>(nh)}; }
};

// Velocity/acceleration of a rest-to-rest leg as affine maps of the free
// positions q_1..q_{N-2}; q_0 = 0 and q_{N-1} = q_N = distance.
struct LegMaps {
  std::size_t slots = 0;
  double step = 0.0;
  double distance = 0.0;
  std::vector<Affine> pos, vel, acc;  // indices 0..N

  LegMaps(std::size_t n_slots, double dt, double dist) : slots(n_slots), step(dt), distance(dist) {
    const std::size_t n = n_slots;
    pos.resize(n + 1);
    vel.resize(n + 1);
    acc.resize(n + 1);
    for (std::size_t i = 1; i + 1 < n; ++i) pos[i].add(static_cast<int>(i - 1), 1.0);
    pos[n - 1].c = dist;
    pos[n].c = dist;
    for (std::size_t i = 1; i <= n; ++i) {
      Affine v;
      v.c = (pos[i].c - pos[i - 1].c) / dt;
      for (int k = 0; k < pos[i].n; ++k) v.add(pos[i].e[k].index, pos[i].e[k].value / dt);
      for (int k = 0; k < pos[i - 1].n; ++k) v.add(pos[i - 1].e[k].index, -pos[i - 1].e[k].value / dt);
      vel[i] = v;
      Affine a;
      a.c = (vel[i].c - vel[i - 1].c) / dt;
      for (int k = 0; k < vel[i].n; ++k) a.add(vel[i].e[k].index, vel[i].e[k].value / dt);
      for (int k = 0; k < vel[i - 1].n; ++k) a.add(vel[i - 1].e[k].index, -vel[i - 1].e[k].value / dt);
      acc[i] = a;
    }
  }
  int free_positions() const { return static_cast<int>(slots) - 2; }

  DiscreteTrajectory trajectory(const Eigen::VectorXd& x) const {
    std::vector<double> q(slots + 1);
    for (std::size_t i = 0; i <= slots; ++i) q[i] = pos[i].eval(x);
    return DiscreteTrajectory::from_positions(step, std::move(q));
  }
};

// Emits the kinematic box constraints shared by both leg types.
inline void emit_box(const LegMaps& maps, const KinematicLimits& lim, const Eigen::VectorXd& x,
                     convex::DerivativeSink& sink) {
  const bool d = sink.wants_derivatives();
  for (std::size_t n = 1; n <= maps.slots; ++n) {
    const Affine& v = maps.vel[n];
    if (v.n > 0) {
      const double vv = v.eval(x);
      Term hi, lo;
      if (d) {
        hi.grad(v, 1.0);
        lo.grad(v, -1.0);
      }
      sink.constraint(vv - lim.v_max, hi.gs(), {});
      sink.constraint(-vv, lo.gs(), {});
    }
    const Affine& a = maps.acc[n];
    if (a.n > 0) {
      const double aa = a.eval(x);
      Term hi, lo;
      if (d) {
        hi.grad(a, 1.0);
        lo.grad(a, -1.0);
      }
      sink.constraint(aa - lim.a_max, hi.gs(), {});
      sink.constraint(-aa - lim.a_max, lo.gs(), {});
    }
  }
}

// Convexified straight-leg subproblem around (v0, a0) per slot.
class StraightProgram final : public convex::SmoothConvexProgram {
 public:
  StraightProgram(const LegMaps& maps, const PowerConstants& c, const KinematicLimits& lim,
                  std::vector<double> v0, std::vector<double> A0)
      : maps_(maps), c_(c), lim_(lim), v0_(std::move(v0)), A0_(std::move(A0)) {}

  int num_variables() const override { return maps_.free_positions() + 2 * static_cast<int>(maps_.slots); }
  int a_index(std::size_t n) const { return maps_.free_positions() + static_cast<int>(n) - 1; }
  int b_index(std::size_t n) const {
    return maps_.free_positions() + static_cast<int>(maps_.slots) + static_cast<int>(n) - 1;
  }

  void evaluate(const Eigen::VectorXd& x, convex::DerivativeSink& sink) const override {
    const bool d = sink.wants_derivatives();
    const double dt = maps_.step;
    const double p0 = c_.p0_watt, p1 = c_.p1_watt;
    for (std::size_t n = 1; n <= maps_.slots; ++n) {
      const Affine& va = maps_.vel[n];
      const Affine& aa = maps_.acc[n];
      const double v = va.eval(x);
      const double a = aa.eval(x);
      const int ia = a_index(n), ib = b_index(n);
      const double A = x[ia], B = x[ib];

      // Objective slot term.
      {
        double val;
        Term t;
        if (B <= 0.0) {
          val = std::numeric_limits<double>::infinity();
        } else {
          const double vp = std::max(v, 0.0);
          val = dt * (p0 * (1.0 + c_.c1 * v * v) + p1 * (1.0 + A * A) / B + c_.c5 * vp * vp * vp);
          if (d) {
            t.grad(va, dt * (2.0 * p0 * c_.c1 * v + 3.0 * c_.c5 * vp * vp));
            t.grad(ia, dt * p1 * 2.0 * A / B);
            t.grad(ib, -dt * p1 * (1.0 + A * A) / (B * B));
            t.outer_self(va, dt * (2.0 * p0 * c_.c1 + 6.0 * c_.c5 * vp));
            t.hess(ia, ia, dt * p1 * 2.0 / B);
            t.hess(ib, ia, -dt * p1 * 2.0 * A / (B * B));
            t.hess(ib, ib, dt * p1 * 2.0 * (1.0 + A * A) / (B * B * B));
          }
        }
        sink.objective(val, t.gs(), t.hs());
      }
      // A >= c2 v^2 + c3 a (convex).
      {
        Term t;
        if (d) {
          t.grad(va, 2.0 * c_.c2 * v);
          t.grad(aa, c_.c3);
          t.grad(ia, -1.0);
          t.outer_self(va, 2.0 * c_.c2);
        }
        sink.constraint(c_.c2 * v * v + c_.c3 * a - A, t.gs(), t.hs());
      }
      // A >= -(c2 v^2 + c3 a) with -v^2 replaced by its tangent upper bound.
      {
        const double vj = v0_[n];
        Term t;
        if (d) {
          t.grad(va, -2.0 * c_.c2 * vj);
          t.grad(aa, -c_.c3);
          t.grad(ia, -1.0);
        }
        sink.constraint(-c_.c2 * (2.0 * vj * v - vj * vj) - c_.c3 * a - A, t.gs(), {});
      }
      // B^2 <= r2(A, v).
      {
        const double vj = v0_[n], Aj = A0_[n];
        const double s0 = std::sqrt(1.0 + Aj * Aj + c_.c4 * c_.c4 * vj * vj * vj * vj);
        const double r2 = radical_lower_bound(A, v, Aj, vj, c_.c4);
        Term t;
        if (d) {
          t.grad(ib, 2.0 * B);
          t.grad(ia, -Aj / s0);
          t.grad(va, -(2.0 * c_.c4 * c_.c4 * vj * vj * vj / s0 + 2.0 * c_.c4 * vj));
          t.hess(ib, ib, 2.0);
        }
        sink.constraint(B * B - r2, t.gs(), t.hs());
      }
      {
        Term t;
        if (d) t.grad(ib, -1.0);
        sink.constraint(-B, t.gs(), {});
      }
    }
    emit_box(maps_, lim_, x, sink);
  }

 private:
  const LegMaps& maps_;
  const PowerConstants& c_;
  const KinematicLimits& lim_;
  std::vector<double> v0_, A0_;
};

// Convexified vertical-leg subproblem around (u0 = s*a0, X0) per slot, where
// s = -1 for descent and +1 for climb.
class VerticalProgram final : public convex::SmoothConvexProgram {
 public:
  VerticalProgram(const LegMaps& maps, const AirframeParams& af, const KinematicLimits& lim,
                  double sign, std::vector<double> u0, std::vector<double> X0)
      : maps_(maps), af_(af), lim_(lim), sign_(sign), u0_(std::move(u0)), X0_(std::move(X0)) {}

  int num_variables() const override { return maps_.free_positions() + static_cast<int>(maps_.slots); }
  int x_index(std::size_t n) const { return maps_.free_positions() + static_cast<int>(n) - 1; }

  void evaluate(const Eigen::VectorXd& x, convex::DerivativeSink& sink) const override {
    const bool d = sink.wants_derivatives();
    const double dt = maps_.step;
    const double w = af_.weight_newton, m = af_.mass_kg;
    const double k = 2.0 / (af_.air_density * af_.rotor_disc_area);
    for (std::size_t n = 1; n <= maps_.slots; ++n) {
      const Affine& va = maps_.vel[n];
      const Affine ua = maps_.acc[n].scaled(sign_);
      const double v = va.eval(x);
      const double u = ua.eval(x);
      const int ix = x_index(n);
      const double X = x[ix];
      // dt * (W X / 2 + (m/2) r1(u, X)).
      {
        const double d0 = u0_[n] - X0_[n];
        const double val = dt * (0.5 * w * X + 0.5 * m * product_upper_bound(u, X, u0_[n], X0_[n]));
        Term t;
        if (d) {
          // d r1/du = ((u+X) - d0)/2, d r1/dX = ((u+X) + d0)/2, Hessian of (u+X)^2/4.
          const double s = u + X;
          t.grad(ua, dt * 0.5 * m * 0.5 * (s - d0));
          t.grad(ix, dt * (0.5 * w + 0.5 * m * 0.5 * (s + d0)));
          const double hw = dt * 0.5 * m * 0.5;
          t.outer_self(ua, hw);
          t.hess(ix, ix, hw);
          for (int i = 0; i < ua.n; ++i) t.hess(ua.e[i].index, ix, hw * ua.e[i].value);
        }
        sink.objective(val, t.gs(), t.hs());
      }
      // v^2 + k (W + m u) - (2 X0 X - X0^2) <= 0.
      {
        const double xj = X0_[n];
        Term t;
        if (d) {
          t.grad(va, 2.0 * v);
          t.grad(ua, k * m);
          t.grad(ix, -2.0 * xj);
          t.outer_self(va, 2.0);
        }
        sink.constraint(v * v + k * (w + m * u) - (2.0 * xj * X - xj * xj), t.gs(), t.hs());
      }
    }
    emit_box(maps_, lim_, x, sink);
  }

 private:
  const LegMaps& maps_;
  const AirframeParams& af_;
  const KinematicLimits& lim_;
  double sign_;
  std::vector<double> u0_, X0_;
};

// Index of the first slot of the trailing hover padding (slots + 1 if none).
inline std::size_t first_padding_slot(const DiscreteTrajectory& t, double target, double speed_tol,
                                      double pos_tol) {
  std::size_t first = t.slots() + 1;
  for (std::size_t n = t.slots(); n >= 1; --n) {
    if (std::abs(t.velocities[n]) < speed_tol && std::abs(t.positions[n] - target) < pos_tol) {
      first = n;
    } else {
      break;
    }
  }
  return first;
}

inline Eigen::VectorXd positions_to_x(const DiscreteTrajectory& t, int extra) {
  const int nq = static_cast<int>(t.slots()) - 2;
  Eigen::VectorXd x(nq + extra);
  for (int i = 0; i < nq; ++i) x[i] = t.positions[static_cast<std::size_t>(i) + 1];
  return x;
}

}  // namespace sca_detail

// Drops trailing hover slots (|v| < speed_tol within pos_tol of the end
// position). At least one slot is kept.
inline DiscreteTrajectory trim_padding(const DiscreteTrajectory& t, double speed_tol = 1e-3,
                                       double pos_tol = 1e-2) {
  if (t.slots() == 0 || t.step == 0.0) return t;
  const std::size_t first = sca_detail::first_padding_slot(t, t.positions.back(), speed_tol, pos_tol);
  const std::size_t keep = std::max<std::size_t>(first - 1, 1);
  if (keep >= t.slots()) return t;
  DiscreteTrajectory r;
  r.step = t.step;
  r.positions.assign(t.positions.begin(), t.positions.begin() + static_cast<long>(keep) + 1);
  r.velocities.assign(t.velocities.begin(), t.velocities.begin() + static_cast<long>(keep) + 1);
  r.accels.assign(t.accels.begin(), t.accels.begin() + static_cast<long>(keep) + 1);
  return r;
}

struct LegResult {
  DiscreteTrajectory trajectory;   // full horizon, rest-to-rest
  double energy = 0.0;             // excludes trailing hover padding
  double active_duration = 0.0;    // s, before the padding
  double feasible_energy = 0.0;    // reference triangle/trapezoid profile, padding excluded
  bool used_feasible = false;      // SCA did not beat the reference profile
  ScaTrace trace;
};

struct VerticalResult {
  LegResult descent;
  LegResult climb;
  double energy = 0.0;  // descent.energy + climb.energy
};

namespace sca_detail {

// Horizon for a leg whose reference profile lasts `feasible_duration` and
// costs `feasible_energy`.
inline double leg_horizon(double feasible_duration, double feasible_energy, const PowerConstants& c,
                          const ScaSettings& s) {
  double t = s.duration_rule == DurationRule::lemma2_bound
                 ? fly_time_bound(feasible_energy, c)
                 : s.duration_multiple * feasible_duration;
  // The reference profile must fit with room for a rest slot.
  return std::max(t, 1.1 * feasible_duration);
}

inline std::size_t leg_slots(double horizon, const ScaSettings& s) {
  if (s.slots != 0) return s.slots;
  return default_slot_count(horizon, s.slot_step, s.min_slots, s.max_slots);
}

// Strictly interior start: mostly the reference profile, blended with a slower
// profile that keeps moving until the last free slot. Needs a span of at least
// ~1.07 reference durations so the slower profile fits below both limits.
inline DiscreteTrajectory interior_start(const VelocityProfile& reference, double distance,
                                         double step, std::size_t slots, const KinematicLimits& lim) {
  const DiscreteTrajectory base = discretize_padded(reference, step, slots);
  const double span = step * static_cast<double>(slots - 1);
  const VelocityProfile slow = profile_for_duration(distance, span, 0.97 * lim.a_max);
  const DiscreteTrajectory aux = discretize_padded(slow, step, slots);
  std::vector<double> q(slots + 1);
  const double theta = 0.02;
  for (std::size_t i = 0; i <= slots; ++i) {
    q[i] = (1.0 - theta) * base.positions[i] + theta * aux.positions[i];
  }
  q[slots - 1] = distance;
  q[slots] = distance;
  return DiscreteTrajectory::from_positions(step, std::move(q));
}

inline double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

struct LegProblem {
  std::function<double(const DiscreteTrajectory&)> energy;
  // Builds the subproblem around `iterate`; returns program and a strictly
  // feasible start.
  std::function<std::pair<std::unique_ptr<convex::SmoothConvexProgram>, Eigen::VectorXd>(
      const DiscreteTrajectory&)>
      linearize;
  // Largest relative gap between the tightened slacks of a new iterate and
  // the exact nonconvex constraints, given the linearization iterate.
  std::function<double(const DiscreteTrajectory&, const DiscreteTrajectory&)> residual;
};

inline void run_sca(const LegMaps& maps, const LegProblem& prob, DiscreteTrajectory start,
                    const ScaSettings& s, DiscreteTrajectory& best, ScaTrace& trace) {
  best = std::move(start);
  double current = prob.energy(best);
  trace.objective.push_back(current);
  trace.max_residual.push_back(0.0);
  trace.duality_gap.push_back(0.0);
  trace.kkt_residual.push_back(0.0);
  convex::BarrierSettings bs;
  bs.gap_tol = s.subproblem_kkt_tol;
  bs.kkt_tol = s.subproblem_kkt_tol;
  for (int it = 0; it < s.max_outer_iters; ++it) {
    auto [program, x0] = prob.linearize(best);
    convex::BarrierResult r = convex::solve(*program, std::move(x0), bs);
    if (r.degraded) trace.degraded = true;
    DiscreteTrajectory next = maps.trajectory(r.x);
    const double e = prob.energy(next);
    if (!(e <= current)) {
      trace.converged = true;
      break;
    }
    const double decrease = (current - e) / std::max(std::abs(current), 1e-12);
    trace.max_residual.push_back(prob.residual(next, best));
    best = std::move(next);
    current = e;
    trace.objective.push_back(e);
    trace.duality_gap.push_back(r.duality_gap);
    trace.kkt_residual.push_back(r.kkt_residual);
    if (decrease < s.objective_tol) {
      trace.converged = true;
      break;
    }
  }
}

inline LegProblem straight_problem(const LegMaps& maps, const PowerConstants& c,
                                   const KinematicLimits& lim) {
  LegProblem p;
  p.energy = [&c](const DiscreteTrajectory& t) { return straight_energy(t, c); };
  p.linearize = [&maps, &c, &lim](const DiscreteTrajectory& it) {
    const std::size_t n_slots = maps.slots;
    std::vector<double> v0(n_slots + 1), A0(n_slots + 1);
    for (std::size_t n = 1; n <= n_slots; ++n) {
      v0[n] = it.velocities[n];
      A0[n] = std::abs(c.c2 * v0[n] * v0[n] + c.c3 * it.accels[n]);
    }
    auto prog = std::make_unique<StraightProgram>(maps, c, lim, v0, A0);
    Eigen::VectorXd x = positions_to_x(it, 2 * static_cast<int>(n_slots));
    for (std::size_t n = 1; n <= n_slots; ++n) {
      const double A = A0[n] + 1e-6 * (1.0 + A0[n]);
      x[prog->a_index(n)] = A;
      x[prog->b_index(n)] = std::sqrt(radical_lower_bound(A, v0[n], A0[n], v0[n], c.c4)) * (1.0 - 1e-7);
    }
    return std::pair<std::unique_ptr<convex::SmoothConvexProgram>, Eigen::VectorXd>(std::move(prog),
                                                                                     std::move(x));
  };
  p.residual = [&maps, &c](const DiscreteTrajectory& t, const DiscreteTrajectory& lin) {
    double worst = 0.0;
    for (std::size_t n = 1; n <= maps.slots; ++n) {
      const double v = t.velocities[n], a = t.accels[n];
      const double vj = lin.velocities[n];
      const double Aj = std::abs(c.c2 * vj * vj + c.c3 * lin.accels[n]);
      // Slacks at their tightest values for these positions.
      const double A = std::max(c.c2 * v * v + c.c3 * a, -c.c2 * (2.0 * vj * v - vj * vj) - c.c3 * a);
      const double B2 = radical_lower_bound(A, v, Aj, vj, c.c4);
      const double g = std::abs(c.c2 * v * v + c.c3 * a);
      const double rhs = std::sqrt(1.0 + A * A + c.c4 * c.c4 * v * v * v * v) + c.c4 * v * v;
      worst = std::max(worst, std::abs(A - g) / (1.0 + g));
      worst = std::max(worst, std::abs(B2 - rhs) / rhs);
    }
    return worst;
  };
  return p;
}

inline LegProblem vertical_problem(const LegMaps& maps, VerticalDirection dir, const PowerConstants& c,
                                   const AirframeParams& af, const KinematicLimits& lim) {
  const double sign = dir == VerticalDirection::descent ? -1.0 : 1.0;
  LegProblem p;
  p.energy = [dir, &c, &af](const DiscreteTrajectory& t) { return vertical_energy(t, dir, c, af); };
  p.linearize = [&maps, &af, &lim, sign](const DiscreteTrajectory& it) {
    const std::size_t n_slots = maps.slots;
    const double k = 2.0 / (af.air_density * af.rotor_disc_area);
    std::vector<double> u0(n_slots + 1), X0(n_slots + 1);
    for (std::size_t n = 1; n <= n_slots; ++n) {
      u0[n] = sign * it.accels[n];
      const double v = it.velocities[n];
      X0[n] = std::sqrt(v * v + k * (af.weight_newton + af.mass_kg * u0[n]));
    }
    auto prog = std::make_unique<VerticalProgram>(maps, af, lim, sign, u0, X0);
    Eigen::VectorXd x = positions_to_x(it, static_cast<int>(n_slots));
    for (std::size_t n = 1; n <= n_slots; ++n) x[prog->x_index(n)] = X0[n] * (1.0 + 1e-7);
    return std::pair<std::unique_ptr<convex::SmoothConvexProgram>, Eigen::VectorXd>(std::move(prog),
                                                                                     std::move(x));
  };
  p.residual = [&maps, &af, sign](const DiscreteTrajectory& t, const DiscreteTrajectory& lin) {
    const double k = 2.0 / (af.air_density * af.rotor_disc_area);
    double worst = 0.0;
    for (std::size_t n = 1; n <= maps.slots; ++n) {
      const double v = t.velocities[n];
      const double rhs = v * v + k * (af.weight_newton + af.mass_kg * sign * t.accels[n]);
      const double vj = lin.velocities[n];
      const double xj = std::sqrt(vj * vj + k * (af.weight_newton + af.mass_kg * sign * lin.accels[n]));
      const double X = (rhs + xj * xj) / (2.0 * xj);  // tightest X for these positions
      worst = std::max(worst, std::abs(X * X - rhs) / rhs);
    }
    return worst;
  };
  return p;
}

// Shared driver for both leg types.
inline LegResult optimize_leg(double distance, const KinematicLimits& lim, const PowerConstants& c,
                              const ScaSettings& s,
                              const std::function<double(const DiscreteTrajectory&)>& energy_fn,
                              const std::function<LegProblem(const LegMaps&)>& make_problem,
                              const DiscreteTrajectory* warm_start) {
  validate(s);
  LegResult out;
  if (distance == 0.0) {
    out.trajectory = DiscreteTrajectory::stationary(2, 0.0, 0.0);
    out.trace.objective.push_back(0.0);
    out.trace.max_residual.push_back(0.0);
    out.trace.duality_gap.push_back(0.0);
    out.trace.kkt_residual.push_back(0.0);
    out.trace.converged = true;
    return out;
  }
  const VelocityProfile ref = feasible_profile(distance, lim);
  const DiscreteTrajectory ref_traj =
      discretize(ref, default_slot_count(ref.duration, s.slot_step, s.min_slots, s.max_slots));
  // The closing rest slot of the reference counts as padding too.
  out.feasible_energy = energy_fn(trim_padding(ref_traj, s.padding_speed, s.padding_position));

  DiscreteTrajectory start;
  std::size_t slots;
  double step;
  if (warm_start && warm_start->slots() >= 4 && warm_start->step > 0.0 &&
      std::abs(warm_start->positions.back() - distance) <= 1e-9 * std::max(1.0, distance)) {
    slots = warm_start->slots();
    step = warm_start->step;
    start = *warm_start;
  } else {
    double horizon = leg_horizon(ref.duration, out.feasible_energy, c, s);
    slots = leg_slots(horizon, s);
    const double min_span = 1.08 * ref.duration;
    const double n_slots = static_cast<double>(slots);
    horizon = std::max(horizon, min_span * n_slots / (n_slots - 1.0));
    step = horizon / n_slots;
    start = interior_start(ref, distance, step, slots, lim);
  }
  const LegMaps maps(slots, step, distance);
  const LegProblem prob = make_problem(maps);
  DiscreteTrajectory best;
  run_sca(maps, prob, std::move(start), s, best, out.trace);

  const DiscreteTrajectory active = trim_padding(best, s.padding_speed, s.padding_position);
  const double e = energy_fn(active);
  if (e <= out.feasible_energy) {
    out.trajectory = std::move(best);
    out.energy = e;
    out.active_duration = active.duration();
  } else {
    out.trajectory = ref_traj;
    out.energy = out.feasible_energy;
    out.active_duration = ref.duration;
    out.used_feasible = true;
  }
  return out;
}

}  // namespace sca_detail

// Minimum-energy level flight over `distance`, starting and ending at rest.
inline LegResult optimize_straight(double distance, const KinematicLimits& limits,
                                   const PowerConstants& consts, const ScaSettings& settings = {},
                                   const DiscreteTrajectory* warm_start = nullptr) {
  if (!(distance >= 0.0) || !std::isfinite(distance)) {
    throw InvalidParameter("distance", "must be finite and non-negative");
  }
  validate(limits);
  return sca_detail::optimize_leg(
      distance, limits, consts, settings,
      [&consts](const DiscreteTrajectory& t) { return straight_energy(t, consts); },
      [&consts, &limits](const sca_detail::LegMaps& m) {
        return sca_detail::straight_problem(m, consts, limits);
      },
      warm_start);
}

// Minimum-energy descent of `height_drop` followed by the matching climb.
inline VerticalResult optimize_vertical(double height_drop, const KinematicLimits& limits,
                                        const PowerConstants& consts, const AirframeParams& airframe,
                                        const ScaSettings& settings = {},
                                        const VerticalResult* warm_start = nullptr) {
  if (!(height_drop >= 0.0) || !std::isfinite(height_drop)) {
    throw InvalidParameter("height_drop", "must be finite and non-negative");
  }
  validate(limits);
  if (!(limits.a_max < airframe.gravity)) {
    throw ModelDomainError("a_max must stay below gravity for vertical flight");
  }
  VerticalResult r;
  for (VerticalDirection dir : {VerticalDirection::descent, VerticalDirection::climb}) {
    const DiscreteTrajectory* warm = nullptr;
    if (warm_start) {
      warm = dir == VerticalDirection::descent ? &warm_start->descent.trajectory
                                               : &warm_start->climb.trajectory;
    }
    LegResult leg = sca_detail::optimize_leg(
        height_drop, limits, consts, settings,
        [dir, &consts, &airframe](const DiscreteTrajectory& t) {
          return vertical_energy(t, dir, consts, airframe);
        },
        [dir, &consts, &airframe, &limits](const sca_detail::LegMaps& m) {
          return sca_detail::vertical_problem(m, dir, consts, airframe, limits);
        },
        warm);
    (dir == VerticalDirection::descent ? r.descent : r.climb) = std::move(leg);
  }
  r.energy = r.descent.energy + r.climb.energy;
  return r;
}

}  // namespace uavh
