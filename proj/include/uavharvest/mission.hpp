#pragma once

// Mission planning: visiting order, per-stage hover height and the energy
// totals of a complete tour.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "uavharvest/errors.hpp"
#include "uavharvest/hover_comm.hpp"
#include "uavharvest/kinematics.hpp"
#include "uavharvest/propulsion.hpp"
#include "uavharvest/trajectory_sca.hpp"
#include "uavharvest/visit_order.hpp"

namespace uavh {

// How a flight leg's energy is obtained.
enum class LegModel { sca, feasible };

inline const char* to_string(LegModel m) { return m == LegModel::sca ? "sca" : "feasible"; }

struct HeightGridSettings {
  double h_min = 0.1;        // m
  double step = 0.05;        // m
  double margin = 0.01;      // m kept below the height limit
  bool refine = true;        // golden section inside the best grid cell
  double refine_tol = 1e-3;  // m

  bool operator==(const HeightGridSettings&) const = default;
};

struct SolverSettings {
  ScaSettings sca;
  DualSettings dual;
  HeightGridSettings grid;
  FdSettings fd;
  LegModel straight_model = LegModel::sca;
  LegModel vertical_model = LegModel::sca;
  LegModel matrix_model = LegModel::feasible;  // energies feeding the visiting order
  bool exhaustive_check = true;                // cross-check the order when K <= 8
  std::uint64_t seed = 1;                      // random baseline and generated layouts

  bool operator==(const SolverSettings& o) const {
    return sca == o.sca && dual == o.dual && grid == o.grid && fd.t_upper == o.fd.t_upper &&
           fd.time_tol == o.fd.time_tol && straight_model == o.straight_model &&
           vertical_model == o.vertical_model && matrix_model == o.matrix_model &&
           exhaustive_check == o.exhaustive_check && seed == o.seed;
  }
};

struct UserSpec {
  Point2 position;
  UserComm comm;
  bool operator==(const UserSpec&) const = default;
};

struct Scenario {
  AirframeParams airframe;
  KinematicLimits limits;
  double cruise_altitude = 120.0;  // m
  Point2 depot;
  std::vector<UserSpec> users;
  ChannelParams channel;
  RadioParams radio;
  DuplexMode mode = DuplexMode::hd;
  SolverSettings solver;

  bool operator==(const Scenario&) const = default;
};

inline void validate(const HeightGridSettings& g) {
  if (!(g.h_min > 0.0) || !std::isfinite(g.h_min)) throw InvalidParameter("solver.grid.h_min", "must be positive");
  if (!(g.step > 0.0) || !std::isfinite(g.step)) throw InvalidParameter("solver.grid.step", "must be positive");
  if (!(g.margin >= 0.0)) throw InvalidParameter("solver.grid.margin", "must be non-negative");
  if (!(g.refine_tol > 0.0)) throw InvalidParameter("solver.grid.refine_tol", "must be positive");
}

inline void validate(const Scenario& s) {
  validate(s.airframe);
  validate(s.limits);
  validate(s.channel);
  validate(s.radio);
  validate(s.solver.sca);
  validate(s.solver.grid);
  if (!(s.cruise_altitude > 0.0) || !std::isfinite(s.cruise_altitude)) {
    throw InvalidParameter("cruise_altitude", "must be positive");
  }
  if (!std::isfinite(s.depot.x) || !std::isfinite(s.depot.y)) throw InvalidParameter("depot", "must be finite");
  if (s.users.empty()) throw InvalidParameter("users", "at least one user is required");
  for (std::size_t k = 0; k < s.users.size(); ++k) {
    const auto& u = s.users[k];
    if (!std::isfinite(u.position.x) || !std::isfinite(u.position.y)) {
      throw InvalidParameter("users[" + std::to_string(k) + "].position", "must be finite");
    }
    try {
      validate(u.comm);
    } catch (const InvalidParameter& e) {
      throw InvalidParameter("users[" + std::to_string(k) + "]." + e.field(), e.what());
    }
  }
  if (!(s.limits.a_max < s.airframe.gravity)) {
    throw InvalidParameter("limits.a_max", "must stay below gravity for vertical flight");
  }
}

// Memoized leg evaluations. Straight legs are keyed by distance, vertical
// legs by the height drop; both depend on nothing else within one scenario.
class LegCache {
 public:
  LegCache(const AirframeParams& a, const KinematicLimits& l, const ScaSettings& s, LegModel straight,
           LegModel vertical)
      : airframe_(a), limits_(l), sca_(s), consts_(derive_constants(a)), straight_(straight), vertical_(vertical) {}

  const PowerConstants& constants() const { return consts_; }

  const LegResult& straight(double distance) {
    auto it = straight_cache_.find(distance);
    if (it != straight_cache_.end()) return it->second;
    LegResult r = straight_ == LegModel::sca ? optimize_straight(distance, limits_, consts_, sca_)
                                            : feasible_straight(distance);
    return straight_cache_.emplace(distance, std::move(r)).first->second;
  }

  const VerticalResult& vertical(double drop) {
    auto it = vertical_cache_.find(drop);
    if (it != vertical_cache_.end()) return it->second;
    VerticalResult r = vertical_ == LegModel::sca ? optimize_vertical(drop, limits_, consts_, airframe_, sca_)
                                                 : feasible_vertical(drop);
    return vertical_cache_.emplace(drop, std::move(r)).first->second;
  }

  // Reference-profile energy without running SCA (energy matrix default).
  double feasible_straight_energy(double distance) { return feasible_straight(distance).energy; }

  std::size_t vertical_evaluations() const { return vertical_cache_.size(); }
  bool compatible(const AirframeParams& a, const KinematicLimits& l, const ScaSettings& s, LegModel st,
                  LegModel ve) const {
    return a == airframe_ && l == limits_ && s == sca_ && st == straight_ && ve == vertical_;
  }

 private:
  LegResult feasible_leg(double distance, const std::function<double(const DiscreteTrajectory&)>& energy) const {
    LegResult out;
    if (distance == 0.0) {
      out.trajectory = DiscreteTrajectory::stationary(2, 0.0, 0.0);
      out.used_feasible = true;
      return out;
    }
    const VelocityProfile ref = feasible_profile(distance, limits_);
    out.trajectory = discretize(ref, default_slot_count(ref.duration, sca_.slot_step, sca_.min_slots, sca_.max_slots));
    out.energy = energy(trim_padding(out.trajectory, sca_.padding_speed, sca_.padding_position));
    out.feasible_energy = out.energy;
    out.active_duration = ref.duration;
    out.used_feasible = true;
    return out;
  }
  LegResult feasible_straight(double distance) const {
    return feasible_leg(distance, [this](const DiscreteTrajectory& t) { return straight_energy(t, consts_); });
  }
  VerticalResult feasible_vertical(double drop) const {
    VerticalResult r;
    r.descent = feasible_leg(drop, [this](const DiscreteTrajectory& t) {
      return vertical_energy(t, VerticalDirection::descent, consts_, airframe_);
    });
    r.climb = feasible_leg(drop, [this](const DiscreteTrajectory& t) {
      return vertical_energy(t, VerticalDirection::climb, consts_, airframe_);
    });
    r.energy = r.descent.energy + r.climb.energy;
    return r;
  }

  AirframeParams airframe_;
  KinematicLimits limits_;
  ScaSettings sca_;
  PowerConstants consts_;
  LegModel straight_;
  LegModel vertical_;
  std::map<double, LegResult> straight_cache_;
  std::map<double, VerticalResult> vertical_cache_;
};

inline std::shared_ptr<LegCache> make_leg_cache(const Scenario& s) {
  return std::make_shared<LegCache>(s.airframe, s.limits, s.solver.sca, s.solver.straight_model,
                                    s.solver.vertical_model);
}

struct StagePlan {
  std::size_t user = 0;  // 1-based user id
  double hover_height = 0.0;
  LegResult inbound;
  VerticalResult vertical;
  HoverSolution hover;
  double e1 = 0.0;  // straight flight into the stage
  double e2 = 0.0;  // descent
  double e3 = 0.0;  // hover
  double e4 = 0.0;  // climb
  double stage_energy = 0.0;

  double t1() const { return inbound.active_duration; }
  double t2() const { return vertical.descent.active_duration; }
  double t3() const { return hover.hover_time; }
  double t4() const { return vertical.climb.active_duration; }
};

struct MissionPlan {
  VisitOrder order;
  std::vector<StagePlan> stages;
  LegResult return_leg;
  double return_energy = 0.0;
  double total_energy = 0.0;
  DuplexMode mode = DuplexMode::hd;
  // Order provenance: dual method alone, or replaced by the exhaustive check.
  bool order_from_exhaustive = false;
  double dual_order_gap = 0.0;  // dual order cost minus exhaustive optimum (J), when checked
  std::uint64_t seed = 0;

  double hover_energy() const {
    double s = 0.0;
    for (const auto& st : stages) s += st.e3;
    return s;
  }
  double flight_energy() const { return total_energy - hover_energy(); }
  double mean_height() const {
    double s = 0.0;
    for (const auto& st : stages) s += st.hover_height;
    return stages.empty() ? 0.0 : s / static_cast<double>(stages.size());
  }
};

// Highest usable hover height for `user` (exclusive), before the grid margin.
inline double user_height_limit(const Scenario& s, const UserComm& u) {
  if (s.mode == DuplexMode::fd) {
    return u.circuit_delay <= 0.0 ? height_bound(DuplexMode::fd, s.channel, s.radio, u)
                                  : fd_height_limit(s.channel, s.radio, u, s.solver.fd);
  }
  return height_bound(DuplexMode::hd, s.channel, s.radio, u);
}

// Grid of candidate hover heights for a user; empty when none is feasible.
inline std::vector<double> height_grid(const Scenario& s, const UserComm& u) {
  const auto& g = s.solver.grid;
  const double hi = std::min(s.cruise_altitude, user_height_limit(s, u) - g.margin);
  std::vector<double> out;
  if (!(hi >= g.h_min)) return out;
  const auto n = static_cast<std::size_t>(std::floor((hi - g.h_min) / g.step + 1e-9));
  for (std::size_t i = 0; i <= n; ++i) out.push_back(g.h_min + g.step * static_cast<double>(i));
  return out;
}

namespace mission_detail {

struct HeightEval {
  double objective = std::numeric_limits<double>::infinity();
  std::optional<HoverSolution> hover;
};

inline HeightEval evaluate_height(const Scenario& s, const UserComm& u, double h, LegCache& cache) {
  HeightEval r;
  try {
    HoverSolution hov = s.mode == DuplexMode::hd
                            ? solve_hd(h, s.channel, s.radio, u, cache.constants().hover_watt())
                            : solve_fd(h, s.channel, s.radio, u, cache.constants().hover_watt(), s.solver.fd);
    const double v1 = cache.vertical(s.cruise_altitude - h).energy;
    r.objective = v1 + hov.hover_energy;
    r.hover = hov;
  } catch (const InfeasibleError&) {
    // treated as an excluded grid point
  }
  return r;
}

}  // namespace mission_detail

// Hover height minimizing descent + hover + climb energy for one user; the
// inbound leg is left empty.
inline StagePlan optimize_stage_height(const Scenario& s, std::size_t user_index, LegCache& cache) {
  if (user_index >= s.users.size()) throw InvalidParameter("user", "index out of range");
  const UserComm& u = s.users[user_index].comm;
  const std::vector<double> grid = height_grid(s, u);
  if (grid.empty()) {
    throw InfeasibleError(InfeasibleKind::user, "user " + std::to_string(user_index + 1) +
                                                    " has no feasible hover height");
  }
  std::vector<double> f(grid.size());
  std::size_t best = 0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    f[i] = mission_detail::evaluate_height(s, u, grid[i], cache).objective;
    if (f[i] < f[best]) best = i;
  }
  if (!std::isfinite(f[best])) {
    throw InfeasibleError(InfeasibleKind::user, "user " + std::to_string(user_index + 1) +
                                                    " has no feasible hover height on the grid");
  }
  double h_best = grid[best];
  double f_best = f[best];
  if (s.solver.grid.refine && grid.size() > 1) {
    double a = grid[best > 0 ? best - 1 : 0];
    double b = grid[std::min(best + 1, grid.size() - 1)];
    const double r = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = b - r * (b - a), x2 = a + r * (b - a);
    double f1 = mission_detail::evaluate_height(s, u, x1, cache).objective;
    double f2 = mission_detail::evaluate_height(s, u, x2, cache).objective;
    while (b - a > s.solver.grid.refine_tol) {
      if (f1 <= f2) {
        b = x2;
        x2 = x1;
        f2 = f1;
        x1 = b - r * (b - a);
        f1 = mission_detail::evaluate_height(s, u, x1, cache).objective;
      } else {
        a = x1;
        x1 = x2;
        f1 = f2;
        x2 = a + r * (b - a);
        f2 = mission_detail::evaluate_height(s, u, x2, cache).objective;
      }
    }
    for (auto [x, fx] : {std::pair{x1, f1}, std::pair{x2, f2}}) {
      if (fx < f_best) {
        f_best = fx;
        h_best = x;
      }
    }
  }
  StagePlan st;
  st.user = user_index + 1;
  st.hover_height = h_best;
  st.vertical = cache.vertical(s.cruise_altitude - h_best);
  st.hover = *mission_detail::evaluate_height(s, u, h_best, cache).hover;
  st.e2 = st.vertical.descent.energy;
  st.e3 = st.hover.hover_energy;
  st.e4 = st.vertical.climb.energy;
  st.stage_energy = st.e2 + st.e3 + st.e4;
  return st;
}

inline StagePlan optimize_stage_height(const Scenario& s, std::size_t user_index) {
  validate(s);
  auto cache = make_leg_cache(s);
  return optimize_stage_height(s, user_index, *cache);
}

inline EnergyMatrix scenario_energy_matrix(const Scenario& s, LegCache& cache) {
  std::vector<Point2> pts;
  for (const auto& u : s.users) pts.push_back(u.position);
  if (s.solver.matrix_model == LegModel::sca) {
    const auto consts = cache.constants();
    return pairwise_energy_matrix(s.depot, pts, [&](double d) {
      return optimize_straight(d, s.limits, consts, s.solver.sca).energy;
    });
  }
  return pairwise_energy_matrix(s.depot, pts, [&](double d) { return cache.feasible_straight_energy(d); });
}

inline Point2 stop_position(const Scenario& s, std::size_t id) {
  return id == 0 ? s.depot : s.users[id - 1].position;
}

namespace mission_detail {

inline void check_leg(const LegResult& leg, double distance, const KinematicLimits& lim, const std::string& what) {
  if (distance == 0.0) return;
  const auto rep = validate(leg.trajectory, lim, {0.0, distance}, true, {1e-9, 1e-6, 1e-6});
  if (!rep.ok()) throw SolverError(what + " violates the kinematic limits: " + rep.summary());
}

// Fills straight legs and totals for stages whose heights are already known.
inline void assemble(MissionPlan& plan, const Scenario& s, std::vector<StagePlan> by_user, LegCache& cache) {
  plan.stages.clear();
  std::size_t prev = 0;
  for (std::size_t k = 0; k < plan.order.order.size(); ++k) {
    const std::size_t id = plan.order.order[k];
    StagePlan st = by_user[id - 1];
    const double d = distance(stop_position(s, prev), stop_position(s, id));
    st.inbound = cache.straight(d);
    check_leg(st.inbound, d, s.limits, "stage " + std::to_string(k + 1) + " inbound leg");
    st.e1 = st.inbound.energy;
    st.stage_energy = st.e1 + st.e2 + st.e3 + st.e4;
    plan.stages.push_back(std::move(st));
    prev = id;
  }
  const double d_ret = distance(stop_position(s, prev), s.depot);
  plan.return_leg = cache.straight(d_ret);
  check_leg(plan.return_leg, d_ret, s.limits, "return leg");
  plan.return_energy = plan.return_leg.energy;
  plan.total_energy = plan.return_energy;
  for (const auto& st : plan.stages) plan.total_energy += st.stage_energy;
}

inline std::vector<StagePlan> all_stage_heights(const Scenario& s, LegCache& cache) {
  std::vector<StagePlan> by_user;
  std::vector<std::string> bad;
  for (std::size_t k = 0; k < s.users.size(); ++k) {
    try {
      StagePlan st = optimize_stage_height(s, k, cache);
      const double drop = s.cruise_altitude - st.hover_height;
      check_leg(st.vertical.descent, drop, s.limits, "stage descent for user " + std::to_string(k + 1));
      check_leg(st.vertical.climb, drop, s.limits, "stage climb for user " + std::to_string(k + 1));
      by_user.push_back(std::move(st));
    } catch (const InfeasibleError&) {
      bad.push_back(std::to_string(k + 1));
      by_user.emplace_back();
    } catch (const Error& e) {
      throw SolverError("user " + std::to_string(k + 1) + ": " + e.what());
    }
  }
  if (!bad.empty()) {
    std::string list;
    for (const auto& b : bad) list += (list.empty() ? "" : ", ") + b;
    throw InfeasibleError(InfeasibleKind::user, "infeasible users: " + list);
  }
  return by_user;
}

}  // namespace mission_detail

inline MissionPlan plan_mission(const Scenario& s, LegCache& cache) {
  validate(s);
  MissionPlan plan;
  plan.mode = s.mode;
  plan.seed = s.solver.seed;
  std::vector<StagePlan> by_user = mission_detail::all_stage_heights(s, cache);

  const EnergyMatrix m = scenario_energy_matrix(s, cache);
  DualResult dual = solve_order_dual(m, s.solver.dual);
  plan.order = dual.order;
  if (s.solver.exhaustive_check && m.users() <= 8) {
    const VisitOrder ex = solve_order_exhaustive(m);
    plan.dual_order_gap = dual.order.total_energy - ex.total_energy;
    if (ex.total_energy < dual.order.total_energy - 1e-9 * std::max(1.0, ex.total_energy)) {
      plan.order = ex;
      plan.order_from_exhaustive = true;
    }
  }
  mission_detail::assemble(plan, s, std::move(by_user), cache);
  return plan;
}

inline MissionPlan plan_mission(const Scenario& s) {
  validate(s);
  auto cache = make_leg_cache(s);
  return plan_mission(s, *cache);
}

// Same stages flown in a seeded random order (baseline).
inline MissionPlan random_order_plan(const MissionPlan& planned, const Scenario& s, LegCache& cache,
                                     std::uint64_t seed) {
  std::vector<StagePlan> by_user(s.users.size());
  for (const auto& st : planned.stages) by_user[st.user - 1] = st;
  MissionPlan r = planned;
  r.seed = seed;
  std::vector<std::size_t> p(s.users.size());
  std::iota(p.begin(), p.end(), 1);
  std::mt19937_64 rng(seed);
  std::shuffle(p.begin(), p.end(), rng);
  r.order.order = p;
  r.order_from_exhaustive = false;
  r.dual_order_gap = 0.0;
  mission_detail::assemble(r, s, std::move(by_user), cache);
  r.order.total_energy = r.total_energy - r.hover_energy();
  return r;
}

// Users placed uniformly in a square of side `side` centred on the depot.
inline std::vector<UserSpec> random_layout(std::size_t users, double side, std::uint64_t seed,
                                           const Point2& depot = {}, const UserComm& comm = {}) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-0.5 * side, 0.5 * side);
  std::vector<UserSpec> out(users);
  for (auto& us : out) {
    us.position = {depot.x + u(rng), depot.y + u(rng)};
    us.comm = comm;
  }
  return out;
}

// Sweep axes: cruise altitude (m), demand (Mbit), bandwidth (MHz), UAV
// transmit power (W).
enum class SweepAxis { H, D, B, P };

inline const char* to_string(SweepAxis a) {
  switch (a) {
    case SweepAxis::H: return "H";
    case SweepAxis::D: return "D";
    case SweepAxis::B: return "B";
    case SweepAxis::P: return "P";
  }
  return "?";
}

inline Scenario apply_axis(Scenario s, SweepAxis axis, double value) {
  switch (axis) {
    case SweepAxis::H: s.cruise_altitude = value; break;
    case SweepAxis::D:
      for (auto& u : s.users) u.comm.demand_bits = value * 1e6;
      break;
    case SweepAxis::B: s.radio.bandwidth = value * 1e6; break;
    case SweepAxis::P: s.radio.uav_tx_power = value; break;
  }
  return s;
}

struct SweepRow {
  double axis_value = 0.0;
  DuplexMode mode = DuplexMode::hd;
  double total = std::numeric_limits<double>::quiet_NaN();
  double hover = std::numeric_limits<double>::quiet_NaN();
  double flight = std::numeric_limits<double>::quiet_NaN();
  double mean_height = std::numeric_limits<double>::quiet_NaN();
  std::string error;  // empty when the point solved
  int error_code = 0; // exit-code class of the failure
};

// One row per (value, mode). Failures are recorded in the row and the sweep
// continues. Leg evaluations are shared when the axis leaves them unchanged.
inline std::vector<SweepRow> sweep(const Scenario& base, SweepAxis axis, const std::vector<double>& values,
                                   const std::vector<DuplexMode>& modes) {
  if (values.empty()) throw InvalidParameter("values", "at least one value is required");
  if (modes.empty()) throw InvalidParameter("modes", "at least one mode is required");
  auto cache = make_leg_cache(base);
  std::vector<SweepRow> rows;
  for (double v : values) {
    for (DuplexMode mode : modes) {
      SweepRow row;
      row.axis_value = v;
      row.mode = mode;
      try {
        Scenario s = apply_axis(base, axis, v);
        s.mode = mode;
        validate(s);
        const MissionPlan p = plan_mission(s, *cache);
        row.total = p.total_energy;
        row.hover = p.hover_energy();
        row.flight = p.flight_energy();
        row.mean_height = p.mean_height();
      } catch (const InvalidParameter& e) {
        row.error = e.what();
        row.error_code = 2;
      } catch (const InfeasibleError& e) {
        row.error = e.what();
        row.error_code = 3;
      } catch (const Error& e) {
        row.error = e.what();
        row.error_code = 4;
      }
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

}  // namespace uavh
