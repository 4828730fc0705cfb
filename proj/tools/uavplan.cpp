// Command-line front end: plan, order, hover, trajectory, sweep, validate.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "uavharvest/uavharvest.hpp"

using namespace uavh;

namespace {

enum Exit { ok = 0, bad_input = 2, infeasible = 3, solver_failure = 4 };

Scenario load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path, 0, "cannot open scenario file");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str());
}

std::ofstream open_out(const std::string& path) {
  std::ofstream os(path);
  if (!os) throw InvalidParameter("--out", "cannot write " + path);
  return os;
}

DuplexMode parse_mode(const std::string& m) { return m == "fd" ? DuplexMode::fd : DuplexMode::hd; }

void apply_leg_flags(Scenario& s, bool fast) {
  if (fast) {
    s.solver.straight_model = LegModel::feasible;
    s.solver.vertical_model = LegModel::feasible;
  }
}

int run_plan(const std::string& file, const std::string& mode, const std::string& out, bool fast,
             bool baseline) {
  Scenario s = load(file);
  if (!mode.empty()) s.mode = parse_mode(mode);
  apply_leg_flags(s, fast);
  auto cache = make_leg_cache(s);
  const MissionPlan p = plan_mission(s, *cache);
  std::cout << "seed: " << s.solver.seed << "\n";
  emit_plan(std::cout, p, PlanFormat::human);
  if (baseline) {
    const MissionPlan r = random_order_plan(p, s, *cache, s.solver.seed);
    std::printf("random-order baseline (seed %llu): %.3f J\n", static_cast<unsigned long long>(s.solver.seed),
                r.total_energy);
  }
  if (!out.empty()) {
    auto os = open_out(out);
    emit_plan(os, p, PlanFormat::csv);
  }
  return ok;
}

int run_order(const std::string& file, bool exhaustive, const std::string& trace) {
  Scenario s = load(file);
  auto cache = make_leg_cache(s);
  const EnergyMatrix m = scenario_energy_matrix(s, *cache);
  VisitOrder o;
  if (exhaustive) {
    o = solve_order_exhaustive(m);
  } else {
    const DualResult r = solve_order_dual(m, s.solver.dual);
    o = r.order;
    std::printf("dual iterations: %d%s\n", r.iterations, r.flagged ? " (iteration cap reached)" : "");
    std::printf("repaired final C: %.3f J, best repaired iterate: %.3f J\n", r.repaired_final.total_energy,
                r.repaired_best.total_energy);
    if (!trace.empty()) {
      auto os = open_out(trace);
      write_dual_trace_csv(os, r.trace);
    }
  }
  std::cout << "order:";
  for (std::size_t u : o.order) std::cout << ' ' << u;
  std::printf("\nflight energy: %.3f J\n", o.total_energy);
  return ok;
}

int run_hover(const std::string& file, std::size_t user, double height, const std::string& mode) {
  Scenario s = load(file);
  if (!mode.empty()) s.mode = parse_mode(mode);
  if (user < 1 || user > s.users.size()) throw InvalidParameter("--user", "must be between 1 and the user count");
  const UserComm& u = s.users[user - 1].comm;
  const HoverSolution h = solve_hover(s.mode, height, s.channel, s.radio, u, derive_constants(s.airframe).hover_watt());
  const HoverBalance b = hover_balance(h, height, s.channel, s.radio, u);
  std::printf("mode: %s\nheight bound: %.6f m\n", to_string(s.mode), user_height_limit(s, u));
  std::printf("hover time: %.9g s\nharvest time: %.9g s\ntransmit time: %.9g s\nrho: %.9g\n", h.hover_time,
              h.harvest_time, h.transmit_time, h.time_split);
  std::printf("user power: %.6e W\nhover energy: %.6f J\n", h.user_tx_power, h.hover_energy);
  std::printf("harvested: %.6e J, consumed: %.6e J, bits: %.6e\n", b.harvested, b.consumed, b.bits);
  return ok;
}

int run_trajectory(double d, const std::string& file, const std::string& out, const std::string& trace) {
  Scenario s;
  if (!file.empty()) s = load(file);
  const LegResult r = optimize_straight(d, s.limits, derive_constants(s.airframe), s.solver.sca);
  const auto rep = validate(r.trajectory, s.limits, {0.0, d}, true, {1e-9, 1e-6, 1e-6});
  std::printf("distance: %.6g m\nenergy: %.6f J\nreference profile energy: %.6f J\n", d, r.energy,
              r.feasible_energy);
  std::printf("active duration: %.6f s\nslots: %zu (step %.6f s)\nouter iterations: %zu\n", r.active_duration,
              r.trajectory.slots(), r.trajectory.step, r.trace.objective.size());
  std::printf("result: %s\nkinematics: %s\n", r.used_feasible ? "reference profile (SCA not better)" : "SCA",
              rep.ok() ? "ok" : rep.summary().c_str());
  if (!out.empty()) {
    auto os = open_out(out);
    os << "n,t_s,q_m,v_m_s,a_m_s2\n";
    os.precision(17);
    for (std::size_t n = 0; n < r.trajectory.positions.size(); ++n) {
      os << n << ',' << r.trajectory.step * static_cast<double>(n) << ',' << r.trajectory.positions[n] << ','
         << r.trajectory.velocities[n] << ',' << r.trajectory.accels[n] << '\n';
    }
  }
  if (!trace.empty()) {
    auto os = open_out(trace);
    write_trace_csv(os, r.trace);
  }
  return rep.ok() ? ok : solver_failure;
}

int run_sweep(const std::string& file, const std::string& axis, const std::vector<double>& values,
              const std::vector<std::string>& modes, const std::string& out, bool fast) {
  Scenario s = load(file);
  apply_leg_flags(s, fast);
  const SweepAxis ax = axis == "H" ? SweepAxis::H : axis == "D" ? SweepAxis::D : axis == "B" ? SweepAxis::B : SweepAxis::P;
  std::vector<DuplexMode> ms;
  for (const auto& m : modes) ms.push_back(parse_mode(m));
  if (ms.empty()) ms.push_back(s.mode);
  const auto rows = sweep(s, ax, values, ms);
  if (out.empty()) {
    write_sweep_csv(std::cout, rows);
  } else {
    auto os = open_out(out);
    write_sweep_csv(os, rows);
  }
  int worst = ok;
  for (const auto& r : rows) {
    if (!r.error.empty()) {
      std::cerr << "axis value " << r.axis_value << " (" << to_string(r.mode) << "): " << r.error << "\n";
      worst = std::max(worst, r.error_code);
    }
  }
  return worst;
}

int run_validate(const std::string& file) {
  const Scenario s = load(file);
  const auto c = derive_constants(s.airframe);
  std::printf("scenario ok: %zu users, mode %s, cruise altitude %.6g m\n", s.users.size(), to_string(s.mode),
              s.cruise_altitude);
  std::printf("P0 = %.4f W, P1 = %.4f W, P2 = %.4f W, hover = %.4f W\n", c.p0_watt, c.p1_watt, c.p2_watt,
              c.hover_watt());
  if (auto w = weight_mass_warning(s.airframe)) std::printf("warning: %s\n", w->c_str());
  int code = ok;
  for (std::size_t k = 0; k < s.users.size(); ++k) {
    const double lim = user_height_limit(s, s.users[k].comm);
    const bool feasible = !height_grid(s, s.users[k].comm).empty();
    std::printf("user %zu: height limit %.4f m%s\n", k + 1, lim, feasible ? "" : " (infeasible)");
    if (!feasible) code = infeasible;
  }
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Energy-minimizing UAV mission planner with wireless power transfer"};
  app.require_subcommand(1);

  std::string file, mode, out, trace, axis;
  bool exhaustive = false, fast = false, baseline = false;
  std::size_t user = 0;
  double height = 0.0, dist = 0.0;
  std::vector<double> values;
  std::vector<std::string> modes;

  auto* plan = app.add_subcommand("plan", "plan a full mission");
  plan->add_option("scenario", file, "scenario file")->required();
  plan->add_option("--mode", mode, "override duplex mode")->check(CLI::IsMember({"hd", "fd"}));
  plan->add_option("--out", out, "write the plan CSV");
  plan->add_flag("--fast", fast, "use reference profiles instead of SCA for flight legs");
  plan->add_flag("--baseline", baseline, "also report a seeded random-order plan");

  auto* order = app.add_subcommand("order", "visiting order only");
  order->add_option("scenario", file, "scenario file")->required();
  order->add_flag("--exhaustive", exhaustive, "enumerate all orders (at most 10 users)");
  order->add_option("--trace", trace, "write the dual trace CSV");

  auto* hover = app.add_subcommand("hover", "hover schedule of one user at a given height");
  hover->add_option("scenario", file, "scenario file")->required();
  hover->add_option("--user", user, "1-based user index")->required();
  hover->add_option("--height", height, "hover height (m)")->required();
  hover->add_option("--mode", mode, "override duplex mode")->check(CLI::IsMember({"hd", "fd"}));

  auto* traj = app.add_subcommand("trajectory", "optimize one straight leg");
  traj->add_option("--distance", dist, "leg length (m)")->required()->check(CLI::NonNegativeNumber);
  traj->add_option("--scenario", file, "take airframe, limits and solver settings from a scenario");
  traj->add_option("--out", out, "write the trajectory CSV");
  traj->add_option("--trace", trace, "write the SCA trace CSV");

  auto* sw = app.add_subcommand("sweep", "sweep one parameter (H in m, D in Mbit, B in MHz, P in W)");
  sw->add_option("scenario", file, "scenario file")->required();
  sw->add_option("--axis", axis, "swept parameter")->required()->check(CLI::IsMember({"H", "D", "B", "P"}));
  sw->add_option("--values", values, "axis values")->required();
  sw->add_option("--modes", modes, "duplex modes to evaluate")->check(CLI::IsMember({"hd", "fd"}));
  sw->add_option("--out", out, "write the sweep CSV instead of printing it");
  sw->add_flag("--fast", fast, "use reference profiles instead of SCA for flight legs");

  auto* val = app.add_subcommand("validate", "check a scenario file");
  val->add_option("scenario", file, "scenario file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return bad_input;
  }

  try {
    if (*plan) return run_plan(file, mode, out, fast, baseline);
    if (*order) return run_order(file, exhaustive, trace);
    if (*hover) return run_hover(file, user, height, mode);
    if (*traj) return run_trajectory(dist, file, out, trace);
    if (*sw) return run_sweep(file, axis, values, modes, out, fast);
    if (*val) return run_validate(file);
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return bad_input;
  } catch (const InvalidParameter& e) {
    std::cerr << "error: " << e.what() << "\n";
    return bad_input;
  } catch (const ModelDomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return bad_input;
  } catch (const InfeasibleError& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return infeasible;
  } catch (const std::exception& e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    return solver_failure;
  }
  return bad_input;
}
