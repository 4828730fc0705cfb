#pragma once

// Scenario files (YAML) and plan/sweep output.

#include <yaml-cpp/yaml.h>

#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "uavharvest/errors.hpp"
#include "uavharvest/mission.hpp"

namespace uavh {

namespace io_detail {

// yaml-cpp marks are 0-based; negative means unknown.
inline ParseError parse_error(const std::string& path, int mark_line, const std::string& what) {
  return ParseError(path, mark_line >= 0 ? mark_line + 1 : 0, what);
}

inline std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

// Reads a mapping while tracking which keys were consumed.
class Section {
 public:
  Section(const YAML::Node& node, std::string path) : node_(node), path_(std::move(path)) {
    if (node_ && !node_.IsMap() && !node_.IsNull()) {
      throw io_detail::parse_error(path_.empty() ? "<root>" : path_, node_.Mark().line, "expected a mapping");
    }
  }

  bool has(const std::string& key) const {
    const YAML::Node& n = node_;
    if (!n.IsMap()) return false;
    const YAML::Node c = n[key];
    return c && !c.IsNull();
  }

  // Undefined or null when the key is absent.
  YAML::Node child(const std::string& key) {
    used_.insert(key);
    const YAML::Node& n = node_;
    if (n.IsMap()) {
      if (YAML::Node c = n[key]) return c;
    }
    return YAML::Node();
  }

  void number(const std::string& key, double& out) {
    YAML::Node n = child(key);
    if (!n || n.IsNull()) return;
    if (!n.IsScalar()) throw io_detail::parse_error(join(path_, key), n.Mark().line, "expected a number");
    try {
      out = n.as<double>();
    } catch (const YAML::Exception&) {
      throw io_detail::parse_error(join(path_, key), n.Mark().line, "expected a number, got '" + n.Scalar() + "'");
    }
    if (!std::isfinite(out)) throw io_detail::parse_error(join(path_, key), n.Mark().line, "must be finite");
  }

  // Value stored in SI but written in a logarithmic unit.
  void log_number(const std::string& key, double& out, double (*to_si)(double)) {
    double v = 0.0;
    if (!has(key)) {
      used_.insert(key);
      return;
    }
    number(key, v);
    out = to_si(v);
  }

  void integer(const std::string& key, int& out) {
    YAML::Node n = child(key);
    if (!n || n.IsNull()) return;
    try {
      out = n.as<int>();
    } catch (const YAML::Exception&) {
      throw io_detail::parse_error(join(path_, key), n.Mark().line, "expected an integer");
    }
  }

  void unsigned_integer(const std::string& key, std::uint64_t& out) {
    YAML::Node n = child(key);
    if (!n || n.IsNull()) return;
    try {
      out = n.as<std::uint64_t>();
    } catch (const YAML::Exception&) {
      throw io_detail::parse_error(join(path_, key), n.Mark().line, "expected a non-negative integer");
    }
  }

  void size(const std::string& key, std::size_t& out) {
    std::uint64_t v = out;
    unsigned_integer(key, v);
    out = static_cast<std::size_t>(v);
  }

  void boolean(const std::string& key, bool& out) {
    YAML::Node n = child(key);
    if (!n || n.IsNull()) return;
    try {
      out = n.as<bool>();
    } catch (const YAML::Exception&) {
      throw io_detail::parse_error(join(path_, key), n.Mark().line, "expected true or false");
    }
  }

  template <class E>
  void choice(const std::string& key, E& out, const std::map<std::string, E>& options) {
    YAML::Node n = child(key);
    if (!n || n.IsNull()) return;
    const std::string s = n.IsScalar() ? n.Scalar() : "";
    auto it = options.find(s);
    if (it == options.end()) {
      std::string allowed;
      for (const auto& [k, v] : options) allowed += (allowed.empty() ? "" : ", ") + k;
      throw io_detail::parse_error(join(path_, key), n.Mark().line, "expected one of " + allowed);
    }
    out = it->second;
  }

  void finish() const {
    if (!node_.IsMap()) return;
    for (const auto& kv : node_) {
      const std::string k = kv.first.Scalar();
      if (!used_.count(k)) throw io_detail::parse_error(join(path_, k), kv.first.Mark().line, "unknown key");
    }
  }

  const std::string& path() const { return path_; }

 private:
  YAML::Node node_;
  std::string path_;
  std::set<std::string> used_;
};

inline const std::map<std::string, DuplexMode>& mode_names() {
  static const std::map<std::string, DuplexMode> m{{"hd", DuplexMode::hd}, {"fd", DuplexMode::fd}};
  return m;
}

inline const std::map<std::string, LegModel>& leg_model_names() {
  static const std::map<std::string, LegModel> m{{"sca", LegModel::sca}, {"feasible", LegModel::feasible}};
  return m;
}

inline const std::map<std::string, DurationRule>& duration_rule_names() {
  static const std::map<std::string, DurationRule> m{{"lemma2_bound", DurationRule::lemma2_bound},
                                                      {"multiple_of_feasible", DurationRule::multiple_of_feasible}};
  return m;
}

inline void read_user(Section& u, UserSpec& spec) {
  if (!u.has("x_m")) throw io_detail::parse_error(join(u.path(), "x_m"), -1, "missing required key");
  if (!u.has("y_m")) throw io_detail::parse_error(join(u.path(), "y_m"), -1, "missing required key");
  u.number("x_m", spec.position.x);
  u.number("y_m", spec.position.y);
  u.number("demand_bits", spec.comm.demand_bits);
  u.number("rx_circuit_power_W", spec.comm.rx_circuit_power);
  u.number("tx_circuit_power_W", spec.comm.tx_circuit_power);
  u.number("pa_efficiency", spec.comm.pa_efficiency);
  u.number("circuit_delay_s", spec.comm.circuit_delay);
  u.finish();
}

}  // namespace io_detail

inline Scenario parse_scenario(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw io_detail::parse_error("<document>", e.mark.line, e.msg);
  }
  if (!root || root.IsNull()) throw io_detail::parse_error("users", -1, "missing required key");
  using io_detail::Section;
  Section top(root, "");
  Scenario s;

  {
    Section a(top.child("airframe"), "airframe");
    auto& af = s.airframe;
    a.number("weight_N", af.weight_newton);
    a.number("air_density_kg_m3", af.air_density);
    a.number("flat_plate_area_m2", af.flat_plate_area);
    a.number("rotor_radius_m", af.rotor_radius);
    a.number("rotor_disc_area_m2", af.rotor_disc_area);
    a.number("blade_angular_velocity_rad_s", af.blade_angular_velocity);
    a.number("fuselage_drag_ratio", af.fuselage_drag_ratio);
    a.number("rotor_solidity", af.rotor_solidity);
    a.number("profile_drag_coeff", af.profile_drag_coeff);
    a.number("induced_power_factor", af.induced_power_factor);
    a.number("mass_kg", af.mass_kg);
    a.number("gravity_m_s2", af.gravity);
    a.finish();
  }
  {
    Section l(top.child("limits"), "limits");
    l.number("v_max_m_s", s.limits.v_max);
    l.number("a_max_m_s2", s.limits.a_max);
    l.finish();
  }
  {
    Section c(top.child("channel"), "channel");
    c.number("beta0", s.channel.beta0);
    c.number("alpha", s.channel.alpha);
    c.number("kappa_nlos", s.channel.kappa_nlos);
    c.number("c1_env", s.channel.c1_env);
    c.number("c2_env", s.channel.c2_env);
    c.number("elevation_deg", s.channel.elevation_deg);
    c.finish();
  }
  {
    Section r(top.child("radio"), "radio");
    for (auto [a, b] : {std::pair{"noise_psd_dBm_Hz", "noise_psd_W_Hz"},
                        std::pair{"self_interference_dB", "self_interference_ratio"}}) {
      if (r.has(a) && r.has(b)) throw io_detail::parse_error(io_detail::join("radio", b), -1, std::string("conflicts with ") + a);
    }
    r.number("uav_tx_power_W", s.radio.uav_tx_power);
    r.number("bandwidth_Hz", s.radio.bandwidth);
    r.log_number("noise_psd_dBm_Hz", s.radio.noise_psd, dbm_per_hz_to_watt);
    r.number("noise_psd_W_Hz", s.radio.noise_psd);
    r.number("harvest_efficiency", s.radio.harvest_efficiency);
    r.log_number("self_interference_dB", s.radio.self_interference, db_to_ratio);
    r.number("self_interference_ratio", s.radio.self_interference);
    r.finish();
  }
  top.choice("mode", s.mode, io_detail::mode_names());
  {
    Section d(top.child("depot"), "depot");
    d.number("x_m", s.depot.x);
    d.number("y_m", s.depot.y);
    d.number("altitude_m", s.cruise_altitude);
    d.finish();
  }
  {
    Section sv(top.child("solver"), "solver");
    auto& so = s.solver;
    sv.choice("straight_model", so.straight_model, io_detail::leg_model_names());
    sv.choice("vertical_model", so.vertical_model, io_detail::leg_model_names());
    sv.choice("matrix_model", so.matrix_model, io_detail::leg_model_names());
    sv.boolean("exhaustive_check", so.exhaustive_check);
    sv.unsigned_integer("seed", so.seed);
    {
      Section sc(sv.child("sca"), "solver.sca");
      sc.integer("max_outer_iters", so.sca.max_outer_iters);
      sc.number("objective_tol", so.sca.objective_tol);
      sc.number("subproblem_kkt_tol", so.sca.subproblem_kkt_tol);
      sc.size("slots", so.sca.slots);
      sc.number("slot_step_s", so.sca.slot_step);
      sc.size("min_slots", so.sca.min_slots);
      sc.size("max_slots", so.sca.max_slots);
      sc.choice("duration_rule", so.sca.duration_rule, io_detail::duration_rule_names());
      sc.number("duration_multiple", so.sca.duration_multiple);
      sc.number("padding_speed_m_s", so.sca.padding_speed);
      sc.number("padding_position_m", so.sca.padding_position);
      sc.finish();
    }
    {
      Section du(sv.child("dual"), "solver.dual");
      du.integer("max_iters", so.dual.max_iters);
      du.integer("stall_window", so.dual.stall_window);
      du.number("stall_tol", so.dual.stall_tol);
      du.number("step_scale", so.dual.step_scale);
      du.boolean("keep_best_iterate", so.dual.keep_best_iterate);
      du.boolean("polish", so.dual.polish);
      du.integer("polish_starts", so.dual.polish_starts);
      du.finish();
    }
    {
      Section g(sv.child("grid"), "solver.grid");
      g.number("h_min_m", so.grid.h_min);
      g.number("step_m", so.grid.step);
      g.number("margin_m", so.grid.margin);
      g.boolean("refine", so.grid.refine);
      g.number("refine_tol_m", so.grid.refine_tol);
      g.finish();
    }
    {
      Section f(sv.child("fd"), "solver.fd");
      f.number("t_upper_s", so.fd.t_upper);
      f.number("time_tol_s", so.fd.time_tol);
      f.finish();
    }
    sv.finish();
  }
  {
    YAML::Node users = top.child("users");
    if (!users || users.IsNull()) throw io_detail::parse_error("users", -1, "missing required key");
    if (!users.IsSequence()) throw io_detail::parse_error("users", users.Mark().line, "expected a list");
    for (std::size_t k = 0; k < users.size(); ++k) {
      Section u(users[k], "users[" + std::to_string(k) + "]");
      UserSpec spec;
      io_detail::read_user(u, spec);
      s.users.push_back(spec);
    }
  }
  top.finish();
  validate(s);
  return s;
}

namespace io_detail {

inline std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Writes `si` in the logarithmic unit when the conversion round-trips
// exactly, else under the SI key.
inline void emit_log(YAML::Emitter& e, const std::string& log_key, const std::string& si_key, double si,
                     double (*to_si)(double), double (*from_si)(double)) {
  double v = from_si(si);
  for (int k = 0; k < 8; ++k) {
    if (to_si(v) == si && to_si(std::stod(num(v))) == si) {
      e << YAML::Key << log_key << YAML::Value << YAML::Flow << std::stod(num(v));
      return;
    }
    v = std::nextafter(v, to_si(v) < si ? INFINITY : -INFINITY);
  }
  e << YAML::Key << si_key << YAML::Value << si;
}

template <class E>
std::string name_of(E v, const std::map<std::string, E>& names) {
  for (const auto& [k, x] : names) {
    if (x == v) return k;
  }
  return "?";
}

}  // namespace io_detail

inline std::string emit_scenario(const Scenario& s) {
  using io_detail::name_of;
  YAML::Emitter e;
  e.SetDoublePrecision(17);
  e << YAML::BeginMap;
  e << YAML::Key << "mode" << YAML::Value << to_string(s.mode);
  e << YAML::Key << "depot" << YAML::Value << YAML::BeginMap << YAML::Key << "x_m" << YAML::Value << s.depot.x
    << YAML::Key << "y_m" << YAML::Value << s.depot.y << YAML::Key << "altitude_m" << YAML::Value
    << s.cruise_altitude << YAML::EndMap;
  const auto& af = s.airframe;
  e << YAML::Key << "airframe" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "weight_N" << YAML::Value << af.weight_newton;
  e << YAML::Key << "air_density_kg_m3" << YAML::Value << af.air_density;
  e << YAML::Key << "flat_plate_area_m2" << YAML::Value << af.flat_plate_area;
  e << YAML::Key << "rotor_radius_m" << YAML::Value << af.rotor_radius;
  e << YAML::Key << "rotor_disc_area_m2" << YAML::Value << af.rotor_disc_area;
  e << YAML::Key << "blade_angular_velocity_rad_s" << YAML::Value << af.blade_angular_velocity;
  e << YAML::Key << "fuselage_drag_ratio" << YAML::Value << af.fuselage_drag_ratio;
  e << YAML::Key << "rotor_solidity" << YAML::Value << af.rotor_solidity;
  e << YAML::Key << "profile_drag_coeff" << YAML::Value << af.profile_drag_coeff;
  e << YAML::Key << "induced_power_factor" << YAML::Value << af.induced_power_factor;
  e << YAML::Key << "mass_kg" << YAML::Value << af.mass_kg;
  e << YAML::Key << "gravity_m_s2" << YAML::Value << af.gravity;
  e << YAML::EndMap;
  e << YAML::Key << "limits" << YAML::Value << YAML::BeginMap << YAML::Key << "v_max_m_s" << YAML::Value
    << s.limits.v_max << YAML::Key << "a_max_m_s2" << YAML::Value << s.limits.a_max << YAML::EndMap;
  const auto& ch = s.channel;
  e << YAML::Key << "channel" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "beta0" << YAML::Value << ch.beta0;
  e << YAML::Key << "alpha" << YAML::Value << ch.alpha;
  e << YAML::Key << "kappa_nlos" << YAML::Value << ch.kappa_nlos;
  e << YAML::Key << "c1_env" << YAML::Value << ch.c1_env;
  e << YAML::Key << "c2_env" << YAML::Value << ch.c2_env;
  e << YAML::Key << "elevation_deg" << YAML::Value << ch.elevation_deg;
  e << YAML::EndMap;
  const auto& r = s.radio;
  e << YAML::Key << "radio" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "uav_tx_power_W" << YAML::Value << r.uav_tx_power;
  e << YAML::Key << "bandwidth_Hz" << YAML::Value << r.bandwidth;
  io_detail::emit_log(e, "noise_psd_dBm_Hz", "noise_psd_W_Hz", r.noise_psd, dbm_per_hz_to_watt, watt_to_dbm_per_hz);
  e << YAML::Key << "harvest_efficiency" << YAML::Value << r.harvest_efficiency;
  io_detail::emit_log(e, "self_interference_dB", "self_interference_ratio", r.self_interference, db_to_ratio,
                      ratio_to_db);
  e << YAML::EndMap;
  const auto& so = s.solver;
  e << YAML::Key << "solver" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "straight_model" << YAML::Value << to_string(so.straight_model);
  e << YAML::Key << "vertical_model" << YAML::Value << to_string(so.vertical_model);
  e << YAML::Key << "matrix_model" << YAML::Value << to_string(so.matrix_model);
  e << YAML::Key << "exhaustive_check" << YAML::Value << so.exhaustive_check;
  e << YAML::Key << "seed" << YAML::Value << so.seed;
  e << YAML::Key << "sca" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "max_outer_iters" << YAML::Value << so.sca.max_outer_iters;
  e << YAML::Key << "objective_tol" << YAML::Value << so.sca.objective_tol;
  e << YAML::Key << "subproblem_kkt_tol" << YAML::Value << so.sca.subproblem_kkt_tol;
  e << YAML::Key << "slots" << YAML::Value << static_cast<std::uint64_t>(so.sca.slots);
  e << YAML::Key << "slot_step_s" << YAML::Value << so.sca.slot_step;
  e << YAML::Key << "min_slots" << YAML::Value << static_cast<std::uint64_t>(so.sca.min_slots);
  e << YAML::Key << "max_slots" << YAML::Value << static_cast<std::uint64_t>(so.sca.max_slots);
  e << YAML::Key << "duration_rule" << YAML::Value << name_of(so.sca.duration_rule, io_detail::duration_rule_names());
  e << YAML::Key << "duration_multiple" << YAML::Value << so.sca.duration_multiple;
  e << YAML::Key << "padding_speed_m_s" << YAML::Value << so.sca.padding_speed;
  e << YAML::Key << "padding_position_m" << YAML::Value << so.sca.padding_position;
  e << YAML::EndMap;
  e << YAML::Key << "dual" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "max_iters" << YAML::Value << so.dual.max_iters;
  e << YAML::Key << "stall_window" << YAML::Value << so.dual.stall_window;
  e << YAML::Key << "stall_tol" << YAML::Value << so.dual.stall_tol;
  e << YAML::Key << "step_scale" << YAML::Value << so.dual.step_scale;
  e << YAML::Key << "keep_best_iterate" << YAML::Value << so.dual.keep_best_iterate;
  e << YAML::Key << "polish" << YAML::Value << so.dual.polish;
  e << YAML::Key << "polish_starts" << YAML::Value << so.dual.polish_starts;
  e << YAML::EndMap;
  e << YAML::Key << "grid" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "h_min_m" << YAML::Value << so.grid.h_min;
  e << YAML::Key << "step_m" << YAML::Value << so.grid.step;
  e << YAML::Key << "margin_m" << YAML::Value << so.grid.margin;
  e << YAML::Key << "refine" << YAML::Value << so.grid.refine;
  e << YAML::Key << "refine_tol_m" << YAML::Value << so.grid.refine_tol;
  e << YAML::EndMap;
  e << YAML::Key << "fd" << YAML::Value << YAML::BeginMap << YAML::Key << "t_upper_s" << YAML::Value
    << so.fd.t_upper << YAML::Key << "time_tol_s" << YAML::Value << so.fd.time_tol << YAML::EndMap;
  e << YAML::EndMap;
  e << YAML::Key << "users" << YAML::Value << YAML::BeginSeq;
  for (const auto& u : s.users) {
    e << YAML::BeginMap;
    e << YAML::Key << "x_m" << YAML::Value << u.position.x;
    e << YAML::Key << "y_m" << YAML::Value << u.position.y;
    e << YAML::Key << "demand_bits" << YAML::Value << u.comm.demand_bits;
    e << YAML::Key << "rx_circuit_power_W" << YAML::Value << u.comm.rx_circuit_power;
    e << YAML::Key << "tx_circuit_power_W" << YAML::Value << u.comm.tx_circuit_power;
    e << YAML::Key << "pa_efficiency" << YAML::Value << u.comm.pa_efficiency;
    e << YAML::Key << "circuit_delay_s" << YAML::Value << u.comm.circuit_delay;
    e << YAML::EndMap;
  }
  e << YAML::EndSeq;
  e << YAML::EndMap;
  return std::string(e.c_str()) + "\n";
}

enum class PlanFormat { human, csv };

inline constexpr const char* plan_csv_header =
    "stage,user,h_m,t1_s,t2_s,t3_s,t4_s,rho,p_user_W,E1_J,E2_J,E3_J,E4_J,E_stage_J";

inline void emit_plan(std::ostream& os, const MissionPlan& p, PlanFormat format) {
  using io_detail::num;
  if (format == PlanFormat::csv) {
    os << plan_csv_header << '\n';
    for (std::size_t k = 0; k < p.stages.size(); ++k) {
      const auto& s = p.stages[k];
      os << k + 1 << ',' << s.user << ',' << num(s.hover_height) << ',' << num(s.t1()) << ',' << num(s.t2()) << ','
         << num(s.t3()) << ',' << num(s.t4()) << ',' << num(s.hover.time_split) << ','
         << num(s.hover.user_tx_power) << ',' << num(s.e1) << ',' << num(s.e2) << ',' << num(s.e3) << ','
         << num(s.e4) << ',' << num(s.stage_energy) << '\n';
    }
    os << "return,,," << num(p.return_leg.active_duration) << ",,,,,," << num(p.return_energy) << ",,,,\n";
    return;
  }
  char line[256];
  os << "mode: " << to_string(p.mode) << "\n";
  os << "order:";
  for (std::size_t u : p.order.order) os << ' ' << u;
  os << (p.order_from_exhaustive ? "  (exhaustive check improved the dual order)" : "") << "\n";
  std::snprintf(line, sizeof line, "%-6s %4s %8s %8s %8s %8s %8s %7s %10s %11s %11s %10s %11s %12s\n", "stage",
                "user", "h_m", "t1_s", "t2_s", "t3_s", "t4_s", "rho", "p_W", "E1_J", "E2_J", "E3_J", "E4_J",
                "E_stage_J");
  os << line;
  for (std::size_t k = 0; k < p.stages.size(); ++k) {
    const auto& s = p.stages[k];
    std::snprintf(line, sizeof line,
                  "%-6zu %4zu %8.4f %8.3f %8.3f %8.5f %8.3f %7.5f %10.3e %11.2f %11.2f %10.4f %11.2f %12.2f\n", k + 1,
                  s.user, s.hover_height, s.t1(), s.t2(), s.t3(), s.t4(), s.hover.time_split, s.hover.user_tx_power,
                  s.e1, s.e2, s.e3, s.e4, s.stage_energy);
    os << line;
  }
  std::snprintf(line, sizeof line, "%-6s %4s %8s %8.3f %8s %8s %8s %7s %10s %11.2f\n", "return", "-", "-",
                p.return_leg.active_duration, "-", "-", "-", "-", "-", p.return_energy);
  os << line;
  std::snprintf(line, sizeof line, "total energy: %.3f J (hover %.3f J, flight %.3f J)\n", p.total_energy,
                p.hover_energy(), p.flight_energy());
  os << line;
}

inline constexpr const char* sweep_csv_header = "axis_value,total_J,hover_J,flight_J,mean_h_m,mode";

inline void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows) {
  using io_detail::num;
  os << sweep_csv_header << '\n';
  for (const auto& r : rows) {
    os << num(r.axis_value) << ',' << num(r.total) << ',' << num(r.hover) << ',' << num(r.flight) << ','
       << num(r.mean_height) << ',' << to_string(r.mode) << '\n';
  }
}

}  // namespace uavh
