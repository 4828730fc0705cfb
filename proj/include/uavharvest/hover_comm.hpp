#pragma once

// Air-to-ground channel model and the hover-phase solvers: half-duplex
// harvest-then-transmit in closed form (Lambert-W) and full-duplex by a root
// search, plus height bounds and a brute-force half-duplex oracle.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>

#include "uavharvest/errors.hpp"

namespace uavh {

enum class DuplexMode { hd, fd };

inline const char* to_string(DuplexMode m) { return m == DuplexMode::hd ? "hd" : "fd"; }

struct ChannelParams {
  double beta0 = 1.42e-4;      // reference gain at 1 m
  double alpha = 2.3;          // path-loss exponent
  double kappa_nlos = 0.2;     // extra NLoS attenuation
  double c1_env = 10.0;
  double c2_env = 0.6;
  double elevation_deg = 90.0; // UAV directly above the user

  bool operator==(const ChannelParams&) const = default;
};

struct RadioParams {
  double uav_tx_power = 1.0;              // W
  double bandwidth = 20e6;                // Hz
  double noise_psd = 1e-3 * std::pow(10.0, -17.4);  // W/Hz (-174 dBm/Hz)
  double harvest_efficiency = 0.9;
  double self_interference = 1e-10;       // -100 dB

  bool operator==(const RadioParams&) const = default;
};

struct UserComm {
  double demand_bits = 1e6;
  double rx_circuit_power = 1e-6;  // W
  double tx_circuit_power = 1e-3;  // W
  double pa_efficiency = 0.9;
  double circuit_delay = 2.0;      // s, full duplex only

  bool operator==(const UserComm&) const = default;
};

inline double dbm_per_hz_to_watt(double dbm) { return 1e-3 * std::pow(10.0, dbm / 10.0); }
inline double watt_to_dbm_per_hz(double w) { return 10.0 * std::log10(w / 1e-3); }
inline double db_to_ratio(double db) { return std::pow(10.0, db / 10.0); }
inline double ratio_to_db(double r) { return 10.0 * std::log10(r); }

inline double los_probability(const ChannelParams& ch) {
  return 1.0 / (1.0 + ch.c1_env * std::exp(-ch.c2_env * (ch.elevation_deg - ch.c1_env)));
}

// b = (a + kappa (1 - a)) beta0.
inline double gain_coefficient(const ChannelParams& ch) {
  const double a = los_probability(ch);
  return (a + ch.kappa_nlos * (1.0 - a)) * ch.beta0;
}

inline void validate(const ChannelParams& ch) {
  if (!(ch.beta0 > 0.0) || !std::isfinite(ch.beta0)) throw InvalidParameter("beta0", "must be positive");
  if (!(ch.alpha > 0.0) || !std::isfinite(ch.alpha)) throw InvalidParameter("alpha", "must be positive");
  if (!(ch.kappa_nlos > 0.0 && ch.kappa_nlos <= 1.0)) throw InvalidParameter("kappa_nlos", "must lie in (0, 1]");
  if (!(ch.c1_env >= 0.0) || !std::isfinite(ch.c1_env)) throw InvalidParameter("c1_env", "must be non-negative");
  if (!(ch.c2_env >= 0.0) || !std::isfinite(ch.c2_env)) throw InvalidParameter("c2_env", "must be non-negative");
  if (!(ch.elevation_deg > 0.0 && ch.elevation_deg <= 90.0)) {
    throw InvalidParameter("elevation_deg", "must lie in (0, 90]");
  }
}

inline void validate(const RadioParams& r) {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) throw InvalidParameter(name, "must be finite and positive");
  };
  positive(r.uav_tx_power, "uav_tx_power");
  positive(r.bandwidth, "bandwidth");
  positive(r.noise_psd, "noise_psd");
  positive(r.self_interference, "self_interference");
  if (!(r.harvest_efficiency > 0.0 && r.harvest_efficiency < 1.0)) {
    throw InvalidParameter("harvest_efficiency", "must lie in (0, 1)");
  }
}

inline void validate(const UserComm& u) {
  if (!(u.demand_bits > 0.0) || !std::isfinite(u.demand_bits)) throw InvalidParameter("demand_bits", "must be positive");
  if (!(u.pa_efficiency > 0.0 && u.pa_efficiency <= 1.0)) throw InvalidParameter("pa_efficiency", "must lie in (0, 1]");
  if (!(u.rx_circuit_power >= 0.0) || !std::isfinite(u.rx_circuit_power)) {
    throw InvalidParameter("rx_circuit_power", "must be non-negative");
  }
  if (!(u.tx_circuit_power >= 0.0) || !std::isfinite(u.tx_circuit_power)) {
    throw InvalidParameter("tx_circuit_power", "must be non-negative");
  }
  if (!(u.circuit_delay >= 0.0) || !std::isfinite(u.circuit_delay)) {
    throw InvalidParameter("circuit_delay", "must be non-negative");
  }
}

inline double expected_channel_gain(double height, const ChannelParams& ch) {
  if (!(height > 0.0) || !std::isfinite(height)) throw InvalidParameter("height", "must be positive");
  return gain_coefficient(ch) * std::pow(height, -ch.alpha);
}

// Principal branch of the Lambert-W function.
inline double lambert_w0(double x) {
  constexpr double inv_e = 0.36787944117144233;
  if (std::isnan(x) || x < -inv_e) throw ModelDomainError("lambert_w0 needs x >= -1/e");
  if (x == 0.0) return 0.0;
  if (x == -inv_e) return -1.0;
  if (std::isinf(x)) return x;
  double w;
  if (x < -0.32) {
    // Series around the branch point.
    const double p = std::sqrt(2.0 * (M_E * x + 1.0));
    w = -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p;
  } else if (x < 3.0) {
    w = std::log1p(x) * (1.0 - std::log1p(std::log1p(x)) / (2.0 + std::log1p(x)));
  } else {
    const double l1 = std::log(x);
    const double l2 = std::log(l1);
    w = l1 - l2 + l2 / l1;
  }
  const double tol = 1e-10 * std::max(1.0, std::abs(x));
  for (int it = 0; it < 100; ++it) {
    const double ew = std::exp(w);
    const double f = w * ew - x;
    if (std::abs(f) <= tol * 1e-3) break;
    const double wp1 = w + 1.0;
    if (wp1 == 0.0) break;
    const double denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
    const double next = w - f / denom;
    if (!std::isfinite(next) || next == w) break;
    w = std::max(next, -1.0);
  }
  if (!(std::abs(w * std::exp(w) - x) <= tol)) {
    throw SolverError("lambert_w0 did not reach its residual tolerance");
  }
  return w;
}

struct HoverSolution {
  DuplexMode mode = DuplexMode::hd;
  double hover_time = 0.0;     // s
  double harvest_time = 0.0;   // s (HD: rho * hover_time; FD: hover_time)
  double transmit_time = 0.0;  // s (HD: (1-rho) hover_time; FD: hover_time - delay)
  double time_split = 0.0;     // rho (HD); 1 for FD, which harvests throughout
  double user_tx_power = 0.0;  // W
  double hover_energy = 0.0;   // J
  double u1 = 0.0;             // HD closed-form coefficients
  double u2 = 0.0;
};

// Harvested/consumed energy and delivered bits for a given schedule.
struct HoverBalance {
  double harvested = 0.0;  // J
  double consumed = 0.0;   // J
  double bits = 0.0;
};

inline HoverBalance hover_balance(const HoverSolution& s, double height, const ChannelParams& ch,
                                  const RadioParams& r, const UserComm& u) {
  const double g = expected_channel_gain(height, ch);
  HoverBalance b;
  b.harvested = r.harvest_efficiency * r.uav_tx_power * g * s.harvest_time;
  if (s.mode == DuplexMode::hd) {
    b.consumed = u.rx_circuit_power * s.harvest_time +
                 s.transmit_time * (u.tx_circuit_power + s.user_tx_power / u.pa_efficiency);
    b.bits = s.transmit_time * r.bandwidth *
             std::log2(1.0 + s.user_tx_power * g / (r.bandwidth * r.noise_psd));
  } else {
    b.consumed = u.rx_circuit_power * s.hover_time +
                 s.transmit_time * (u.tx_circuit_power + s.user_tx_power / u.pa_efficiency);
    b.bits = s.transmit_time * r.bandwidth *
             std::log2(1.0 + s.user_tx_power * g /
                                 (r.self_interference * r.uav_tx_power + r.bandwidth * r.noise_psd));
  }
  return b;
}

// Largest hover height at which harvested power exceeds the circuit draw:
// HD (zeta P b / p_re)^(1/alpha); FD with negligible delay
// (zeta P b / (p_re + p_tr))^(1/alpha).
inline double height_bound(DuplexMode mode, const ChannelParams& ch, const RadioParams& r,
                           const UserComm& u) {
  const double draw = mode == DuplexMode::hd ? u.rx_circuit_power : u.rx_circuit_power + u.tx_circuit_power;
  if (draw <= 0.0) return std::numeric_limits<double>::infinity();
  return std::pow(r.harvest_efficiency * r.uav_tx_power * gain_coefficient(ch) / draw, 1.0 / ch.alpha);
}

namespace hover_detail {

inline double default_hover_power() {
  // P0 + P1 of the reference airframe; callers normally pass their own.
  return 168.48421774108;
}

}  // namespace hover_detail

inline HoverSolution solve_hd(double height, const ChannelParams& ch, const RadioParams& r, const UserComm& u,
                              double hover_power_watt = hover_detail::default_hover_power()) {
  validate(ch);
  validate(r);
  validate(u);
  const double bound = height_bound(DuplexMode::hd, ch, r, u);
  if (!(height < bound)) {
    throw InfeasibleError(InfeasibleKind::height, "hover height " + std::to_string(height) +
                                                      " m is not below the HD bound " +
                                                      std::to_string(bound) + " m");
  }
  const double g = expected_channel_gain(height, ch);
  const double noise = r.bandwidth * r.noise_psd;
  const double net_harvest = r.harvest_efficiency * r.uav_tx_power * g - u.rx_circuit_power;
  const double u1 = 1.0 - u.pa_efficiency * u.tx_circuit_power * g / noise;
  const double u2 = u.pa_efficiency * net_harvest * g / noise;
  if (!(u2 > 1.0)) {
    throw InfeasibleError(InfeasibleKind::pathological_regime,
                          "harvest-to-noise ratio u2 = " + std::to_string(u2) + " is not above 1");
  }
  // Stationarity of t2 + (2^{D/(B t2)} - u1) t2 / u2.
  const double w = lambert_w0((u2 - u1) / M_E);
  const double t2 = std::log(2.0) * u.demand_bits / (r.bandwidth * (w + 1.0));
  const double t1 = (std::exp2(u.demand_bits / (r.bandwidth * t2)) - u1) * t2 / u2;
  HoverSolution s;
  s.mode = DuplexMode::hd;
  s.harvest_time = t1;
  s.transmit_time = t2;
  s.hover_time = t1 + t2;
  s.time_split = t1 / s.hover_time;
  s.user_tx_power = u.pa_efficiency * (net_harvest * t1 / t2 - u.tx_circuit_power);
  s.hover_energy = hover_power_watt * s.hover_time;
  s.u1 = u1;
  s.u2 = u2;
  return s;
}

// Left side of the full-duplex energy-balance equation in the hover time t:
// user power needed for the demand minus the power the balance allows.
inline double fd_balance_lhs(double t, double height, const ChannelParams& ch, const RadioParams& r,
                             const UserComm& u) {
  const double g = expected_channel_gain(height, ch);
  const double s = t - u.circuit_delay;
  if (!(s > 0.0)) return std::numeric_limits<double>::infinity();
  const double c = (r.self_interference * r.uav_tx_power + r.bandwidth * r.noise_psd) / g;
  const double net = r.harvest_efficiency * r.uav_tx_power * g - u.rx_circuit_power;
  return c * std::expm1(std::log(2.0) * u.demand_bits / (r.bandwidth * s)) -
         u.pa_efficiency * net * t / s + u.pa_efficiency * u.tx_circuit_power;
}

struct FdSettings {
  double t_upper = 1e4;   // s
  double time_tol = 1e-9; // s
};

namespace hover_detail {

// (t - delay) * LHS as a function of the transmit window s; convex in s, so
// its sublevel set {<= 0} is an interval.
inline double fd_scaled(double s, double height, const ChannelParams& ch, const RadioParams& r,
                        const UserComm& u) {
  return s * fd_balance_lhs(s + u.circuit_delay, height, ch, r, u);
}

// Minimizer of the convex scaled LHS on (0, s_max].
inline double fd_scaled_argmin(double s_max, double height, const ChannelParams& ch, const RadioParams& r,
                               const UserComm& u) {
  auto f = [&](double s) { return fd_scaled(s, height, ch, r, u); };
  // Geometric scan, then golden-section between the neighbours of the best point.
  double best_s = s_max, best = f(s_max);
  double s = s_max;
  for (int j = 0; j < 200 && s > 1e-15; ++j) {
    s *= 0.5;
    const double v = f(s);
    if (v < best) {
      best = v;
      best_s = s;
    }
  }
  double lo = best_s * 0.5, hi = std::min(best_s * 2.0, s_max);
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = hi - gr * (hi - lo), b = lo + gr * (hi - lo);
  double fa = f(a), fb = f(b);
  for (int it = 0; it < 200 && (hi - lo) > 1e-15 * hi; ++it) {
    if (fa < fb) {
      hi = b;
      b = a;
      fb = fa;
      a = hi - gr * (hi - lo);
      fa = f(a);
    } else {
      lo = a;
      a = b;
      fa = fb;
      b = lo + gr * (hi - lo);
      fb = f(b);
    }
  }
  const double mid = 0.5 * (lo + hi);
  return f(mid) < best ? mid : best_s;
}

}  // namespace hover_detail

// Shortest hover time meeting the demand under energy neutrality: the first
// zero of fd_balance_lhs above the circuit delay.
inline HoverSolution solve_fd(double height, const ChannelParams& ch, const RadioParams& r, const UserComm& u,
                              double hover_power_watt = hover_detail::default_hover_power(),
                              const FdSettings& fs = {}) {
  validate(ch);
  validate(r);
  validate(u);
  if (!(height > 0.0)) throw InvalidParameter("height", "must be positive");
  const double net = r.harvest_efficiency * r.uav_tx_power * expected_channel_gain(height, ch) -
                     u.rx_circuit_power;
  if (u.circuit_delay <= 0.0 && !(height < height_bound(DuplexMode::fd, ch, r, u))) {
    throw InfeasibleError(InfeasibleKind::height, "hover height " + std::to_string(height) +
                                                      " m is not below the FD bound");
  }
  if (!(net > 0.0)) {
    throw InfeasibleError(InfeasibleKind::height, "harvested power does not cover the receive circuit");
  }
  const double s_max = fs.t_upper - u.circuit_delay;
  if (!(s_max > 0.0)) throw InvalidParameter("t_upper", "must exceed the circuit delay");
  auto f = [&](double s) { return hover_detail::fd_scaled(s, height, ch, r, u); };
  const double s_star = hover_detail::fd_scaled_argmin(s_max, height, ch, r, u);
  if (!(f(s_star) < 0.0)) {
    throw InfeasibleError(InfeasibleKind::no_sign_change,
                          "energy balance has no sign change below t_upper at h = " + std::to_string(height));
  }
  double hi = s_star, lo = s_star;
  do {
    lo *= 0.5;
  } while (f(lo) <= 0.0 && lo > 1e-300);
  // Bisect past time_tol down to floating-point resolution so the balance
  // holds with equality as tightly as the arithmetic allows.
  for (int it = 0; it < 2000; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (f(mid) > 0.0) lo = mid;
    else hi = mid;
  }
  if (hi - lo > fs.time_tol) throw SolverError("FD bisection did not reach time_tol");
  const double s = hi;  // feasible side
  const double g = expected_channel_gain(height, ch);
  const double c = (r.self_interference * r.uav_tx_power + r.bandwidth * r.noise_psd) / g;
  HoverSolution sol;
  sol.mode = DuplexMode::fd;
  sol.hover_time = s + u.circuit_delay;
  sol.harvest_time = sol.hover_time;
  sol.transmit_time = s;
  sol.time_split = 1.0;
  sol.user_tx_power = c * std::expm1(std::log(2.0) * u.demand_bits / (r.bandwidth * s));
  sol.hover_energy = hover_power_watt * sol.hover_time;
  return sol;
}

// Highest hover height with a feasible FD schedule (bisection on the
// feasibility verdict, which is monotone in height).
inline double fd_height_limit(const ChannelParams& ch, const RadioParams& r, const UserComm& u,
                              const FdSettings& fs = {}) {
  if (u.circuit_delay <= 0.0) return height_bound(DuplexMode::fd, ch, r, u);
  auto feasible = [&](double h) {
    try {
      solve_fd(h, ch, r, u, 1.0, fs);
      return true;
    } catch (const InfeasibleError&) {
      return false;
    }
  };
  double hi = height_bound(DuplexMode::hd, ch, r, u);
  double lo = hi;
  while (lo > 1e-6 && !feasible(lo)) lo *= 0.5;
  if (!feasible(lo)) return 0.0;
  while (hi - lo > 1e-9 * hi) {
    const double mid = 0.5 * (lo + hi);
    if (feasible(mid)) lo = mid;
    else hi = mid;
  }
  return lo;
}

// Highest height usable in `mode`; the HD closed form also needs u2 > 1.
inline double feasible_height_limit(DuplexMode mode, const ChannelParams& ch, const RadioParams& r,
                                    const UserComm& u) {
  if (mode == DuplexMode::fd) return fd_height_limit(ch, r, u);
  return height_bound(DuplexMode::hd, ch, r, u);
}

inline HoverSolution solve_hover(DuplexMode mode, double height, const ChannelParams& ch, const RadioParams& r,
                                 const UserComm& u, double hover_power_watt) {
  return mode == DuplexMode::hd ? solve_hd(height, ch, r, u, hover_power_watt)
                                : solve_fd(height, ch, r, u, hover_power_watt);
}

// Brute-force HD schedule: minimize t1 + t2 over a log-spaced (t1, t2) grid,
// zooming around the best feasible cell. Feasible means the user power left
// by the energy balance carries the demand within t2.
inline HoverSolution oracle_hd_grid(double height, const ChannelParams& ch, const RadioParams& r,
                                    const UserComm& u, int grid_resolution = 200,
                                    double hover_power_watt = hover_detail::default_hover_power()) {
  validate(ch);
  validate(r);
  validate(u);
  if (grid_resolution < 8) throw InvalidParameter("grid_resolution", "must be >= 8");
  const double bound = height_bound(DuplexMode::hd, ch, r, u);
  if (!(height < bound)) {
    throw InfeasibleError(InfeasibleKind::height, "hover height is not below the HD bound");
  }
  const double g = expected_channel_gain(height, ch);
  const double noise = r.bandwidth * r.noise_psd;
  const double net = r.harvest_efficiency * r.uav_tx_power * g - u.rx_circuit_power;
  auto power = [&](double t1, double t2) { return u.pa_efficiency * (net * t1 / t2 - u.tx_circuit_power); };
  auto feasible = [&](double t1, double t2) {
    const double p = power(t1, t2);
    if (!(p > 0.0)) return false;
    return t2 * r.bandwidth * std::log2(1.0 + p * g / noise) >= u.demand_bits;
  };
  // Each feasible t2 admits a smallest feasible t1; scanning t2 on a grid and
  // bisecting t1 on its own grid keeps this a 2-D grid search.
  double lo1 = -12.0, hi1 = 6.0, lo2 = -12.0, hi2 = 6.0;  // log10 seconds
  double best = std::numeric_limits<double>::infinity(), bt1 = 0.0, bt2 = 0.0;
  for (int round = 0; round < 40; ++round) {
    const double d1 = (hi1 - lo1) / (grid_resolution - 1);
    const double d2 = (hi2 - lo2) / (grid_resolution - 1);
    bool found = false;
    for (int j = 0; j < grid_resolution; ++j) {
      const double t2 = std::pow(10.0, lo2 + j * d2);
      // Smallest grid t1 that is feasible for this t2 (feasibility is monotone in t1).
      int a = 0, b = grid_resolution - 1;
      if (!feasible(std::pow(10.0, lo1 + b * d1), t2)) continue;
      while (a < b) {
        const int m = (a + b) / 2;
        if (feasible(std::pow(10.0, lo1 + m * d1), t2)) b = m;
        else a = m + 1;
      }
      const double t1 = std::pow(10.0, lo1 + a * d1);
      if (t1 + t2 < best) {
        best = t1 + t2;
        bt1 = t1;
        bt2 = t2;
        found = true;
      }
    }
    if (!found && round == 0) {
      throw InfeasibleError(InfeasibleKind::height, "no feasible HD schedule on the oracle grid");
    }
    const double c1 = std::log10(bt1), c2 = std::log10(bt2);
    const double w1 = std::max(4.0 * d1, 1e-12), w2 = std::max(4.0 * d2, 1e-12);
    if (d1 < 1e-9 && d2 < 1e-9) break;
    lo1 = c1 - w1;
    hi1 = c1 + w1;
    lo2 = c2 - w2;
    hi2 = c2 + w2;
  }
  HoverSolution s;
  s.mode = DuplexMode::hd;
  s.harvest_time = bt1;
  s.transmit_time = bt2;
  s.hover_time = bt1 + bt2;
  s.time_split = bt1 / s.hover_time;
  s.user_tx_power = power(bt1, bt2);
  s.hover_energy = hover_power_watt * s.hover_time;
  return s;
}

}  // namespace uavh
