#pragma once

// Visiting order of the users: the stage/user assignment program solved by a
// Lagrangian dual method with subgradient updates, optimal assignment repair,
// and an exhaustive reference for small instances.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numeric>
#include <ostream>
#include <map>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "uavharvest/errors.hpp"

namespace uavh {

struct Point2 {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const Point2&) const = default;
};

inline double distance(const Point2& a, const Point2& b) { return std::hypot(a.x - b.x, a.y - b.y); }

// Square matrix over {depot, user 1, ..., user K}; index 0 is the depot.
class EnergyMatrix {
 public:
  EnergyMatrix() = default;
  explicit EnergyMatrix(std::size_t users) : n_(users + 1), e_(n_ * n_, 0.0) {}

  std::size_t users() const { return n_ == 0 ? 0 : n_ - 1; }
  std::size_t size() const { return n_; }
  double operator()(std::size_t i, std::size_t j) const { return e_[i * n_ + j]; }
  void set_symmetric(std::size_t i, std::size_t j, double v) {
    e_[i * n_ + j] = v;
    e_[j * n_ + i] = v;
  }
  double mean_offdiagonal() const {
    if (n_ < 2) return 0.0;
    double s = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
      for (std::size_t j = 0; j < n_; ++j) {
        if (i != j) s += (*this)(i, j);
      }
    }
    return s / static_cast<double>(n_ * (n_ - 1));
  }

 private:
  std::size_t n_ = 0;
  std::vector<double> e_;
};

// Builds the matrix from depot/user positions; `leg_energy` maps a straight
// distance (m) to its flight energy (J). Each unordered pair is evaluated once.
inline EnergyMatrix pairwise_energy_matrix(const Point2& depot, const std::vector<Point2>& users,
                                           const std::function<double(double)>& leg_energy) {
  if (users.empty()) throw InvalidParameter("users", "at least one user is required");
  EnergyMatrix m(users.size());
  auto pos = [&](std::size_t i) { return i == 0 ? depot : users[i - 1]; };
  for (std::size_t i = 0; i < m.size(); ++i) {
    for (std::size_t j = i + 1; j < m.size(); ++j) {
      const double d = distance(pos(i), pos(j));
      double e;
      try {
        e = d == 0.0 ? 0.0 : leg_energy(d);
      } catch (const std::exception& ex) {
        throw SolverError("energy of pair (" + std::to_string(i) + ", " + std::to_string(j) + ") failed: " + ex.what());
      }
      if (!(e >= 0.0) || !std::isfinite(e)) {
        throw SolverError("energy of pair (" + std::to_string(i) + ", " + std::to_string(j) + ") is invalid");
      }
      m.set_symmetric(i, j, e);
    }
  }
  return m;
}

struct VisitOrder {
  std::vector<std::size_t> order;  // user indices 1..K in visiting sequence
  double total_energy = 0.0;
};

inline double tour_cost(const EnergyMatrix& e, const std::vector<std::size_t>& order) {
  if (order.empty()) return 0.0;
  double c = e(0, order.front()) + e(order.back(), 0);
  for (std::size_t k = 1; k < order.size(); ++k) c += e(order[k - 1], order[k]);
  return c;
}

inline bool is_permutation_of_users(const std::vector<std::size_t>& order, std::size_t k) {
  if (order.size() != k) return false;
  std::vector<bool> seen(k + 1, false);
  for (std::size_t u : order) {
    if (u < 1 || u > k || seen[u]) return false;
    seen[u] = true;
  }
  return true;
}

namespace order_detail {

inline bool better(double cost, const std::vector<std::size_t>& order, double best_cost,
                   const std::vector<std::size_t>& best_order) {
  if (!std::isfinite(best_cost)) return std::isfinite(cost) || best_order.empty();
  const double tol = 1e-12 * std::max(1.0, std::abs(best_cost));
  if (cost < best_cost - tol) return true;
  if (cost > best_cost + tol) return false;
  return order < best_order;
}

}  // namespace order_detail

// Enumerates all K! orders; ties (relative 1e-12) go to the lexicographically
// smallest order.
inline VisitOrder solve_order_exhaustive(const EnergyMatrix& e) {
  const std::size_t k = e.users();
  if (k == 0) throw InvalidParameter("users", "at least one user is required");
  if (k > 10) throw InvalidParameter("users", "exhaustive search is limited to 10 users");
  std::vector<std::size_t> p(k);
  std::iota(p.begin(), p.end(), 1);
  VisitOrder best{p, tour_cost(e, p)};
  while (std::next_permutation(p.begin(), p.end())) {
    const double c = tour_cost(e, p);
    if (order_detail::better(c, p, best.total_energy, best.order)) best = {p, c};
  }
  return best;
}

// Minimum-cost one-to-one assignment of rows (stages) to columns (users).
// Returns assignment[row] = column. Shortest augmenting path (Hungarian).
inline std::vector<std::size_t> recover_assignment(const std::vector<std::vector<double>>& cost) {
  const std::size_t n = cost.size();
  for (const auto& row : cost) {
    if (row.size() != n) throw InvalidParameter("cost", "must be square");
    for (double v : row) {
      if (!std::isfinite(v)) throw InvalidParameter("cost", "entries must be finite");
    }
  }
  if (n == 0) return {};
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<bool> used(n + 1, false);
    do {
      used[j0] = true;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<std::size_t> assignment(n);
  for (std::size_t j = 1; j <= n; ++j) assignment[p[j] - 1] = j - 1;
  return assignment;
}

struct DualSettings {
  int max_iters = 5000;
  int stall_window = 20;
  double stall_tol = 1e-6;    // relative change of the dual objective over the window
  double step_scale = 0.0;    // phi0; <= 0 picks mean(E)/K
  bool keep_best_iterate = true;  // repair every iterate's C, keep the cheapest order
  bool polish = true;             // 2-opt / or-opt on the repaired order
  int polish_starts = 32;         // cheapest distinct repaired orders used as local-search starts

  bool operator==(const DualSettings&) const = default;
};

// Multipliers of the relaxed program: beta per stage, gamma/lambda/mu per
// (stage k >= 2, previous user l, current user i), stored as [k][l][i].
struct DualState {
  std::size_t users = 0;
  std::vector<double> beta;
  std::vector<double> gamma, lambda, mu;
  double step_scale = 0.0;

  std::size_t idx(std::size_t k, std::size_t l, std::size_t i) const { return (k * users + l) * users + i; }
};

struct DualIterate {
  int iter = 0;
  double dual_objective = 0.0;
  double primal_cost = 0.0;      // cost of the repaired order at this iterate
  int infeasibility_count = 0;   // stages not holding exactly one user
};

struct DualResult {
  VisitOrder order;             // returned order (after optional polishing)
  VisitOrder repaired_final;    // repair of the final C alone
  VisitOrder repaired_best;     // cheapest repaired order over the iterations
  DualState state;
  std::vector<DualIterate> trace;
  int iterations = 0;
  bool integral_final = false;  // final w already a permutation without repair
  bool flagged = false;         // stopped on the iteration cap
};

inline void write_dual_trace_csv(std::ostream& os, const std::vector<DualIterate>& trace) {
  os << "iter,dual_objective,primal_cost,infeasibility_count\n";
  os.precision(17);
  for (const auto& t : trace) {
    os << t.iter << ',' << t.dual_objective << ',' << t.primal_cost << ',' << t.infeasibility_count << '\n';
  }
}

namespace order_detail {

// Stage costs C[k][l] of assigning user l (0-based) to stage k (0-based).
inline std::vector<std::vector<double>> stage_costs(const EnergyMatrix& e, const DualState& s) {
  const std::size_t K = s.users;
  std::vector<std::vector<double>> c(K, std::vector<double>(K, 0.0));
  for (std::size_t k = 0; k < K; ++k) {
    for (std::size_t l = 0; l < K; ++l) {
      double v = s.beta[k];
      if (k == 0) v += e(0, l + 1);
      if (k == K - 1) v += e(l + 1, 0);
      if (k + 1 < K) {
        for (std::size_t i = 0; i < K; ++i) v += s.gamma[s.idx(k + 1, l, i)] - s.lambda[s.idx(k + 1, l, i)];
      }
      if (k >= 1) {
        for (std::size_t i = 0; i < K; ++i) v += s.gamma[s.idx(k, i, l)] - s.mu[s.idx(k, i, l)];
      }
      c[k][l] = v;
    }
  }
  return c;
}

// First-improvement 2-opt (segment reversal) and or-opt (segment moves of
// length 1..3) until no move helps.
inline VisitOrder local_search(const EnergyMatrix& e, VisitOrder start) {
  std::vector<std::size_t> p = std::move(start.order);
  double best = tour_cost(e, p);
  const std::size_t n = p.size();
  bool improved = true;
  while (improved) {
    improved = false;
    for (std::size_t i = 0; i + 1 < n && !improved; ++i) {
      for (std::size_t j = i + 1; j < n && !improved; ++j) {
        std::vector<std::size_t> q = p;
        std::reverse(q.begin() + static_cast<long>(i), q.begin() + static_cast<long>(j) + 1);
        const double c = tour_cost(e, q);
        if (c < best - 1e-12 * std::max(1.0, best)) {
          p = std::move(q);
          best = c;
          improved = true;
        }
      }
    }
    for (std::size_t len = 1; len <= 3 && !improved; ++len) {
      for (std::size_t i = 0; i + len <= n && !improved; ++i) {
        std::vector<std::size_t> seg(p.begin() + static_cast<long>(i), p.begin() + static_cast<long>(i + len));
        std::vector<std::size_t> rest(p.begin(), p.begin() + static_cast<long>(i));
        rest.insert(rest.end(), p.begin() + static_cast<long>(i + len), p.end());
        for (std::size_t pos = 0; pos <= rest.size() && !improved; ++pos) {
          if (pos == i) continue;
          std::vector<std::size_t> q = rest;
          q.insert(q.begin() + static_cast<long>(pos), seg.begin(), seg.end());
          const double c = tour_cost(e, q);
          if (c < best - 1e-12 * std::max(1.0, best)) {
            p = std::move(q);
            best = c;
            improved = true;
          }
        }
      }
    }
  }
  return {p, best};
}

// Reversed tours cost the same on a symmetric matrix; report the
// lexicographically smaller of the two when they tie.
inline VisitOrder canonical(const EnergyMatrix& e, VisitOrder o) {
  std::vector<std::size_t> r(o.order.rbegin(), o.order.rend());
  const double c = tour_cost(e, r);
  if (order_detail::better(c, r, o.total_energy, o.order)) return {r, c};
  return o;
}

}  // namespace order_detail

inline DualResult solve_order_dual(const EnergyMatrix& e, const DualSettings& settings = {}) {
  const std::size_t K = e.users();
  if (K == 0) throw InvalidParameter("users", "at least one user is required");
  if (settings.max_iters < 1) throw InvalidParameter("max_iters", "must be >= 1");
  if (settings.stall_window < 1) throw InvalidParameter("stall_window", "must be >= 1");
  DualResult res;
  DualState& s = res.state;
  s.users = K;
  s.beta.assign(K, 0.0);
  s.gamma.assign(K * K * K, 0.0);
  s.lambda.assign(K * K * K, 0.0);
  s.mu.assign(K * K * K, 0.0);
  s.step_scale = settings.step_scale > 0.0 ? settings.step_scale : e.mean_offdiagonal() / static_cast<double>(K);
  if (!(s.step_scale > 0.0)) s.step_scale = 1.0;  // all users at the depot

  std::vector<std::size_t> w_stage(K);  // stage chosen for each user
  std::vector<double> v(K * K * K, 0.0);
  std::vector<double> history;
  res.repaired_best.total_energy = std::numeric_limits<double>::infinity();

  auto repair = [&](const std::vector<std::vector<double>>& c) {
    const auto a = recover_assignment(c);  // stage -> user (0-based)
    VisitOrder o;
    o.order.resize(K);
    for (std::size_t k = 0; k < K; ++k) o.order[k] = a[k] + 1;
    o.total_energy = tour_cost(e, o.order);
    return o;
  };

  std::map<std::vector<std::size_t>, double> candidates;
  std::vector<std::vector<double>> c;
  int it = 1;
  for (; it <= settings.max_iters; ++it) {
    c = order_detail::stage_costs(e, s);
    // w: each user picks its cheapest stage, smallest index on ties.
    double dual = 0.0;
    for (std::size_t l = 0; l < K; ++l) {
      std::size_t best_k = 0;
      for (std::size_t k = 1; k < K; ++k) {
        if (c[k][l] < c[best_k][l]) best_k = k;
      }
      w_stage[l] = best_k;
      dual += c[best_k][l];
    }
    for (double b : s.beta) dual -= b;
    // v: minimizer of E v^2 - (gamma - lambda - mu) v over v >= 0.
    for (std::size_t k = 1; k < K; ++k) {
      for (std::size_t l = 0; l < K; ++l) {
        for (std::size_t i = 0; i < K; ++i) {
          const std::size_t id = s.idx(k, l, i);
          const double num = s.gamma[id] - s.lambda[id] - s.mu[id];
          const double el = e(l + 1, i + 1);
          double vv;
          if (el > 0.0) vv = std::max(num / (2.0 * el), 0.0);
          else vv = num > 0.0 ? 1.0 : 0.0;
          v[id] = vv;
          dual += el * vv * vv - num * vv - s.gamma[id];
        }
      }
    }
    std::vector<int> load(K, 0);
    for (std::size_t l = 0; l < K; ++l) ++load[w_stage[l]];
    int infeasible = 0;
    for (int x : load) infeasible += x != 1;

    DualIterate rec;
    rec.iter = it;
    rec.dual_objective = dual;
    rec.infeasibility_count = infeasible;
    if (settings.keep_best_iterate || it == 1) {
      VisitOrder o = repair(c);
      rec.primal_cost = o.total_energy;
      candidates.emplace(o.order, o.total_energy);
      if (order_detail::better(o.total_energy, o.order, res.repaired_best.total_energy, res.repaired_best.order)) {
        res.repaired_best = std::move(o);
      }
    } else {
      rec.primal_cost = res.trace.back().primal_cost;
    }
    res.trace.push_back(rec);

    history.push_back(dual);
    if (history.size() > static_cast<std::size_t>(settings.stall_window)) {
      const double old = history[history.size() - 1 - static_cast<std::size_t>(settings.stall_window)];
      if (std::abs(dual - old) <= settings.stall_tol * std::max(1.0, std::abs(dual))) break;
    }

    // Projected subgradient step.
    const double phi = s.step_scale / std::sqrt(static_cast<double>(it));
    for (std::size_t k = 0; k < K; ++k) s.beta[k] += phi * (load[k] - 1);
    auto w = [&](std::size_t k, std::size_t l) { return w_stage[l] == k ? 1.0 : 0.0; };
    for (std::size_t k = 1; k < K; ++k) {
      for (std::size_t l = 0; l < K; ++l) {
        for (std::size_t i = 0; i < K; ++i) {
          const std::size_t id = s.idx(k, l, i);
          s.gamma[id] = std::max(0.0, s.gamma[id] + phi * (w(k - 1, l) + w(k, i) - 1.0 - v[id]));
          s.lambda[id] = std::max(0.0, s.lambda[id] + phi * (v[id] - w(k - 1, l)));
          s.mu[id] = std::max(0.0, s.mu[id] + phi * (v[id] - w(k, i)));
        }
      }
    }
  }
  res.iterations = std::min(it, settings.max_iters);
  res.flagged = it > settings.max_iters;
  res.repaired_final = repair(c);
  {
    std::vector<int> load(K, 0);
    for (std::size_t l = 0; l < K; ++l) ++load[w_stage[l]];
    res.integral_final = std::all_of(load.begin(), load.end(), [](int x) { return x == 1; });
  }
  if (order_detail::better(res.repaired_final.total_energy, res.repaired_final.order,
                           res.repaired_best.total_energy, res.repaired_best.order)) {
    res.repaired_best = res.repaired_final;
  }
  VisitOrder chosen = settings.keep_best_iterate ? res.repaired_best : res.repaired_final;
  if (settings.polish) {
    candidates.emplace(res.repaired_final.order, res.repaired_final.total_energy);
    std::vector<VisitOrder> starts;
    for (const auto& [o, cost] : candidates) starts.push_back({o, cost});
    std::stable_sort(starts.begin(), starts.end(),
                     [](const VisitOrder& a, const VisitOrder& b) { return a.total_energy < b.total_energy; });
    if (!settings.keep_best_iterate) starts = {res.repaired_final};
    const std::size_t n = std::min(starts.size(), static_cast<std::size_t>(std::max(1, settings.polish_starts)));
    chosen = order_detail::local_search(e, std::move(chosen));
    for (std::size_t i = 0; i < n; ++i) {
      VisitOrder o = order_detail::local_search(e, std::move(starts[i]));
      if (order_detail::better(o.total_energy, o.order, chosen.total_energy, chosen.order)) chosen = std::move(o);
    }
  }
  res.order = order_detail::canonical(e, std::move(chosen));
  return res;
}

// Uniformly random order from a seeded generator (baseline).
inline VisitOrder random_order(const EnergyMatrix& e, std::uint64_t seed) {
  std::vector<std::size_t> p(e.users());
  std::iota(p.begin(), p.end(), 1);
  std::mt19937_64 rng(seed);
  std::shuffle(p.begin(), p.end(), rng);
  return {p, tour_cost(e, p)};
}

}  // namespace uavh
