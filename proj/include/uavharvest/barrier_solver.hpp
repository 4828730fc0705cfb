#pragma once

// Log-barrier interior-point method for smooth convex programs
//
//   minimize  f(x)   subject to  g_i(x) <= 0,  i = 1..m,
//
// where f is a sum of small terms and every g_i touches only a few variables.
// Programs report their terms through a DerivativeSink so the Hessian stays
// sparse; Newton steps are solved with a sparse LDL^T factorization.

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "uavharvest/errors.hpp"

namespace uavh::convex {

struct GradEntry {
  int index;
  double value;
};

// Symmetric Hessian entry; only one of (row, col)/(col, row) is reported.
struct HessEntry {
  int row;
  int col;
  double value;
};

class DerivativeSink {
 public:
  virtual ~DerivativeSink() = default;
  // Adds a term to the objective. Non-finite values mark x as outside the domain.
  virtual void objective(double value, std::span<const GradEntry> grad,
                         std::span<const HessEntry> hess) = 0;
  // Reports constraint g(x) <= 0.
  virtual void constraint(double value, std::span<const GradEntry> grad,
                          std::span<const HessEntry> hess) = 0;
  // True when gradients and Hessians are consumed; programs may skip them otherwise.
  virtual bool wants_derivatives() const = 0;
};

class SmoothConvexProgram {
 public:
  virtual ~SmoothConvexProgram() = default;
  virtual int num_variables() const = 0;
  virtual void evaluate(const Eigen::VectorXd& x, DerivativeSink& sink) const = 0;
};

struct BarrierSettings {
  double gap_tol = 1e-3;        // absolute duality gap m/t at exit
  double kkt_tol = 1e-3;        // infinity norm of grad f + sum lambda_i grad g_i
  double t_growth = 10.0;
  double initial_t = 0.0;       // <= 0 picks m / (0.1 |f(x0)| + 1)
  int max_newton_per_stage = 80;
  int max_total_newton = 2000;
  double centering_tol = 1e-10; // Newton decrement^2 / 2 of t*f + barrier
};

struct BarrierResult {
  Eigen::VectorXd x;
  double objective = 0.0;
  double duality_gap = 0.0;
  double kkt_residual = 0.0;
  int newton_steps = 0;
  bool converged = false;
  bool degraded = false;  // iteration cap hit before tolerances were met
  std::vector<double> multipliers;
};

namespace detail {

struct ValueSink final : DerivativeSink {
  double f = 0.0;
  double barrier = 0.0;
  int m = 0;
  bool feasible = true;
  void objective(double v, std::span<const GradEntry>, std::span<const HessEntry>) override {
    if (!std::isfinite(v)) feasible = false;
    f += v;
  }
  void constraint(double v, std::span<const GradEntry>, std::span<const HessEntry>) override {
    ++m;
    if (!(v < 0.0)) {
      feasible = false;
      return;
    }
    barrier -= std::log(-v);
  }
  bool wants_derivatives() const override { return false; }
};

struct NewtonSink final : DerivativeSink {
  double t = 1.0;
  Eigen::VectorXd grad;
  Eigen::VectorXd grad_f;
  std::vector<Eigen::Triplet<double>> trips;
  double f = 0.0;
  double barrier = 0.0;
  bool feasible = true;
  int m = 0;

  explicit NewtonSink(int n) : grad(Eigen::VectorXd::Zero(n)), grad_f(Eigen::VectorXd::Zero(n)) {}

  void add_hess(const HessEntry& h, double scale) {
    trips.emplace_back(h.row, h.col, scale * h.value);
    if (h.row != h.col) trips.emplace_back(h.col, h.row, scale * h.value);
  }
  void objective(double v, std::span<const GradEntry> g, std::span<const HessEntry> h) override {
    if (!std::isfinite(v)) feasible = false;
    f += v;
    for (const auto& e : g) {
      grad[e.index] += t * e.value;
      grad_f[e.index] += e.value;
    }
    for (const auto& e : h) add_hess(e, t);
  }
  void constraint(double v, std::span<const GradEntry> g, std::span<const HessEntry> h) override {
    ++m;
    if (!(v < 0.0)) {
      feasible = false;
      return;
    }
    barrier -= std::log(-v);
    const double inv = -1.0 / v;  // > 0
    for (const auto& e : g) grad[e.index] += inv * e.value;
    const double inv2 = inv * inv;
    for (std::size_t i = 0; i < g.size(); ++i) {
      for (std::size_t j = 0; j <= i; ++j) {
        const double val = inv2 * g[i].value * g[j].value;
        if (g[i].index == g[j].index) {
          trips.emplace_back(g[i].index, g[i].index, i == j ? val : 2.0 * val);
        } else {
          trips.emplace_back(g[i].index, g[j].index, val);
          trips.emplace_back(g[j].index, g[i].index, val);
        }
      }
    }
    for (const auto& e : h) add_hess(e, inv);
  }
  bool wants_derivatives() const override { return true; }
};

struct KktSink final : DerivativeSink {
  double t = 1.0;
  Eigen::VectorXd residual;
  std::vector<double> lambda;
  explicit KktSink(int n) : residual(Eigen::VectorXd::Zero(n)) {}
  void objective(double, std::span<const GradEntry> g, std::span<const HessEntry>) override {
    for (const auto& e : g) residual[e.index] += e.value;
  }
  void constraint(double v, std::span<const GradEntry> g, std::span<const HessEntry>) override {
    const double lam = -1.0 / (t * v);
    lambda.push_back(lam);
    for (const auto& e : g) residual[e.index] += lam * e.value;
  }
  bool wants_derivatives() const override { return true; }
};

}  // namespace detail

// True when x is strictly inside every constraint and the objective is finite.
inline bool strictly_feasible(const SmoothConvexProgram& p, const Eigen::VectorXd& x) {
  detail::ValueSink s;
  p.evaluate(x, s);
  return s.feasible;
}

inline BarrierResult solve(const SmoothConvexProgram& program, Eigen::VectorXd x0,
                           const BarrierSettings& settings = {}) {
  const int n = program.num_variables();
  if (x0.size() != n) throw InvalidParameter("x0", "size does not match the program");

  detail::ValueSink probe;
  program.evaluate(x0, probe);
  if (!probe.feasible) throw SolverError("barrier start point is not strictly feasible");
  const int m = probe.m;

  BarrierResult res;
  res.x = std::move(x0);
  double t = settings.initial_t > 0.0 ? settings.initial_t
                                      : (m > 0 ? m / (0.1 * std::abs(probe.f) + 1.0) : 1.0);

  auto merit = [&](const Eigen::VectorXd& x, double tt, double& f_out) -> double {
    detail::ValueSink s;
    program.evaluate(x, s);
    if (!s.feasible) return std::numeric_limits<double>::infinity();
    f_out = s.f;
    return tt * s.f + s.barrier;
  };

  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
  bool pattern_ready = false;
  Eigen::SparseMatrix<double> hess(n, n);
  int total = 0;
  bool capped = false;

  for (;;) {
    // Centering at the current t.
    for (int it = 0; it < settings.max_newton_per_stage; ++it) {
      if (total >= settings.max_total_newton) {
        capped = true;
        break;
      }
      detail::NewtonSink s(n);
      s.t = t;
      program.evaluate(res.x, s);
      const double phi = t * s.f + s.barrier;
      hess.setFromTriplets(s.trips.begin(), s.trips.end());
      if (!pattern_ready) {
        ldlt.analyzePattern(hess);
        pattern_ready = true;
      }
      ldlt.factorize(hess);
      Eigen::VectorXd dx;
      if (ldlt.info() == Eigen::Success) dx = ldlt.solve(-s.grad);
      if (ldlt.info() != Eigen::Success || !dx.allFinite()) {
        // Regularize when the barrier Hessian is singular along unconstrained directions.
        Eigen::SparseMatrix<double> reg(n, n);
        reg.setIdentity();
        const double shift = 1e-10 * std::max(1.0, hess.diagonal().cwiseAbs().maxCoeff());
        Eigen::SparseMatrix<double> shifted = hess + shift * reg;
        ldlt.factorize(shifted);
        if (ldlt.info() != Eigen::Success) throw SolverError("Newton system factorization failed");
        dx = ldlt.solve(-s.grad);
      }
      ++total;
      const double decrement2 = -s.grad.dot(dx);
      if (!(decrement2 >= 0.0) || decrement2 * 0.5 <= settings.centering_tol) {
        break;
      }
      double step = 1.0;
      double f_new = 0.0;
      bool moved = false;
      for (int ls = 0; ls < 60; ++ls) {
        Eigen::VectorXd trial = res.x + step * dx;
        const double val = merit(trial, t, f_new);
        if (std::isfinite(val) && val <= phi - 0.01 * step * decrement2) {
          res.x = std::move(trial);
          moved = true;
          break;
        }
        step *= 0.5;
      }
      if (!moved) break;
    }
    if (capped || m == 0 || static_cast<double>(m) / t <= settings.gap_tol) break;
    t *= settings.t_growth;
  }

  detail::KktSink k(n);
  k.t = t;
  program.evaluate(res.x, k);
  detail::ValueSink fin;
  program.evaluate(res.x, fin);
  res.objective = fin.f;
  res.duality_gap = m > 0 ? static_cast<double>(m) / t : 0.0;
  res.kkt_residual = k.residual.lpNorm<Eigen::Infinity>();
  res.multipliers = std::move(k.lambda);
  res.newton_steps = total;
  res.converged = !capped && res.duality_gap <= settings.gap_tol;
  res.degraded = !res.converged;
  return res;
}

}  // namespace uavh::convex
