#pragma once

// Time integration of the volume-preserving mean curvature flow of the
// radius function, Eulerian on the fixed base grid, with a Lagrangian
// particle cross-check, conservation monitors and termination logic.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "tubeflow/domain.hpp"
#include "tubeflow/geometry.hpp"
#include "tubeflow/kernels.hpp"

namespace tubeflow {

// Normal speed of the radius seen by a Lagrangian particle: u * (Hbar - rho).
inline double lagrangian_radius_speed(const SpaceModel& m, double hbar, double rho,
                                      double r, double g) {
  return monitor_u(m, r, g) * (hbar - rho);
}

// Closed form of the induced-metric Laplacian of the radius function:
//   -g^2 * sqrt(eps) k0 b sin(2 sqrt(eps) k0 b r) / (co^2 + g^2),
// the sine factor realized as k0 b sin(2 k0 b r) on the compact branch and
// -k0 b sinh(2 k0 b r) on the noncompact one.
inline double tube_laplacian_radius(const SpaceModel& m, double r, double g) {
  if (g == 0.0 || m.k0 == 0.0) return 0.0;
  const double x = m.k0 * m.b * r;
  const double s2 = m.compact() ? m.k0 * m.b * std::sin(2.0 * x)
                                : -m.k0 * m.b * std::sinh(2.0 * x);
  const double co = kernel_co(m, m.k0, r);
  return -g * g * s2 / (co * co + g * g);
}

// Right-hand side of the radius evolution equation with the Laplacian
// subtracted, transcribed through the tan/cos kernels (an independent route
// from tube_laplacian_radius; the two must cancel against the plain speed).
inline double radius_reaction_term(const SpaceModel& m, double hbar, double rho,
                                   double r, double g) {
  const double co = kernel_co(m, m.k0, r);
  const double sincos = 2.0 * kernel_tan(m, m.k0, r) * co * co;  // sqrt(eps)k0b sin(2...)
  const double speed = monitor_u(m, r, g) * (hbar - rho);
  return speed + g * g * sincos / (co * co + g * g);
}

// Eulerian rate of change of the radius at a fixed base point,
// (Hbar - rho)/u, obtained from the Lagrangian speed and the base-point
// drift by the chain rule.
inline std::vector<double> eulerian_rhs(const BaseDomain& dom, const GeometrySample& s,
                                        double hbar) {
  std::vector<double> rhs(dom.n);
  for (std::size_t i = 0; i < dom.n; ++i)
    rhs[i] = (hbar - s.rho[i]) / s.u[i];
  return rhs;
}

// ---------------------------------------------------------------------------

enum class Scheme { explicit_euler, rk4, imex };

enum class Termination {
  running,
  reached_t_end,
  steady_state,
  tube_lost,
  radius_overflow,
  non_positive_radius,
  step_underflow,
};

inline const char* to_string(Termination t) {
  switch (t) {
    case Termination::running: return "Running";
    case Termination::reached_t_end: return "ReachedTEnd";
    case Termination::steady_state: return "SteadyState";
    case Termination::tube_lost: return "TubeLost";
    case Termination::radius_overflow: return "RadiusOverflow";
    case Termination::non_positive_radius: return "NonPositiveRadius";
    case Termination::step_underflow: return "StepSizeUnderflow";
  }
  return "?";
}

struct FlowConfig {
  Scheme scheme = Scheme::rk4;
  double dt = 0.0;          // fixed step when > 0
  double cfl = 0.4;         // parabolic step factor when dt == 0
  double t_end = 1.0;
  double steady_tol = 1e-10;  // sup|rhs| threshold; <= 0 disables
  double u_floor = 1e-3;
  bool conserve_project = false;  // uniform rescale restoring the enclosed volume
  std::size_t max_steps = 50'000'000;
  std::size_t cadence = 10;          // record a series row every this many steps
  std::size_t snapshot_cadence = 0;  // snapshots at every this many rows; 0 = ends only
};

struct Diagnostics {
  double area = 0.0;
  double volD = 0.0;
  double hbar = 0.0;
  double min_u = 1.0;
  double max_r = 0.0;
  double bound = 0.0;
  double sup_rhs = 0.0;
  double boundary_residual = 0.0;
};

struct FlowState {
  double t = 0.0;
  RadiusField field;
  Diagnostics diag;
};

struct SeriesRow {
  double t, area, volD, hbar, min_u, max_r, bound, sup_rhs, boundary_residual;
};

struct Snapshot {
  double t;
  std::vector<double> s, r, rho, u;
};

struct RunReport {
  std::vector<SeriesRow> rows;
  std::vector<Snapshot> snapshots;
  Termination termination = Termination::running;
  std::string message;
  RadiusField final_field;
  double final_t = 0.0;
  std::size_t steps = 0;
};

namespace detail {

struct Evaluation {
  Derivatives d;
  GeometrySample geo;
  double hbar = 0.0;
  std::vector<double> rhs;
};

inline Evaluation evaluate(const SpaceModel& m, const BaseDomain& dom,
                           const RadiusField& field) {
  Evaluation e;
  e.d = derivatives(dom, field);
  e.geo = sample_geometry(m, dom, field, e.d);
  e.hbar = average_mean_curvature(m, dom, e.geo);
  e.rhs = eulerian_rhs(dom, e.geo, e.hbar);
  return e;
}

inline std::optional<Termination> guard(const SpaceModel& /*m*/, const RadiusField& field,
                                        const GeometrySample& geo, double u_floor) {
  double min_u = 1.0, max_r = 0.0, min_r = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < field.values.size(); ++i) {
    min_u = std::min(min_u, geo.u[i]);
    max_r = std::max(max_r, field.values[i]);
    min_r = std::min(min_r, field.values[i]);
  }
  if (!(min_r > 0.0)) return Termination::non_positive_radius;
  if (max_r >= field.ceiling) return Termination::radius_overflow;
  if (min_u < u_floor) return Termination::tube_lost;
  return std::nullopt;
}

// Parabolic step bound: cfl * h^2 * min(u^2) / (2 Lambda) with
// Lambda = max over nodes of 1/co(k_max, r)^2.
inline double stable_dt(const SpaceModel& m, const BaseDomain& dom,
                        const RadiusField& field, const GeometrySample& geo, double cfl) {
  const double kmax = m.ratio_max();
  double lambda = 0.0, min_u2 = 1.0;
  for (std::size_t i = 0; i < dom.n; ++i) {
    const double co = kernel_co(m, kmax, field.values[i]);
    lambda = std::max(lambda, 1.0 / (co * co));
    min_u2 = std::min(min_u2, geo.u[i] * geo.u[i]);
  }
  const double h = dom.h();
  return cfl * h * h * min_u2 / (2.0 * lambda);
}

// Tridiagonal solve of (I - dt D_i L) x = b with the mirrored Neumann
// second-difference operator L.
inline std::vector<double> solve_imex(const BaseDomain& dom, const std::vector<double>& diff,
                                      double dt, const std::vector<double>& b) {
  const std::size_t n = dom.n;
  const double h2 = dom.h() * dom.h();
  std::vector<double> lo(n), di(n), up(n), rhs = b;
  for (std::size_t i = 0; i < n; ++i) {
    const double mu = dt * diff[i] / h2;
    if (i == 0) {
      di[0] = 1.0 + 2.0 * mu;
      up[0] = -2.0 * mu;
    } else if (i == n - 1) {
      lo[n - 1] = -2.0 * mu;
      di[n - 1] = 1.0 + 2.0 * mu;
    } else {
      lo[i] = -mu;
      di[i] = 1.0 + 2.0 * mu;
      up[i] = -mu;
    }
  }
  for (std::size_t i = 1; i < n; ++i) {
    const double w = lo[i] / di[i - 1];
    di[i] -= w * up[i - 1];
    rhs[i] -= w * rhs[i - 1];
  }
  std::vector<double> x(n);
  x[n - 1] = rhs[n - 1] / di[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) x[i] = (rhs[i] - up[i] * x[i + 1]) / di[i];
  return x;
}

// Uniform multiplicative rescale restoring the enclosed volume (Newton).
inline void project_volume(const SpaceModel& m, const BaseDomain& dom, RadiusField& field,
                           const DeltaTable& table, double volD_target) {
  const double vmV = unit_sphere_volume(m.vertical_total());
  double alpha = 1.0;
  for (int it = 0; it < 8; ++it) {
    std::vector<double> val(dom.n), der(dom.n);
    for (std::size_t i = 0; i < dom.n; ++i) {
      const double ri = std::min(alpha * field.values[i], table.ceiling());
      val[i] = table.value(ri);
      der[i] = table.derivative(ri) * field.values[i];
    }
    const double f = vmV * quadrature(dom, val) - volD_target;
    const double df = vmV * quadrature(dom, der);
    if (df == 0.0) break;
    const double step = f / df;
    alpha -= step;
    if (std::abs(step) < 1e-14 * std::max(1.0, alpha)) break;
  }
  for (double& r : field.values) r *= alpha;
}

// Range check for scheme stage drafts: evaluating kernels outside
// (0, ceiling) is a termination, not a panic.
inline std::optional<Termination> draft_guard(const RadiusField& field) {
  for (double r : field.values) {
    if (!(r > 0.0)) return Termination::non_positive_radius;
    if (!(r < field.ceiling)) return Termination::radius_overflow;
  }
  return std::nullopt;
}

}  // namespace detail

struct StepResult {
  Termination status = Termination::running;
  double dt_used = 0.0;
  double sup_rhs = 0.0;
};

// One time step with the configured scheme.  The nonlocal average curvature
// is recomputed at every stage evaluation; diagnostics refresh afterwards.
inline StepResult step(const SpaceModel& m, const BaseDomain& dom, FlowState& state,
                       const FlowConfig& cfg, const DeltaTable& table,
                       double volD_target = -1.0) {
  auto e0 = detail::evaluate(m, dom, state.field);
  if (auto g = detail::guard(m, state.field, e0.geo, cfg.u_floor)) {
    StepResult res;
    res.status = *g;
    return res;
  }
  double dt = cfg.dt > 0.0 ? cfg.dt : detail::stable_dt(m, dom, state.field, e0.geo, cfg.cfl);
  if (cfg.scheme == Scheme::imex && cfg.dt <= 0.0)
    dt = cfg.cfl * dom.h();  // relaxed bound; the stiff part is implicit
  StepResult res;
  double sup = 0.0;
  for (double v : e0.rhs) sup = std::max(sup, std::abs(v));
  res.sup_rhs = sup;
  if (dt < 1e-14) {  // the underflow guard applies to the scheme step itself,
    res.status = Termination::step_underflow;  // not to the final-step cap
    return res;
  }
  dt = std::min(dt, cfg.t_end - state.t);
  res.dt_used = dt;

  const std::size_t n = dom.n;
  RadiusField next = state.field;
  switch (cfg.scheme) {
    case Scheme::explicit_euler: {
      for (std::size_t i = 0; i < n; ++i)
        next.values[i] = state.field.values[i] + dt * e0.rhs[i];
      break;
    }
    case Scheme::rk4: {
      RadiusField tmp = state.field;
      std::vector<double> acc(n);
      for (std::size_t i = 0; i < n; ++i) {
        acc[i] = e0.rhs[i];
        tmp.values[i] = state.field.values[i] + 0.5 * dt * e0.rhs[i];
      }
      if (auto g = detail::draft_guard(tmp)) {
        res.status = *g;
        return res;
      }
      auto e1 = detail::evaluate(m, dom, tmp);
      for (std::size_t i = 0; i < n; ++i) {
        acc[i] += 2.0 * e1.rhs[i];
        tmp.values[i] = state.field.values[i] + 0.5 * dt * e1.rhs[i];
      }
      if (auto g = detail::draft_guard(tmp)) {
        res.status = *g;
        return res;
      }
      auto e2 = detail::evaluate(m, dom, tmp);
      for (std::size_t i = 0; i < n; ++i) {
        acc[i] += 2.0 * e2.rhs[i];
        tmp.values[i] = state.field.values[i] + dt * e2.rhs[i];
      }
      if (auto g = detail::draft_guard(tmp)) {
        res.status = *g;
        return res;
      }
      auto e3 = detail::evaluate(m, dom, tmp);
      for (std::size_t i = 0; i < n; ++i) {
        acc[i] += e3.rhs[i];
        next.values[i] = state.field.values[i] + dt / 6.0 * acc[i];
      }
      break;
    }
    case Scheme::imex: {
      // Diffusive part r''/(co^2 + g^2) implicit, remainder explicit.
      std::vector<double> diff(n), expl(n);
      for (std::size_t i = 0; i < n; ++i) {
        const double co = kernel_co(m, m.k0, state.field.values[i]);
        const double g2 = e0.d.first[i] * e0.d.first[i];
        diff[i] = 1.0 / (co * co + g2);
        expl[i] = state.field.values[i] +
                  dt * (e0.rhs[i] - diff[i] * e0.d.second[i]);
      }
      next.values = detail::solve_imex(dom, diff, dt, expl);
      break;
    }
  }

  if (cfg.conserve_project && volD_target > 0.0)
    detail::project_volume(m, dom, next, table, volD_target);

  if (auto g = detail::draft_guard(next)) {
    res.status = *g;
    return res;
  }
  state.field = std::move(next);
  state.t += dt;
  return res;
}

inline Diagnostics diagnose(const SpaceModel& m, const BaseDomain& dom,
                            const FlowState& state, const DeltaTable& table,
                            double bound) {
  auto e = detail::evaluate(m, dom, state.field);
  Diagnostics d;
  d.area = tube_area(m, dom, e.geo);
  d.volD = enclosed_volume(m, dom, state.field, table);
  d.hbar = e.hbar;
  d.min_u = 1.0;
  d.max_r = 0.0;
  for (std::size_t i = 0; i < dom.n; ++i) {
    d.min_u = std::min(d.min_u, e.geo.u[i]);
    d.max_r = std::max(d.max_r, state.field.values[i]);
  }
  d.bound = bound;
  d.sup_rhs = 0.0;
  for (double v : e.rhs) d.sup_rhs = std::max(d.sup_rhs, std::abs(v));
  d.boundary_residual = boundary_hessian_residual(dom, state.field);
  return d;
}

namespace detail {

inline Snapshot take_snapshot(const SpaceModel& m, const BaseDomain& dom,
                              const FlowState& state) {
  auto d = derivatives(dom, state.field);
  auto geo = sample_geometry(m, dom, state.field, d);
  Snapshot snap;
  snap.t = state.t;
  snap.s.resize(dom.n);
  for (std::size_t i = 0; i < dom.n; ++i) snap.s[i] = dom.s(i);
  snap.r = state.field.values;
  snap.rho = geo.rho;
  snap.u = geo.u;
  return snap;
}

inline SeriesRow to_row(double t, const Diagnostics& d) {
  return {t, d.area, d.volD, d.hbar, d.min_u, d.max_r, d.bound, d.sup_rhs,
          d.boundary_residual};
}

}  // namespace detail

// Iterate until t_end, steady state, or a guard fires.  Deterministic for a
// fixed configuration.
inline RunReport run(const SpaceModel& m, const BaseDomain& dom, RadiusField field,
                     const FlowConfig& cfg, const DeltaTable& table) {
  field.validate();
  RunReport rep;
  FlowState state;
  state.field = std::move(field);
  const double area0 = tube_area(m, dom, state.field);
  const double volD0 = enclosed_volume(m, dom, state.field, table);
  const double bound = radius_upper_bound(m, dom, area0, volD0, table);

  state.diag = diagnose(m, dom, state, table, bound);
  rep.rows.push_back(detail::to_row(0.0, state.diag));
  rep.snapshots.push_back(detail::take_snapshot(m, dom, state));

  const double t_eps = 1e-12 * std::max(1.0, cfg.t_end);
  const std::size_t cadence = std::max<std::size_t>(1, cfg.cadence);
  if (state.t >= cfg.t_end - t_eps) {
    rep.termination = Termination::reached_t_end;
  } else if (cfg.steady_tol > 0.0 && state.diag.sup_rhs < cfg.steady_tol) {
    rep.termination = Termination::steady_state;
  } else {
    std::size_t since_row = 0, rows_since_snap = 0;
    while (rep.steps < cfg.max_steps) {
      StepResult sr = step(m, dom, state, cfg, table, cfg.conserve_project ? volD0 : -1.0);
      if (sr.status != Termination::running) {
        rep.termination = sr.status;
        break;
      }
      ++rep.steps;
      ++since_row;
      const bool at_end = state.t >= cfg.t_end - t_eps;
      if (since_row >= cadence || at_end) {
        since_row = 0;
        state.diag = diagnose(m, dom, state, table, bound);
        rep.rows.push_back(detail::to_row(state.t, state.diag));
        ++rows_since_snap;
        if (cfg.snapshot_cadence > 0 && rows_since_snap >= cfg.snapshot_cadence && !at_end) {
          rows_since_snap = 0;
          rep.snapshots.push_back(detail::take_snapshot(m, dom, state));
        }
        if (!at_end && cfg.steady_tol > 0.0 && state.diag.sup_rhs < cfg.steady_tol) {
          rep.termination = Termination::steady_state;
          break;
        }
      }
      if (at_end) {
        rep.termination = Termination::reached_t_end;
        break;
      }
    }
    if (rep.termination == Termination::running)
      rep.termination = Termination::reached_t_end;  // max_steps exhausted
  }

  if (rep.rows.back().t < state.t) {
    state.diag = diagnose(m, dom, state, table, bound);
    rep.rows.push_back(detail::to_row(state.t, state.diag));
  }
  if (rep.snapshots.back().t < state.t)
    rep.snapshots.push_back(detail::take_snapshot(m, dom, state));
  rep.final_field = state.field;
  rep.final_t = state.t;
  rep.message = to_string(rep.termination);
  return rep;
}

// ---------------------------------------------------------------------------
// Lagrangian particle cross-check

struct Particle {
  double x = 0.0;      // base point
  double r_hat = 0.0;  // radius carried by the particle
  bool alive = true;   // false once the particle leaves the interior
};

namespace detail {

// Uniform-grid cubic (Catmull-Rom) interpolation with mirrored ends.
inline double interp_cubic(const BaseDomain& dom, const std::vector<double>& f, double x) {
  const double h = dom.h();
  double xi = (x - dom.s_begin) / h;
  xi = std::clamp(xi, 0.0, double(dom.n - 1));
  std::size_t i = std::min<std::size_t>(std::size_t(xi), dom.n - 2);
  const double t = xi - double(i);
  const auto at = [&](long j) {
    if (j < 0) j = -j;
    if (j >= long(dom.n)) j = 2 * long(dom.n) - 2 - j;
    return f[std::size_t(j)];
  };
  const double fm = at(long(i) - 1), f0 = at(long(i)), f1 = at(long(i) + 1),
               f2 = at(long(i) + 2);
  const double t2 = t * t, t3 = t2 * t;
  return 0.5 * ((2.0 * f0) + (-fm + f1) * t + (2.0 * fm - 5.0 * f0 + 4.0 * f1 - f2) * t2 +
                (-fm + 3.0 * f0 - 3.0 * f1 + f2) * t3);
}

}  // namespace detail

// One explicit Euler step of the coupled particle system: the radius moves at
// u (Hbar - rho) and the base point drifts along the radius gradient at
// (rho - Hbar)/(co sqrt(co^2 + g^2)).
inline Particle lagrangian_step(const SpaceModel& m, const BaseDomain& dom,
                                const Derivatives& d, const GeometrySample& geo,
                                double hbar, const Particle& p, double dt) {
  Particle q = p;
  if (!p.alive) return q;
  if (!(p.r_hat > 0.0) || !(p.r_hat < m.r_cut)) {
    q.alive = false;
    return q;
  }
  const double rho = detail::interp_cubic(dom, geo.rho, p.x);
  const double g = detail::interp_cubic(dom, d.first, p.x);
  const double r = p.r_hat;
  const double co = kernel_co(m, m.k0, r);
  const double S = std::sqrt(co * co + g * g);
  q.r_hat = p.r_hat + dt * (co / S) * (hbar - rho);
  q.x = p.x + dt * (rho - hbar) * g / (co * S);
  const double lo = dom.s_begin, hi = dom.s_begin + dom.length;
  if (q.x <= lo || q.x >= hi) q.alive = false;  // cross-check aborted, not fatal
  return q;
}

}  // namespace tubeflow
