#pragma once

// Independent oracles pinning the curvature and flow transcriptions.
//
// The embedded oracles compute mean curvature from an explicit isometric
// embedding by finite differences of the fundamental forms.  They share no
// code with the kernel-based curvature path beyond the grid type, and they
// were frozen before that path was tuned; they must never be edited to match
// it.

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "tubeflow/domain.hpp"
#include "tubeflow/flow.hpp"
#include "tubeflow/geometry.hpp"
#include "tubeflow/kernels.hpp"

namespace tubeflow {

struct OracleReport {
  std::string name;
  double max_error = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  std::size_t samples = 0;
};

inline OracleReport make_report(std::string name, double max_error, double tol,
                                std::size_t samples) {
  OracleReport r;
  r.name = std::move(name);
  r.max_error = max_error;
  r.tolerance = tol;
  r.pass = max_error <= tol;
  r.samples = samples;
  return r;
}

// Classical principal-curvature sum of a constant-radius tube over a totally
// geodesic p-subspace of the (n+1)-dimensional space form, with respect to
// the inward normal: (n-p) cot r - p tan r on the sphere, and
// (n-p) coth r + p tanh r in hyperbolic space, where the base directions are
// hypercycles curving toward the core (tube hypersurfaces there are convex in
// every direction).  Both values are re-derivable from the embedded oracles
// below, which are the authority for every sign in this file.
inline double spaceform_tube_oracle(int n, int p, Curvature eps, double r) {
  if (p < 1 || p > n - 1) throw std::invalid_argument("spaceform_tube_oracle: bad (n,p)");
  if (eps == Curvature::compact)
    return double(n - p) * std::cos(r) / std::sin(r) - double(p) * std::tan(r);
  return double(n - p) * std::cosh(r) / std::sinh(r) + double(p) * std::tanh(r);
}

// ---------------------------------------------------------------------------
// Embedded surfaces of revolution.  Parametrisation (s, theta); the profile
// r(s) is given on the domain grid and sampled with mirror ghosts, matching
// the solver's boundary convention.  Mean curvature is the trace
// (G L - 2 F M + E N)/(E G - F^2) of the second fundamental form taken with
// respect to the inward normal (a round cylinder reports +1/r).

namespace oracle_detail {

inline double grid_r(const std::vector<double>& r, long j) {
  const long n = long(r.size());
  if (j < 0) j = -j;
  if (j >= n) j = 2 * n - 2 - j;
  return r[std::size_t(j)];
}

template <std::size_t Dim>
using Vec = std::array<double, Dim>;

template <std::size_t Dim>
inline Vec<Dim> sub(const Vec<Dim>& a, const Vec<Dim>& b) {
  Vec<Dim> c{};
  for (std::size_t i = 0; i < Dim; ++i) c[i] = a[i] - b[i];
  return c;
}

template <std::size_t Dim>
inline double dot(const Vec<Dim>& a, const Vec<Dim>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < Dim; ++i) s += a[i] * b[i];
  return s;
}

// Second-order centered first/second differences of an embedding map given as
// a callable (long j, double theta) -> Vec, evaluated around (j0, 0).
template <std::size_t Dim, class Map>
struct Jets {
  Vec<Dim> x, xs, xt, xss, xst, xtt;
  Jets(const Map& F, long j0, double hs, double ht) {
    const auto xc = F(j0, 0.0);
    const auto xp = F(j0 + 1, 0.0), xm = F(j0 - 1, 0.0);
    const auto yp = F(j0, ht), ym = F(j0, -ht);
    const auto pp = F(j0 + 1, ht), pm = F(j0 + 1, -ht);
    const auto mp = F(j0 - 1, ht), mm = F(j0 - 1, -ht);
    x = xc;
    for (std::size_t i = 0; i < Dim; ++i) {
      xs[i] = (xp[i] - xm[i]) / (2.0 * hs);
      xt[i] = (yp[i] - ym[i]) / (2.0 * ht);
      xss[i] = (xp[i] - 2.0 * xc[i] + xm[i]) / (hs * hs);
      xtt[i] = (yp[i] - 2.0 * xc[i] + ym[i]) / (ht * ht);
      xst[i] = (pp[i] - pm[i] - mp[i] + mm[i]) / (4.0 * hs * ht);
    }
  }
};

}  // namespace oracle_detail

// Euclidean hypersurface of revolution {(s, r(s) cos t, r(s) sin t)} in R^3.
inline std::vector<double> embedded_revolution_oracle(const BaseDomain& dom,
                                                      const std::vector<double>& r) {
  using V = oracle_detail::Vec<3>;
  const double hs = dom.h(), ht = 2e-3;
  const auto F = [&](long j, double t) -> V {
    const double rj = oracle_detail::grid_r(r, j);
    const double s = dom.s_begin + double(j) * hs;
    return {s, rj * std::cos(t), rj * std::sin(t)};
  };
  std::vector<double> H(dom.n);
  for (std::size_t i = 0; i < dom.n; ++i) {
    oracle_detail::Jets<3, decltype(F)> jet(F, long(i), hs, ht);
    // inward normal: opposite to the radial direction (0, cos t, sin t)|_{t=0}
    V nn{jet.xs[1] * jet.xt[2] - jet.xs[2] * jet.xt[1],
         jet.xs[2] * jet.xt[0] - jet.xs[0] * jet.xt[2],
         jet.xs[0] * jet.xt[1] - jet.xs[1] * jet.xt[0]};
    double nrm = std::sqrt(oracle_detail::dot(nn, nn));
    for (auto& c : nn) c /= nrm;
    if (nn[1] > 0.0)
      for (auto& c : nn) c = -c;
    const double E = oracle_detail::dot(jet.xs, jet.xs);
    const double Ff = oracle_detail::dot(jet.xs, jet.xt);
    const double G = oracle_detail::dot(jet.xt, jet.xt);
    const double L = oracle_detail::dot(jet.xss, nn);
    const double M = oracle_detail::dot(jet.xst, nn);
    const double N = oracle_detail::dot(jet.xtt, nn);
    H[i] = (G * L - 2.0 * Ff * M + E * N) / (E * G - Ff * Ff);
  }
  return H;
}

// Tube of radius r(s) about a closed geodesic of the unit 3-sphere, embedded
// in R^4:  x = cos r * (cos s, sin s, 0, 0) + sin r * (0, 0, cos t, sin t).
// The sphere's connection is the flat one projected orthogonally to x, so the
// second fundamental form against a normal tangent to the sphere needs no
// correction terms.
inline std::vector<double> embedded_sphere_tube_oracle(const BaseDomain& dom,
                                                       const std::vector<double>& r) {
  using V = oracle_detail::Vec<4>;
  const double hs = dom.h(), ht = 2e-3;
  const auto F = [&](long j, double t) -> V {
    const double rj = oracle_detail::grid_r(r, j);
    const double s = dom.s_begin + double(j) * hs;
    return {std::cos(rj) * std::cos(s), std::cos(rj) * std::sin(s),
            std::sin(rj) * std::cos(t), std::sin(rj) * std::sin(t)};
  };
  std::vector<double> H(dom.n);
  for (std::size_t i = 0; i < dom.n; ++i) {
    oracle_detail::Jets<4, decltype(F)> jet(F, long(i), hs, ht);
    // Normal in T_x S^3, orthogonal to x, xs, xt: Gram-Schmidt on the inward
    // guess (toward the core geodesic).
    const double s = dom.s_begin + double(i) * hs;
    V guess{std::sin(r[i]) * std::cos(s), std::sin(r[i]) * std::sin(s),
            -std::cos(r[i]), 0.0};
    const V basis[3] = {jet.x, jet.xs, jet.xt};
    V nn = guess;
    for (const auto& bvec : basis) {
      const double c = oracle_detail::dot(nn, bvec) / oracle_detail::dot(bvec, bvec);
      for (std::size_t q = 0; q < 4; ++q) nn[q] -= c * bvec[q];
    }
    double nrm = std::sqrt(oracle_detail::dot(nn, nn));
    for (auto& c : nn) c /= nrm;
    const double E = oracle_detail::dot(jet.xs, jet.xs);
    const double Ff = oracle_detail::dot(jet.xs, jet.xt);
    const double G = oracle_detail::dot(jet.xt, jet.xt);
    const double L = oracle_detail::dot(jet.xss, nn);
    const double M = oracle_detail::dot(jet.xst, nn);
    const double N = oracle_detail::dot(jet.xtt, nn);
    H[i] = (G * L - 2.0 * Ff * M + E * N) / (E * G - Ff * Ff);
  }
  return H;
}

// Tube about a geodesic of hyperbolic 3-space in the Minkowski hyperboloid
// model:  x = cosh r * (cosh s, sinh s, 0, 0) + sinh r * (0, 0, cos t, sin t),
// <x,x> = -1 with signature (-,+,+,+).
inline std::vector<double> embedded_hyperbolic_tube_oracle(const BaseDomain& dom,
                                                           const std::vector<double>& r) {
  using V = oracle_detail::Vec<4>;
  const double hs = dom.h(), ht = 2e-3;
  const auto mdot = [](const V& a, const V& b) {
    return -a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3];
  };
  const auto F = [&](long j, double t) -> V {
    const double rj = oracle_detail::grid_r(r, j);
    const double s = dom.s_begin + double(j) * hs;
    return {std::cosh(rj) * std::cosh(s), std::cosh(rj) * std::sinh(s),
            std::sinh(rj) * std::cos(t), std::sinh(rj) * std::sin(t)};
  };
  std::vector<double> H(dom.n);
  for (std::size_t i = 0; i < dom.n; ++i) {
    oracle_detail::Jets<4, decltype(F)> jet(F, long(i), hs, ht);
    const double s = dom.s_begin + double(i) * hs;
    // inward guess: -d/dr of the embedding
    V guess{-std::sinh(r[i]) * std::cosh(s), -std::sinh(r[i]) * std::sinh(s),
            -std::cosh(r[i]), 0.0};
    const V basis[3] = {jet.x, jet.xs, jet.xt};
    V nn = guess;
    for (const auto& bvec : basis) {
      const double c = mdot(nn, bvec) / mdot(bvec, bvec);
      for (std::size_t q = 0; q < 4; ++q) nn[q] -= c * bvec[q];
    }
    double nrm = std::sqrt(mdot(nn, nn));
    for (auto& c : nn) c /= nrm;
    const double E = mdot(jet.xs, jet.xs);
    const double Ff = mdot(jet.xs, jet.xt);
    const double G = mdot(jet.xt, jet.xt);
    const double L = mdot(jet.xss, nn);
    const double M = mdot(jet.xst, nn);
    const double N = mdot(jet.xtt, nn);
    H[i] = (G * L - 2.0 * Ff * M + E * N) / (E * G - Ff * Ff);
  }
  return H;
}

// ---------------------------------------------------------------------------
// Algebraic identity suite over seeded random samples.

inline std::vector<OracleReport> identity_suite(const SpaceModel& m, std::size_t samples,
                                                std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const double rmax = m.compact() ? 0.95 * m.r_cut : 3.0;
  std::uniform_real_distribution<double> draw_r(0.05 * rmax, rmax);
  std::uniform_real_distribution<double> draw_g(0.0, 2.0);
  std::uniform_real_distribution<double> draw_h(-5.0, 5.0);

  double err_roundtrip = 0.0, err_split = 0.0, err_density = 0.0, err_kernel = 0.0;
  for (std::size_t it = 0; it < samples; ++it) {
    const double r = draw_r(rng);
    const double g = (it % 16 == 0) ? 0.0 : draw_g(rng);
    const double hbar = draw_h(rng);

    // gradient-norm relation roundtrip
    const double G = grad_norm_tube(m, r, g);
    err_roundtrip = std::max(err_roundtrip, std::abs(grad_norm_base(m, r, G) - g));

    // evolution split: reaction + laplacian - speed = 0
    const double rho = draw_h(rng);
    const double split = radius_reaction_term(m, hbar, rho, r, g) +
                         tube_laplacian_radius(m, r, g) -
                         lagrangian_radius_speed(m, hbar, rho, r, g);
    err_split = std::max(err_split, std::abs(split));

    // tube density dominates the ambient density; equality at g = 0
    const double psi = tube_density(m, r, g);
    const double psibar = ambient_density(m, r);
    if (g == 0.0) {
      err_density = std::max(err_density, std::abs(psi - psibar));
    } else if (psi < psibar) {
      err_density = std::max(err_density, psibar - psi);
    }

    // kernel algebra: tan * cot = eps (k b)^2 for k > 0, and the hyperbolic
    // Pythagoras identity on the noncompact branch (residuals accumulated in
    // extended precision so only the kernels' own rounding is measured)
    for (double k : m.ratios) {
      const double prod = kernel_tan(m, k, r) * kernel_cot(m, k, r);
      const double expect = double(int(m.epsilon)) * (k * m.b) * (k * m.b);
      err_kernel = std::max(err_kernel, std::abs(prod - expect));
    }
    if (!m.compact()) {
      const long double co = kernel_co(m, 1.0, r);
      const long double sh = (long double)(m.b * r) * (long double)kernel_sinc(m, 1.0, r);
      err_kernel = std::max(err_kernel, (double)std::abs(co * co - sh * sh - 1.0L));
    }
  }

  std::vector<OracleReport> reps;
  reps.push_back(make_report("grad-norm roundtrip", err_roundtrip, 1e-12, samples));
  reps.push_back(make_report("evolution split", err_split, 1e-12, samples));
  reps.push_back(make_report("density dominance", err_density, 1e-12, samples));
  reps.push_back(make_report("kernel algebra", err_kernel, 1e-12, samples));
  return reps;
}

}  // namespace tubeflow
