#pragma once

// Discretized 1-D reduction of the base: uniform grid along the eigen
// direction carrying grad r, transverse volume weight omega, per-block
// connection traces Gamma_k, trapezoid quadrature and mirror-ghost stencils
// realizing the zero-Neumann boundary.

#include <cmath>
#include <cstddef>
#include <map>
#include <stdexcept>
#include <utility>
#include <vector>

#include "tubeflow/kernels.hpp"

namespace tubeflow {

struct BaseDomain {
  double length = 1.0;       // L
  std::size_t n = 0;         // node count, >= 8
  double s_begin = 0.0;      // grid starts here (radial weights need s > 0)
  std::vector<double> omega; // transverse volume weight per node, > 0
  std::map<double, std::vector<double>> gamma;  // per-block Gamma_k(s_i)
  double vol_B = 0.0;        // trapezoid integral of omega

  double h() const { return length / double(n - 1); }
  double s(std::size_t i) const { return s_begin + double(i) * h(); }

  void validate() const {
    if (n < 8) throw std::invalid_argument("BaseDomain: need at least 8 nodes");
    if (!(length > 0.0)) throw std::invalid_argument("BaseDomain: length must be positive");
    if (omega.size() != n) throw std::invalid_argument("BaseDomain: omega size mismatch");
    for (double w : omega)
      if (!(w > 0.0)) throw std::invalid_argument("BaseDomain: omega must be positive");
    for (const auto& [k, g] : gamma)
      if (g.size() != n) throw std::invalid_argument("BaseDomain: gamma size mismatch");
  }
};

namespace detail {

// Pairwise summation; keeps quadrature deterministic and well conditioned.
inline double pairwise_sum(const double* x, std::size_t n) {
  if (n <= 8) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += x[i];
    return s;
  }
  const std::size_t half = n / 2;
  return pairwise_sum(x, half) + pairwise_sum(x + half, n - half);
}

}  // namespace detail

// Composite trapezoid of integrand * omega over s.
inline double quadrature(const BaseDomain& dom, const std::vector<double>& integrand) {
  if (integrand.size() != dom.n)
    throw std::invalid_argument("quadrature: integrand size mismatch");
  std::vector<double> terms(dom.n);
  for (std::size_t i = 0; i < dom.n; ++i) {
    const double w = (i == 0 || i == dom.n - 1) ? 0.5 : 1.0;
    terms[i] = w * integrand[i] * dom.omega[i];
  }
  return dom.h() * detail::pairwise_sum(terms.data(), terms.size());
}

inline BaseDomain make_uniform_domain(double length, std::size_t n,
                                      std::vector<double> omega,
                                      std::map<double, std::vector<double>> gamma = {},
                                      double s_begin = 0.0) {
  BaseDomain dom;
  dom.length = length;
  dom.n = n;
  dom.s_begin = s_begin;
  dom.omega = std::move(omega);
  dom.gamma = std::move(gamma);
  dom.validate();
  std::vector<double> ones(n, 1.0);
  dom.vol_B = quadrature(dom, ones);
  return dom;
}

inline BaseDomain make_flat_domain(double length, std::size_t n) {
  return make_uniform_domain(length, n, std::vector<double>(n, 1.0));
}

// Radius values on the grid.  The boundary policy is a mirror ghost
// (r[-1] := r[1], r[n] := r[n-2]) baked into the stencils, so r' = 0 holds at
// both endpoints identically after any mutation.
struct RadiusField {
  std::vector<double> values;
  double ceiling = kPi / 2.0;  // effective r_cut minus margin (finite even for
                               // noncompact models, where the run supplies it)

  void validate() const {
    for (double r : values) {
      if (!(r > 0.0)) throw std::invalid_argument("RadiusField: radius must be positive");
      if (!(r < ceiling))
        throw std::invalid_argument("RadiusField: radius reaches the ceiling");
    }
  }
};

struct Derivatives {
  std::vector<double> first;   // r'
  std::vector<double> second;  // r''
};

// Central second-order differences; mirror ghosts at both ends.
inline Derivatives derivatives(const BaseDomain& dom, const RadiusField& field) {
  const std::size_t n = dom.n;
  if (field.values.size() != n)
    throw std::invalid_argument("derivatives: field size mismatch");
  const double h = dom.h();
  const std::vector<double>& r = field.values;
  Derivatives d;
  d.first.resize(n);
  d.second.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double rm = (i == 0) ? r[1] : r[i - 1];
    const double rp = (i == n - 1) ? r[n - 2] : r[i + 1];
    d.first[i] = (rp - rm) / (2.0 * h);
    d.second[i] = (rp - 2.0 * r[i] + rm) / (h * h);
  }
  d.first[0] = 0.0;       // exact by mirror symmetry
  d.first[n - 1] = 0.0;
  return d;
}

// The mirror policy satisfies r' = 0 at the endpoints structurally; this op
// re-validates and hands the field back.  The second-derivative endpoint
// residual is not forced and is reported separately.
inline RadiusField enforce_boundary(RadiusField field) {
  field.validate();
  return field;
}

// Largest |r''| at the two endpoints under the mirror ghost: 2|r1 - r0|/h^2.
inline double boundary_hessian_residual(const BaseDomain& dom, const RadiusField& field) {
  const double h = dom.h();
  const std::vector<double>& r = field.values;
  const double left = 2.0 * (r[1] - r[0]) / (h * h);
  const double right = 2.0 * (r[dom.n - 2] - r[dom.n - 1]) / (h * h);
  return std::max(std::abs(left), std::abs(right));
}

// ---------------------------------------------------------------------------
// Weight families for the base volume element omega = warp(s)^(mH-1) with
// warp in {s, sin s, sinh s}; the matching connection trace per transverse
// unit vector is warp'(s)/warp(s).

enum class OmegaFamily { flat, spherical, hyperbolic };

inline double warp_value(OmegaFamily f, double s) {
  switch (f) {
    case OmegaFamily::flat: return s;
    case OmegaFamily::spherical: return std::sin(s);
    case OmegaFamily::hyperbolic: return std::sinh(s);
  }
  return s;
}

inline double warp_log_derivative(OmegaFamily f, double s) {
  switch (f) {
    case OmegaFamily::flat: return 1.0 / s;
    case OmegaFamily::spherical: return std::cos(s) / std::sin(s);
    case OmegaFamily::hyperbolic: return std::cosh(s) / std::sinh(s);
  }
  return 1.0 / s;
}

// Radially warped domain for space-form bases: omega = warp^(mH-1) and, when
// `radial_gamma` is set, Gamma_{k0}(s) = warp'/warp on the transverse block.
inline BaseDomain make_warped_domain(OmegaFamily family, double length, std::size_t n,
                                     int m_horizontal, double k0, bool radial_gamma,
                                     double s_begin) {
  const int transverse = m_horizontal - 1;
  if (transverse > 0 && !(s_begin > 0.0))
    throw std::invalid_argument(
        "make_warped_domain: radial weights with mH >= 2 need s_begin > 0");
  std::vector<double> omega(n);
  std::vector<double> gam(n, 0.0);
  const double h = length / double(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    const double s = s_begin + double(i) * h;
    omega[i] = transverse == 0 ? 1.0 : std::pow(warp_value(family, s), transverse);
    if (radial_gamma && transverse > 0) gam[i] = warp_log_derivative(family, s);
  }
  std::map<double, std::vector<double>> gamma;
  if (radial_gamma && transverse > 0) gamma[k0] = std::move(gam);
  return make_uniform_domain(length, n, std::move(omega), std::move(gamma), s_begin);
}

}  // namespace tubeflow
