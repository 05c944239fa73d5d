#pragma once

// Scalar root kernels of a symmetric space of compact or non-compact type,
// together with the small model struct that carries the only data the solver
// needs from the ambient geometry: the curvature sign, the root norm b, the
// set of root ratios, and the block multiplicities.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace tubeflow {

inline constexpr double kPi = 3.14159265358979323846;

enum class Curvature : int {
  compact = +1,     // circular trig branch
  noncompact = -1,  // hyperbolic trig branch
};

// Everything the tube formulas need from the ambient symmetric space,
// reduced to scalars and integers.
struct SpaceModel {
  Curvature epsilon = Curvature::compact;
  double b = 1.0;                    // |beta(X0)| for a unit normal direction
  std::vector<double> ratios;        // root ratio set K, sorted ascending
  std::array<int, 3> mult_vertical{};     // m_k^V for k = 0,1,2
  std::vector<std::pair<double, int>> mult_horizontal;  // (k, m_k^H), k in K u {0}
  double k0 = 1.0;                   // eigenblock ratio carrying grad r
  double r_cut = kPi / 2.0;          // cut radius of the normal umbrella

  bool compact() const { return epsilon == Curvature::compact; }

  int vertical_total() const {
    return mult_vertical[0] + mult_vertical[1] + mult_vertical[2];
  }
  int horizontal_total() const {
    int m = 0;
    for (const auto& [k, mk] : mult_horizontal) m += mk;
    return m;
  }
  int horizontal_mult(double k) const {
    for (const auto& [kk, mk] : mult_horizontal)
      if (kk == k) return mk;
    return 0;
  }
  double ratio_max() const {
    double km = 1.0;
    for (double k : ratios) km = std::max(km, k);
    return km;
  }

  // Default ceiling keeping every horizontal cosine positive and every
  // vertical sine positive on the open interval.
  static double default_r_cut(Curvature eps, double b, const std::vector<double>& ratios) {
    if (eps == Curvature::noncompact) return std::numeric_limits<double>::infinity();
    double km = 1.0;
    for (double k : ratios) km = std::max(km, k);
    return kPi / (2.0 * b * km);
  }

  void validate() const {
    if (!(b > 0.0)) throw std::invalid_argument("SpaceModel: b must be positive");
    if (ratios.empty()) throw std::invalid_argument("SpaceModel: ratio set K is empty");
    for (double k : ratios)
      if (!(k > 0.0)) throw std::invalid_argument("SpaceModel: ratios must be positive");
    if (!std::is_sorted(ratios.begin(), ratios.end()))
      throw std::invalid_argument("SpaceModel: ratios must be sorted ascending");
    for (int m : mult_vertical)
      if (m < 0) throw std::invalid_argument("SpaceModel: negative vertical multiplicity");
    for (const auto& [k, m] : mult_horizontal) {
      if (m < 0) throw std::invalid_argument("SpaceModel: negative horizontal multiplicity");
      const bool in_K = std::find(ratios.begin(), ratios.end(), k) != ratios.end();
      if (!in_K && k != 0.0)
        throw std::invalid_argument("SpaceModel: horizontal block outside K u {0}");
    }
    if (vertical_total() < 1)
      throw std::invalid_argument("SpaceModel: total vertical multiplicity must be >= 1");
    if (horizontal_total() < 1)
      throw std::invalid_argument("SpaceModel: total horizontal multiplicity must be >= 1");
    const bool k0_ok =
        k0 == 0.0 || std::find(ratios.begin(), ratios.end(), k0) != ratios.end();
    if (!k0_ok) throw std::invalid_argument("SpaceModel: k0 must lie in K u {0}");
    if (horizontal_mult(k0) < 1)
      throw std::invalid_argument("SpaceModel: the k0 block needs m_{k0}^H >= 1");
    if (!(r_cut > 0.0)) throw std::invalid_argument("SpaceModel: r_cut must be positive");
    if (compact()) {
      if (!std::isfinite(r_cut))
        throw std::invalid_argument("SpaceModel: compact models need a finite r_cut");
      const double cap = kPi / (2.0 * b * ratio_max());
      if (r_cut > cap * (1.0 + 1e-12))
        throw std::invalid_argument("SpaceModel: r_cut exceeds pi/(2 b max K)");
    }
  }
};

namespace detail {

// sqrt(eps)*x trig family evaluated on the real branch selected by eps.
// Small arguments switch to series so that kernel differences entering the
// curvature formulas keep full relative accuracy.
inline constexpr double kSeriesCut = 1e-4;

inline double co_raw(bool compact, double x) {
  if (x < kSeriesCut) {
    const double x2 = x * x;
    const double s = 1.0 + x2 * (-0.5 + x2 / 24.0);          // cos
    const double h = 1.0 + x2 * (0.5 + x2 / 24.0);           // cosh
    return compact ? s : h;
  }
  return compact ? std::cos(x) : std::cosh(x);
}

inline double sinc_raw(bool compact, double x) {
  if (x < kSeriesCut) {
    const double x2 = x * x;
    const double s = 1.0 + x2 * (-1.0 / 6.0 + x2 / 120.0);   // sin x / x
    const double h = 1.0 + x2 * (1.0 / 6.0 + x2 / 120.0);    // sinh x / x
    return compact ? s : h;
  }
  return compact ? std::sin(x) / x : std::sinh(x) / x;
}

// x * cot(x) resp. x * coth(x)
inline double xcot_raw(bool compact, double x) {
  if (x < kSeriesCut) {
    const double x2 = x * x;
    return compact ? 1.0 - x2 * (1.0 / 3.0 + x2 / 45.0)
                   : 1.0 + x2 * (1.0 / 3.0 - x2 / 45.0);
  }
  return compact ? x * std::cos(x) / std::sin(x) : x * std::cosh(x) / std::sinh(x);
}

// x * tan(x) resp. x * tanh(x)  (sign handled by the caller)
inline double xtan_raw(bool compact, double x) {
  if (x < kSeriesCut) {
    const double x2 = x * x;
    return compact ? x2 * (1.0 + x2 / 3.0) : x2 * (1.0 - x2 / 3.0);
  }
  return compact ? x * std::tan(x) : x * std::tanh(x);
}

inline void check_radius(const SpaceModel& m, double r) {
  if (!(r > 0.0) || !(r < m.r_cut))
    throw std::domain_error("root kernel: radius outside (0, r_cut)");
}

inline void check_pole(bool compact, double x) {
  if (!compact) return;
  const double s = std::sin(x);
  if (std::abs(s) < 1e-300) throw std::domain_error("root kernel: sine pole");
  const double c = std::cos(x);
  if (std::abs(c) < 1e-300) throw std::domain_error("root kernel: tangent pole");
}

}  // namespace detail

// cos(sqrt(eps) k b r) realized as cos (compact) / cosh (noncompact); 1 at k=0.
inline double kernel_co(const SpaceModel& m, double k, double r) {
  detail::check_radius(m, r);
  if (k == 0.0) return 1.0;
  return detail::co_raw(m.compact(), k * m.b * r);
}

// sqrt(eps) k b / tan(sqrt(eps) k b r): k b cot (compact) / k b coth
// (noncompact); the k=0 block means 1/r.
inline double kernel_cot(const SpaceModel& m, double k, double r) {
  detail::check_radius(m, r);
  if (k == 0.0) return 1.0 / r;
  const double x = k * m.b * r;
  detail::check_pole(m.compact(), x);
  return detail::xcot_raw(m.compact(), x) / r;
}

// sqrt(eps) k b tan(sqrt(eps) k b r): k b tan (compact) / -k b tanh
// (noncompact); 0 at k=0.
inline double kernel_tan(const SpaceModel& m, double k, double r) {
  detail::check_radius(m, r);
  if (k == 0.0) return 0.0;
  const double x = k * m.b * r;
  detail::check_pole(m.compact(), x);
  const double t = detail::xtan_raw(m.compact(), x) / r;
  return m.compact() ? t : -t;
}

// sin(sqrt(eps) k b r)/(sqrt(eps) k b r): sin/x (compact) / sinh/x
// (noncompact); 1 at k=0.
inline double kernel_sinc(const SpaceModel& m, double k, double r) {
  detail::check_radius(m, r);
  if (k == 0.0) return 1.0;
  return detail::sinc_raw(m.compact(), k * m.b * r);
}

// ---------------------------------------------------------------------------
// Presets

enum class Provenance { space_form_derived, table_config };

struct Preset {
  std::string name;
  SpaceModel model;
  std::string description;
  Provenance provenance = Provenance::space_form_derived;
  // Table presets carry the curvature sign, ratio set, k0 and ceiling only;
  // block multiplicities are required run inputs and are deliberately unset.
  bool complete = true;
};

// Tube over a totally geodesic p-dimensional subspace of the (n+1)-sphere
// (or hyperbolic analogue): single ratio, m_1^V = n-p fiber directions,
// m_1^H = p base directions.
inline SpaceModel space_form_model(int n, int p, Curvature eps, double b = 1.0) {
  if (n < 2 || p < 1 || p > n - 1)
    throw std::invalid_argument("space_form_model: need 1 <= p <= n-1, n >= 2");
  SpaceModel m;
  m.epsilon = eps;
  m.b = b;
  m.ratios = {1.0};
  m.mult_vertical = {0, n - p, 0};
  m.mult_horizontal = {{1.0, p}};
  m.k0 = 1.0;
  m.r_cut = SpaceModel::default_r_cut(eps, b, m.ratios);
  m.validate();
  return m;
}

namespace detail {

inline Preset table_stub(std::string name, Curvature eps, std::vector<double> ratios,
                         double k0, std::string description) {
  Preset p;
  p.name = std::move(name);
  p.description = std::move(description);
  p.provenance = Provenance::table_config;
  p.complete = false;
  p.model.epsilon = eps;
  p.model.b = 1.0;
  p.model.ratios = std::move(ratios);
  p.model.k0 = k0;
  p.model.r_cut = SpaceModel::default_r_cut(eps, 1.0, p.model.ratios);
  return p;
}

}  // namespace detail

inline std::vector<Preset> preset_catalogue() {
  std::vector<Preset> cat;
  const auto add_space_form = [&cat](int n, int p) {
    for (Curvature eps : {Curvature::compact, Curvature::noncompact}) {
      Preset pr;
      const char* tag = (eps == Curvature::compact) ? "compact" : "noncompact";
      pr.name = "spaceform-" + std::string(tag) + "-" + std::to_string(n) + "-" +
                std::to_string(p);
      pr.model = space_form_model(n, p, eps);
      pr.description = (eps == Curvature::compact)
                           ? "tube over a totally geodesic S^" + std::to_string(p) +
                                 " in S^" + std::to_string(n + 1)
                           : "tube over a totally geodesic H^" + std::to_string(p) +
                                 " in H^" + std::to_string(n + 1);
      pr.provenance = Provenance::space_form_derived;
      cat.push_back(std::move(pr));
    }
  };
  add_space_form(2, 1);
  add_space_form(3, 1);
  add_space_form(3, 2);
  add_space_form(4, 2);

  using detail::table_stub;
  const Curvature C = Curvature::compact, N = Curvature::noncompact;
  cat.push_back(table_stub("table4-1", C, {1.0, 2.0}, 2.0,
      "SU(3)/SO(3), base S^1.S^2 (umbrella RP^2), grad r along the S^1 factor; "
      "multiplicities are required config inputs"));
  cat.push_back(table_stub("table4-2", C, {1.0, 2.0}, 2.0,
      "SU(6)/Sp(3), base S^1.S^5 (umbrella QP^2); multiplicities are required "
      "config inputs"));
  cat.push_back(table_stub("table4-3", C, {1.0, 2.0}, 2.0,
      "SU(3), base S^1.S^3 (umbrella CP^2); multiplicities are required config "
      "inputs"));
  cat.push_back(table_stub("table4-4", C, {1.0, 2.0}, 2.0,
      "E6/F4, base S^1.S^9 (umbrella OP^2); multiplicities are required config "
      "inputs"));
  cat.push_back(table_stub("table4-5", C, {1.0}, 1.0,
      "Sp(2), base Sp(1)xSp(1) (umbrella S^4), grad r along one Sp(1) factor "
      "(the flat-factor variant uses k0 = 0); multiplicities are required "
      "config inputs"));
  cat.push_back(table_stub("table5-1", N, {1.0, 2.0}, 2.0,
      "SL(3,R)/SO(3), base H^1 x H^2 (umbrella H^2); multiplicities are "
      "required config inputs"));
  cat.push_back(table_stub("table5-2", N, {1.0, 2.0}, 2.0,
      "SU*(6)/Sp(3), base H^1 x H^5 (umbrella QH^2); multiplicities are "
      "required config inputs"));
  cat.push_back(table_stub("table5-3", N, {1.0, 2.0}, 2.0,
      "SL(3,R), base H^1 x H^3 (umbrella CH^2); multiplicities are required "
      "config inputs"));
  cat.push_back(table_stub("table5-4", N, {1.0, 2.0}, 2.0,
      "E6(-26)/F4, base H^1 x H^9 (umbrella OH^2); multiplicities are required "
      "config inputs"));
  cat.push_back(table_stub("table5-5", N, {1.0}, 1.0,
      "Sp(2,C), base Sp(1,C)xSp(1,C) (umbrella H^4), grad r along one factor "
      "(the flat-factor variant uses k0 = 0); multiplicities are required "
      "config inputs"));
  return cat;
}

inline const Preset* find_preset(const std::vector<Preset>& cat, const std::string& name) {
  for (const auto& p : cat)
    if (p.name == name) return &p;
  return nullptr;
}

}  // namespace tubeflow
