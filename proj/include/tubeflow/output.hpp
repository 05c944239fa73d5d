#pragma once

// Emission of run artifacts: the series and snapshot CSV files (plain
// comma-separated, 17 significant digits so every double round-trips) and
// small self-contained SVG plots.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "tubeflow/flow.hpp"

namespace tubeflow {

inline std::string format_g17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_series_csv(const std::string& path, const RunReport& rep) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "t,area,volD,Hbar,min_u,max_r,bound,sup_rhs,boundary_hess_residual\n";
  for (const auto& r : rep.rows) {
    out << format_g17(r.t) << ',' << format_g17(r.area) << ',' << format_g17(r.volD)
        << ',' << format_g17(r.hbar) << ',' << format_g17(r.min_u) << ','
        << format_g17(r.max_r) << ',' << format_g17(r.bound) << ','
        << format_g17(r.sup_rhs) << ',' << format_g17(r.boundary_residual) << '\n';
  }
}

inline std::string snapshot_filename(double t) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "snapshot_%.6f.csv", t);
  return buf;
}

inline void write_snapshot_csv(const std::string& path, const Snapshot& snap) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "s,r,rho,u\n";
  for (std::size_t i = 0; i < snap.s.size(); ++i)
    out << format_g17(snap.s[i]) << ',' << format_g17(snap.r[i]) << ','
        << format_g17(snap.rho[i]) << ',' << format_g17(snap.u[i]) << '\n';
}

// ---------------------------------------------------------------------------
// Minimal SVG line plots: polylines, axes, tick labels.  No external assets.

struct SvgSeries {
  std::string label;
  std::string color = "#1f77b4";
  std::vector<double> x, y;
};

namespace detail {

struct AxisTicks {
  std::vector<double> at;
};

inline AxisTicks nice_ticks(double lo, double hi) {
  AxisTicks t;
  if (!(hi > lo)) {
    t.at = {lo};
    return t;
  }
  const double span = hi - lo;
  const double raw = span / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    if (raw <= m * mag) {
      step = m * mag;
      break;
    }
  }
  const double first = std::ceil(lo / step) * step;
  for (double v = first; v <= hi + 0.5 * step; v += step) t.at.push_back(v);
  return t;
}

inline std::string fmt_tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

}  // namespace detail

inline void write_svg_plot(const std::string& path, const std::string& title,
                           const std::string& xlabel,
                           const std::vector<SvgSeries>& series) {
  const double W = 760, H = 480;
  const double ml = 72, mr = 24, mt = 40, mb = 48;
  double xlo = 1e300, xhi = -1e300, ylo = 1e300, yhi = -1e300;
  for (const auto& s : series) {
    for (double v : s.x) {
      xlo = std::min(xlo, v);
      xhi = std::max(xhi, v);
    }
    for (double v : s.y) {
      ylo = std::min(ylo, v);
      yhi = std::max(yhi, v);
    }
  }
  if (!(xhi > xlo)) xhi = xlo + 1.0;
  if (!(yhi > ylo)) {
    ylo -= 0.5;
    yhi += 0.5;
  }
  const double pad = 0.04 * (yhi - ylo);
  ylo -= pad;
  yhi += pad;
  const auto X = [&](double v) { return ml + (v - xlo) / (xhi - xlo) * (W - ml - mr); };
  const auto Y = [&](double v) { return H - mb - (v - ylo) / (yhi - ylo) * (H - mt - mb); };

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\""
      << H << "\" viewBox=\"0 0 " << W << " " << H << "\">\n";
  out << "  <rect width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
  out << "  <text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" "
         "font-family=\"sans-serif\" font-size=\"15\">"
      << title << "</text>\n";

  const auto xt = detail::nice_ticks(xlo, xhi);
  const auto yt = detail::nice_ticks(ylo, yhi);
  out << "  <g stroke=\"#dddddd\" stroke-width=\"1\">\n";
  for (double v : xt.at)
    out << "    <line x1=\"" << X(v) << "\" y1=\"" << Y(ylo) << "\" x2=\"" << X(v)
        << "\" y2=\"" << Y(yhi) << "\"/>\n";
  for (double v : yt.at)
    out << "    <line x1=\"" << X(xlo) << "\" y1=\"" << Y(v) << "\" x2=\"" << X(xhi)
        << "\" y2=\"" << Y(v) << "\"/>\n";
  out << "  </g>\n";
  out << "  <g font-family=\"sans-serif\" font-size=\"11\" fill=\"#333333\">\n";
  for (double v : xt.at)
    out << "    <text x=\"" << X(v) << "\" y=\"" << H - mb + 16
        << "\" text-anchor=\"middle\">" << detail::fmt_tick(v) << "</text>\n";
  for (double v : yt.at)
    out << "    <text x=\"" << ml - 6 << "\" y=\"" << Y(v) + 4
        << "\" text-anchor=\"end\">" << detail::fmt_tick(v) << "</text>\n";
  out << "  </g>\n";
  out << "  <rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << W - ml - mr
      << "\" height=\"" << H - mt - mb
      << "\" fill=\"none\" stroke=\"#333333\" stroke-width=\"1\"/>\n";
  out << "  <text x=\"" << W / 2 << "\" y=\"" << H - 10
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
      << xlabel << "</text>\n";

  int li = 0;
  for (const auto& s : series) {
    out << "  <polyline fill=\"none\" stroke=\"" << s.color
        << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (i) out << ' ';
      out << X(s.x[i]) << ',' << Y(s.y[i]);
    }
    out << "\"/>\n";
    const double lx = ml + 12, ly = mt + 16 + 16 * li++;
    out << "  <line x1=\"" << lx << "\" y1=\"" << ly - 4 << "\" x2=\"" << lx + 22
        << "\" y2=\"" << ly - 4 << "\" stroke=\"" << s.color
        << "\" stroke-width=\"2\"/>\n";
    out << "  <text x=\"" << lx + 28 << "\" y=\"" << ly
        << "\" font-family=\"sans-serif\" font-size=\"12\">" << s.label << "</text>\n";
  }
  out << "</svg>\n";
}

// Writes the whole output bundle for a run into `dir`.
inline void write_output_bundle(const std::string& dir, const RunReport& rep,
                                bool plot) {
  std::filesystem::create_directories(dir);
  write_series_csv(dir + "/series.csv", rep);
  for (const auto& snap : rep.snapshots)
    write_snapshot_csv(dir + "/" + snapshot_filename(snap.t), snap);
  if (!plot) return;

  std::vector<double> t;
  for (const auto& r : rep.rows) t.push_back(r.t);
  std::vector<SvgSeries> series;
  const auto column = [&](const char* label, const char* color, auto getter) {
    SvgSeries s;
    s.label = label;
    s.color = color;
    s.x = t;
    for (const auto& r : rep.rows) s.y.push_back(getter(r));
    series.push_back(std::move(s));
  };
  column("area", "#1f77b4", [](const SeriesRow& r) { return r.area; });
  column("volD", "#ff7f0e", [](const SeriesRow& r) { return r.volD; });
  column("max_r", "#2ca02c", [](const SeriesRow& r) { return r.max_r; });
  column("min_u", "#d62728", [](const SeriesRow& r) { return r.min_u; });
  write_svg_plot(dir + "/series.svg", "run series", "t", series);

  std::vector<SvgSeries> prof;
  const auto& first = rep.snapshots.front();
  const auto& last = rep.snapshots.back();
  prof.push_back({"r(s) initial", "#999999", first.s, first.r});
  prof.push_back({"r(s) final", "#1f77b4", last.s, last.r});
  write_svg_plot(dir + "/profile.svg", "radius profile", "s", prof);
}

}  // namespace tubeflow
