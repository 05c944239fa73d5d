#pragma once

// Parameter sweeps: Cartesian products over scalar config fields, run on a
// process-internal worker pool.  Each worker owns its run directory; the
// summary table is assembled in input order afterwards.

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <thread>
#include <vector>

#include "tubeflow/config.hpp"
#include "tubeflow/geometry.hpp"
#include "tubeflow/output.hpp"

namespace tubeflow {

struct SweepPoint {
  std::map<std::string, double> params;  // sweep key -> value
};

struct SweepResult {
  SweepPoint point;
  std::string termination;
  double final_max_dev = 0.0;  // max|r - mean r| at the end
  double vol_drift = 0.0;      // relative enclosed-volume drift
  std::string error;           // nonempty when the run failed to execute
};

inline std::size_t sweep_worker_count(std::size_t jobs) {
  std::size_t n = std::thread::hardware_concurrency();
  if (n == 0) n = 1;
  if (const char* env = std::getenv("TUBEFLOW_THREADS")) {
    const long cap = std::strtol(env, nullptr, 10);
    if (cap >= 1) n = std::min<std::size_t>(n, std::size_t(cap));
  }
  return std::max<std::size_t>(1, std::min(n, jobs));
}

// Sweepable keys live in a [sweep] section as comma-separated value lists,
// e.g. `model.b = 0.5, 1.0`.  Every combination becomes one run.
inline std::vector<SweepPoint> sweep_points(const ConfigFile& cfg) {
  std::vector<std::pair<std::string, std::vector<double>>> axes;
  for (const auto& [key, value] : cfg.entries()) {
    if (key.rfind("sweep.", 0) != 0) continue;
    const std::string target = key.substr(6);
    std::vector<double> vals;
    for (const auto& tok : ConfigFile::split_list(value))
      vals.push_back(ConfigFile::to_num(key, tok));
    if (vals.empty()) throw ConfigError("empty sweep range for " + target);
    axes.emplace_back(target, std::move(vals));
  }
  std::vector<SweepPoint> points;
  points.emplace_back();
  for (const auto& [target, vals] : axes) {
    std::vector<SweepPoint> next;
    for (const auto& p : points) {
      for (double v : vals) {
        SweepPoint q = p;
        q.params[target] = v;
        next.push_back(std::move(q));
      }
    }
    points = std::move(next);
  }
  return points;
}

inline ConfigFile apply_sweep_point(const ConfigFile& base, const SweepPoint& p) {
  std::string text;
  std::string section;
  // re-render the base entries, overriding swept keys
  std::map<std::string, std::string> merged;
  for (const auto& [key, value] : base.entries())
    if (key.rfind("sweep.", 0) != 0) merged[key] = value;
  for (const auto& [key, value] : p.params) merged[key] = format_g17(value);
  std::map<std::string, std::vector<std::pair<std::string, std::string>>> by_section;
  for (const auto& [key, value] : merged) {
    const auto dot = key.find('.');
    by_section[key.substr(0, dot)].emplace_back(key.substr(dot + 1), value);
  }
  for (const auto& [sec, kvs] : by_section) {
    text += "[" + sec + "]\n";
    for (const auto& [k, v] : kvs) text += k + " = " + v + "\n";
  }
  return ConfigFile::parse_string(text);
}

// Executes one resolved run spec; shared by the run command and the sweep.
struct ExecutedRun {
  RunReport report;
  RadiusField initial;
  std::string rejected;  // nonempty: initial-profile validation message
};

inline ExecutedRun execute_run(const RunSpec& spec) {
  ExecutedRun ex;
  RadiusField field;
  field.ceiling = spec.ceiling;
  field.values = build_profile(spec.initial, spec.domain);
  ex.rejected = validate_initial_profile(spec.initial, spec.domain, field.values,
                                         spec.strict_boundary);
  if (!ex.rejected.empty()) return ex;
  field.validate();
  ex.initial = field;
  const auto table = DeltaTable::build(spec.model, spec.ceiling);
  ex.report = run(spec.model, spec.domain, std::move(field), spec.flow, table);
  return ex;
}

inline std::vector<SweepResult> run_sweep(const ConfigFile& base,
                                          const std::string& out_dir) {
  const auto points = sweep_points(base);
  std::vector<SweepResult> results(points.size());
  std::atomic<std::size_t> cursor{0};
  const std::size_t workers = sweep_worker_count(points.size());

  const auto work = [&] {
    for (;;) {
      const std::size_t i = cursor.fetch_add(1);
      if (i >= points.size()) return;
      SweepResult& res = results[i];
      res.point = points[i];
      try {
        ConfigFile cfg = apply_sweep_point(base, points[i]);
        RunSpec spec = run_spec_from_config(cfg);
        char sub[32];
        std::snprintf(sub, sizeof sub, "run_%03zu", i);
        spec.output.directory = out_dir + "/" + sub;
        ExecutedRun ex = execute_run(spec);
        if (!ex.rejected.empty()) {
          res.error = ex.rejected;
          continue;
        }
        write_output_bundle(spec.output.directory, ex.report, spec.output.plot);
        res.termination = to_string(ex.report.termination);
        const auto& r = ex.report.final_field.values;
        double mean = 0.0;
        for (double v : r) mean += v;
        mean /= double(r.size());
        for (double v : r)
          res.final_max_dev = std::max(res.final_max_dev, std::abs(v - mean));
        const double v0 = ex.report.rows.front().volD;
        const double v1 = ex.report.rows.back().volD;
        res.vol_drift = std::abs(v1 - v0) / std::max(std::abs(v0), 1e-300);
      } catch (const std::exception& e) {
        res.error = e.what();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w + 1 < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& th : pool) th.join();
  return results;
}

inline void write_sweep_summary(const std::string& path,
                                const std::vector<SweepResult>& results) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  // union of swept keys, in deterministic order
  std::map<std::string, bool> keys;
  for (const auto& r : results)
    for (const auto& [k, v] : r.point.params) keys[k] = true;
  out << "run";
  for (const auto& [k, _] : keys) out << ',' << k;
  out << ",termination,final_max_dev,vol_drift,error\n";
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& r = results[i];
    out << i;
    for (const auto& [k, _] : keys) {
      out << ',';
      auto it = r.point.params.find(k);
      if (it != r.point.params.end()) out << format_g17(it->second);
    }
    out << ',' << (r.error.empty() ? r.termination : std::string("Failed")) << ','
        << format_g17(r.final_max_dev) << ',' << format_g17(r.vol_drift) << ','
        << r.error << '\n';
  }
}

}  // namespace tubeflow
