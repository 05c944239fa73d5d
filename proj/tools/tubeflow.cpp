// Command line front end: run a flow from a config file, execute the
// verification oracles, sweep parameter ranges, list presets, print the
// default configuration.

#include <cstdint>
#include <cstdio>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tubeflow/config.hpp"
#include "tubeflow/flow.hpp"
#include "tubeflow/kernels.hpp"
#include "tubeflow/oracles.hpp"
#include "tubeflow/output.hpp"
#include "tubeflow/sweep.hpp"

namespace {

using namespace tubeflow;

int cmd_run(const std::string& config_path, bool conserve_override) {
  RunSpec spec;
  try {
    ConfigFile cfg = ConfigFile::parse_file(config_path);
    spec = run_spec_from_config(cfg);
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  }
  if (conserve_override) spec.flow.conserve_project = true;
  try {
    ExecutedRun ex = execute_run(spec);
    if (!ex.rejected.empty()) {
      std::cerr << "config error: " << ex.rejected << "\n";
      return 1;
    }
    write_output_bundle(spec.output.directory, ex.report, spec.output.plot);
    const auto& rep = ex.report;
    std::printf("%s after %zu steps, t = %s\n", rep.message.c_str(), rep.steps,
                format_g17(rep.final_t).c_str());
    std::printf("rows: %zu  area: %s -> %s  volD drift: %s\n", rep.rows.size(),
                format_g17(rep.rows.front().area).c_str(),
                format_g17(rep.rows.back().area).c_str(),
                format_g17(std::abs(rep.rows.back().volD - rep.rows.front().volD) /
                           rep.rows.front().volD)
                    .c_str());
    std::printf("output: %s\n", spec.output.directory.c_str());
    switch (rep.termination) {
      case Termination::reached_t_end:
      case Termination::steady_state:
        return 0;
      default:
        std::cerr << "flow terminated early: " << rep.message << "\n";
        return 2;
    }
  } catch (const std::exception& e) {
    std::cerr << "run failed: " << e.what() << "\n";
    return 1;
  }
}

void print_oracle_row(const OracleReport& rep) {
  std::printf("  %-28s max err %.3e  tol %.1e  %s  (%zu samples)\n", rep.name.c_str(),
              rep.max_error, rep.tolerance, rep.pass ? "pass" : "FAIL", rep.samples);
}

int cmd_check(std::uint64_t seed, const std::string& only_model) {
  const auto cat = preset_catalogue();
  if (!only_model.empty() && !find_preset(cat, only_model)) {
    std::cerr << "unknown preset: " << only_model << "\n";
    return 1;
  }
  bool all_pass = true;
  std::printf("seed: %llu\n", static_cast<unsigned long long>(seed));

  // identity suites per complete preset
  for (const auto& preset : cat) {
    if (!preset.complete) continue;
    if (!only_model.empty() && preset.name != only_model) continue;
    std::printf("%s:\n", preset.name.c_str());
    for (const auto& rep : identity_suite(preset.model, 10000, seed)) {
      print_oracle_row(rep);
      all_pass = all_pass && rep.pass;
    }
  }

  // constant-radius values against the classical tube formula
  {
    double max_err = 0.0;
    std::size_t samples = 0;
    for (int n = 2; n <= 6; ++n)
      for (int p = 1; p <= n - 1; ++p)
        for (Curvature eps : {Curvature::compact, Curvature::noncompact}) {
          auto m = space_form_model(n, p, eps);
          const double rmax = m.compact() ? 0.95 * m.r_cut : 3.0;
          for (int i = 1; i <= 50; ++i) {
            const double r = 0.05 + (rmax - 0.05) * double(i) / 51.0;
            const double rho = mean_curvature_at(m, r, 0.0, 0.0);
            max_err =
                std::max(max_err, std::abs(rho - spaceform_tube_oracle(n, p, eps, r)));
            ++samples;
          }
        }
    auto rep = make_report("constant-radius tube values", max_err, 1e-12, samples);
    std::printf("space forms:\n");
    print_oracle_row(rep);
    all_pass = all_pass && rep.pass;
  }

  // flat limit against the embedded surface of revolution
  {
    auto model = space_form_model(2, 1, Curvature::compact, 1e-6);
    auto dom = make_flat_domain(2.0 * kPi, 201);
    RadiusField field;
    field.ceiling = model.r_cut * (1.0 - 1e-3);
    double max_err = 0.0;
    for (auto [c, a, mode] : {std::tuple{0.8, 0.1, 1}, {1.0, 0.2, 2}, {0.7, 0.1, 3}}) {
      field.values.resize(dom.n);
      for (std::size_t i = 0; i < dom.n; ++i)
        field.values[i] = c + a * std::cos(mode * kPi * dom.s(i) / dom.length);
      auto d = derivatives(dom, field);
      auto rho = mean_curvature(model, dom, field, d);
      auto H = embedded_revolution_oracle(dom, field.values);
      for (std::size_t i = 0; i < dom.n; ++i)
        max_err = std::max(max_err, std::abs(rho[i] - H[i]));
    }
    auto rep = make_report("flat-limit embedded surface", max_err,
                           1e-4 + 5.0 * dom.h() * dom.h(), 3 * dom.n);
    std::printf("flat limit:\n");
    print_oracle_row(rep);
    all_pass = all_pass && rep.pass;
  }

  std::printf("%s\n", all_pass ? "all oracles pass" : "ORACLE FAILURE");
  return all_pass ? 0 : 3;
}

int cmd_sweep(const std::string& config_path) {
  try {
    ConfigFile cfg = ConfigFile::parse_file(config_path);
    const std::string out_dir = cfg.get("output.directory", "out");
    auto results = run_sweep(cfg, out_dir);
    std::filesystem::create_directories(out_dir);
    write_sweep_summary(out_dir + "/summary.csv", results);
    std::size_t failed = 0;
    for (const auto& r : results)
      if (!r.error.empty()) ++failed;
    std::printf("%zu runs, %zu failed; summary: %s/summary.csv\n", results.size(),
                failed, out_dir.c_str());
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "sweep error: " << e.what() << "\n";
    return 1;
  }
}

int cmd_presets() {
  for (const auto& p : preset_catalogue()) {
    std::printf("%-24s %-10s %s\n", p.name.c_str(), p.complete ? "complete" : "stub",
                p.description.c_str());
    if (p.complete) {
      std::string ratios;
      for (double k : p.model.ratios) {
        if (!ratios.empty()) ratios += ",";
        ratios += format_g17(k);
      }
      std::printf("%-24s   eps=%+d b=%g K={%s} k0=%g mV=%d mH=%d r_cut=%g\n", "",
                  int(p.model.epsilon), p.model.b, ratios.c_str(), p.model.k0,
                  p.model.vertical_total(), p.model.horizontal_total(), p.model.r_cut);
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"volume-preserving mean curvature flow of tubes of varying radius"};
  app.require_subcommand(1);

  std::string run_config;
  bool conserve = false;
  auto* run_cmd = app.add_subcommand("run", "integrate a flow from a config file");
  run_cmd->add_option("config", run_config, "path to the run configuration")->required();
  run_cmd->add_flag("--conserve-project", conserve,
                    "rescale after each step to pin the enclosed volume");

  std::uint64_t seed = 12345;
  std::string check_model;
  auto* check_cmd = app.add_subcommand("check", "run the verification oracles");
  check_cmd->add_option("--seed", seed, "random seed for the identity suites");
  check_cmd->add_option("--model", check_model, "restrict to one catalogue preset");

  std::string sweep_config;
  auto* sweep_cmd = app.add_subcommand("sweep", "run a Cartesian parameter sweep");
  sweep_cmd->add_option("config", sweep_config, "config with a [sweep] section")
      ->required();

  auto* presets_cmd = app.add_subcommand("presets", "list the model catalogue");
  auto* defaults_cmd =
      app.add_subcommand("defaults", "print the default configuration file");

  CLI11_PARSE(app, argc, argv);

  if (run_cmd->parsed()) return cmd_run(run_config, conserve);
  if (check_cmd->parsed()) return cmd_check(seed, check_model);
  if (sweep_cmd->parsed()) return cmd_sweep(sweep_config);
  if (presets_cmd->parsed()) return cmd_presets();
  if (defaults_cmd->parsed()) {
    std::fputs(tubeflow::default_config_text().c_str(), stdout);
    return 0;
  }
  return 1;
}
