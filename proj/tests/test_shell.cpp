#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "tubeflow/config.hpp"
#include "tubeflow/output.hpp"
#include "tubeflow/sweep.hpp"

using namespace tubeflow;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
  static int counter = 0;
  auto p = fs::temp_directory_path() /
           ("tubeflow_shell_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter++));
  fs::create_directories(p);
  return p;
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

std::string standard_config(const std::string& outdir, const std::string& extra = "") {
  return "[model]\npreset = spaceform\nvariant = compact\nn = 2\np = 1\n"
         "[domain]\nL = 6.283185307179586\nn = 65\n"
         "[initial]\nprofile = cosine\nr0 = 0.6\namplitude = 0.02\nmode = 1\n"
         "[flow]\nscheme = rk4\nt_end = 0.05\n"
         "[output]\ndirectory = " +
         outdir + "\ncadence = 10\n" + extra;
}

int run_cli(const std::string& args, std::string* out_text = nullptr) {
  const std::string out_file =
      (fs::temp_directory_path() / "tubeflow_cli_out.txt").string();
  const std::string cmd =
      std::string(TUBEFLOW_CLI_PATH) + " " + args + " > " + out_file + " 2>&1";
  const int rc = std::system(cmd.c_str());
  if (out_text) {
    std::ifstream in(out_file);
    std::stringstream ss;
    ss << in.rdbuf();
    *out_text = ss.str();
  }
  return WEXITSTATUS(rc);
}

}  // namespace

TEST_CASE("config parser") {
  auto cfg = ConfigFile::parse_string(
      "# comment\n[model]\npreset = spaceform  # trailing\n b = 2.0 \n"
      "[flow]\nt_end=0.25\nconserve_project = true\n");
  CHECK(cfg.get("model.preset", "") == "spaceform");
  CHECK(cfg.get_num("model.b", 0.0) == 2.0);
  CHECK(cfg.get_num("flow.t_end", 0.0) == 0.25);
  CHECK(cfg.get_bool("flow.conserve_project", false));
  CHECK(cfg.get("missing.key", "fallback") == "fallback");
  CHECK_THROWS_AS(cfg.require("missing.key"), ConfigError);
  CHECK_THROWS_AS(ConfigFile::parse_string("[unterminated\n"), ConfigError);
  CHECK_THROWS_AS(ConfigFile::parse_string("[a]\nnoequals\n"), ConfigError);
  CHECK_THROWS_AS(ConfigFile::parse_string("[a]\nx = abc\n").require_num("a.x"),
                  ConfigError);
}

TEST_CASE("run spec construction") {
  auto cfg = ConfigFile::parse_string(standard_config("out"));
  auto spec = run_spec_from_config(cfg);
  CHECK(spec.model.compact());
  CHECK(spec.domain.n == 65);
  CHECK(spec.initial.kind == ProfileKind::cosine);
  CHECK(spec.flow.scheme == Scheme::rk4);
  CHECK(spec.ceiling == Catch::Approx(spec.model.r_cut * (1 - 1e-3)));

  SECTION("noncompact models demand a ceiling") {
    auto bad = ConfigFile::parse_string(
        "[model]\npreset = spaceform\nvariant = noncompact\n[domain]\nn = 16\n");
    CHECK_THROWS_AS(run_spec_from_config(bad), ConfigError);
    auto good = ConfigFile::parse_string(
        "[model]\npreset = spaceform\nvariant = noncompact\nr_max = 4.0\n"
        "[domain]\nn = 16\n[initial]\nprofile = constant\nr0 = 0.5\n");
    CHECK(run_spec_from_config(good).ceiling == 4.0);
  }

  SECTION("custom model") {
    auto custom = ConfigFile::parse_string(
        "[model]\npreset = custom\nepsilon = +1\nratios = 1,2\nk0 = 2\n"
        "mult_vertical = 1:2,2:1\nmult_horizontal = 1:3,2:1\n"
        "[domain]\nn = 16\n[initial]\nprofile = constant\nr0 = 0.3\n");
    auto spec2 = run_spec_from_config(custom);
    CHECK(spec2.model.ratios == std::vector<double>{1.0, 2.0});
    CHECK(spec2.model.k0 == 2.0);
    CHECK(spec2.model.vertical_total() == 3);
    CHECK(spec2.model.r_cut == Catch::Approx(kPi / 4.0));
  }

  SECTION("table preset requires multiplicities") {
    auto missing = ConfigFile::parse_string("[model]\npreset = table4-1\n");
    CHECK_THROWS_AS(run_spec_from_config(missing), ConfigError);
    auto filled = ConfigFile::parse_string(
        "[model]\npreset = table4-1\nmult_vertical = 1:2,2:1\n"
        "mult_horizontal = 1:2,2:1\n[domain]\nn = 16\n"
        "[initial]\nprofile = constant\nr0 = 0.3\n");
    auto spec3 = run_spec_from_config(filled);
    CHECK(spec3.model.k0 == 2.0);
    CHECK(spec3.model.horizontal_total() == 3);
  }

  SECTION("unknown preset") {
    auto bad = ConfigFile::parse_string("[model]\npreset = nonsense\n");
    CHECK_THROWS_AS(run_spec_from_config(bad), ConfigError);
  }
}

TEST_CASE("initial profile validation") {
  auto cfg = ConfigFile::parse_string(standard_config("out"));
  auto spec = run_spec_from_config(cfg);
  auto r = build_profile(spec.initial, spec.domain);

  // cosine satisfies the first-derivative condition structurally
  CHECK(validate_initial_profile(spec.initial, spec.domain, r, false).empty());
  // its endpoint r'' is nonzero, so strict mode rejects it by name
  auto msg = validate_initial_profile(spec.initial, spec.domain, r, true);
  CHECK(msg.find("r''") != std::string::npos);

  // a table profile with a boundary slope is rejected with the residual named
  InitialProfile tab;
  tab.kind = ProfileKind::table;
  std::vector<double> ramp(spec.domain.n);
  for (std::size_t i = 0; i < ramp.size(); ++i) ramp[i] = 0.5 + 0.01 * double(i);
  auto msg2 = validate_initial_profile(tab, spec.domain, ramp, false);
  CHECK(msg2.find("r'") != std::string::npos);

  // a boundary-flat table profile passes
  auto flat_table = r;
  CHECK(validate_initial_profile(tab, spec.domain, flat_table, false).empty());
}

TEST_CASE("csv numbers round-trip exactly") {
  std::mt19937_64 rng(31337);
  std::uniform_real_distribution<double> mant(-1.0, 1.0);
  std::uniform_int_distribution<int> expo(-300, 300);
  for (int i = 0; i < 5000; ++i) {
    const double v = std::ldexp(mant(rng), expo(rng));
    const std::string s = format_g17(v);
    CHECK(std::stod(s) == v);
  }
  CHECK(std::stod(format_g17(0.1)) == 0.1);
}

TEST_CASE("output bundle") {
  const auto dir = temp_dir();
  auto cfg = ConfigFile::parse_string(standard_config(dir.string()));
  auto spec = run_spec_from_config(cfg);
  auto ex = execute_run(spec);
  REQUIRE(ex.rejected.empty());
  write_output_bundle(dir.string(), ex.report, true);

  REQUIRE(fs::exists(dir / "series.csv"));
  REQUIRE(fs::exists(dir / "series.svg"));
  REQUIRE(fs::exists(dir / "profile.svg"));

  std::ifstream in(dir / "series.csv");
  std::string header;
  std::getline(in, header);
  CHECK(header == "t,area,volD,Hbar,min_u,max_r,bound,sup_rhs,boundary_hess_residual");
  std::size_t rows = 0;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) ++rows;
  CHECK(rows == ex.report.rows.size());

  // snapshots exist for the recorded times
  bool found_snapshot = false;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.path().filename().string().rfind("snapshot_", 0) == 0) found_snapshot = true;
  CHECK(found_snapshot);

  // svg is self-contained (no external references)
  std::ifstream svg(dir / "series.svg");
  std::stringstream ss;
  ss << svg.rdbuf();
  CHECK(ss.str().find("http://www.w3.org/2000/svg") != std::string::npos);
  CHECK(ss.str().find("href") == std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("cli run: exit codes and determinism") {
  const auto dir = temp_dir();
  const auto cfgpath = dir / "run.cfg";

  SECTION("valid constant profile exits 0 with constant columns") {
    write_file(cfgpath, "[model]\npreset = spaceform\n[domain]\nn = 33\n"
                        "[initial]\nprofile = constant\nr0 = 0.6\n"
                        "[flow]\nt_end = 0.5\n[output]\ndirectory = " +
                            (dir / "out").string() + "\n");
    std::string out;
    CHECK(run_cli("run " + cfgpath.string(), &out) == 0);
    CHECK(out.find("SteadyState") != std::string::npos);
  }

  SECTION("boundary-violating table profile exits 1 naming the residual") {
    std::ostringstream table;
    for (int i = 0; i < 33; ++i) table << 0.5 + 0.01 * i << "\n";
    write_file(dir / "ramp.txt", table.str());
    write_file(cfgpath, "[model]\npreset = spaceform\n[domain]\nn = 33\n"
                        "[initial]\nprofile = table:" +
                            (dir / "ramp.txt").string() +
                            "\n[output]\ndirectory = " + (dir / "out").string() + "\n");
    std::string out;
    CHECK(run_cli("run " + cfgpath.string(), &out) == 1);
    CHECK(out.find("residual") != std::string::npos);
  }

  SECTION("perturbed run exits 0 with monotone area") {
    write_file(cfgpath, standard_config((dir / "out2").string()));
    std::string out;
    CHECK(run_cli("run " + cfgpath.string(), &out) == 0);
    std::ifstream in(dir / "out2" / "series.csv");
    std::string line;
    std::getline(in, line);
    double prev_area = 1e300;
    while (std::getline(in, line)) {
      const auto c1 = line.find(',');
      const auto c2 = line.find(',', c1 + 1);
      const double area = std::stod(line.substr(c1 + 1, c2 - c1 - 1));
      CHECK(area <= prev_area + 1e-10);
      prev_area = area;
    }
  }

  SECTION("identical configs give byte-identical outputs") {
    write_file(cfgpath, standard_config((dir / "a").string()));
    const auto cfg2 = dir / "run2.cfg";
    write_file(cfg2, standard_config((dir / "b").string()));
    REQUIRE(run_cli("run " + cfgpath.string()) == 0);
    REQUIRE(run_cli("run " + cfg2.string()) == 0);
    for (const char* name : {"series.csv"}) {
      std::ifstream fa(dir / "a" / name), fb(dir / "b" / name);
      std::stringstream sa, sb;
      sa << fa.rdbuf();
      sb << fb.rdbuf();
      CHECK(sa.str() == sb.str());
    }
  }
  fs::remove_all(dir);
}

TEST_CASE("cli check and presets") {
  std::string out1, out2;
  CHECK(run_cli("check --seed 42", &out1) == 0);
  CHECK(run_cli("check --seed 42", &out2) == 0);
  CHECK(out1 == out2);
  CHECK(out1.find("all oracles pass") != std::string::npos);

  std::string bad;
  CHECK(run_cli("check --model not-a-preset", &bad) == 1);

  std::string presets;
  CHECK(run_cli("presets", &presets) == 0);
  CHECK(presets.find("spaceform-compact-2-1") != std::string::npos);
  CHECK(presets.find("table5-5") != std::string::npos);

  std::string defaults;
  CHECK(run_cli("defaults", &defaults) == 0);
  CHECK(defaults.find("[flow]") != std::string::npos);
  CHECK_NOTHROW(ConfigFile::parse_string(defaults));
}

TEST_CASE("sweep worker cap honors the environment") {
  ::setenv("TUBEFLOW_THREADS", "1", 1);
  CHECK(sweep_worker_count(8) == 1);
  ::setenv("TUBEFLOW_THREADS", "0", 1);  // nonsense values fall back
  CHECK(sweep_worker_count(8) >= 1);
  ::unsetenv("TUBEFLOW_THREADS");
  CHECK(sweep_worker_count(1) == 1);
}

TEST_CASE("sweep") {
  const auto dir = temp_dir();
  const auto cfgpath = dir / "sweep.cfg";

  SECTION("amplitude range: zero-amplitude run reaches steady state at once") {
    write_file(cfgpath,
               standard_config((dir / "sw").string(),
                               "[sweep]\ninitial.amplitude = 0, 0.01\n"));
    std::string out;
    CHECK(run_cli("sweep " + cfgpath.string(), &out) == 0);
    std::ifstream in(dir / "sw" / "summary.csv");
    std::string header, row0, row1;
    std::getline(in, header);
    std::getline(in, row0);
    std::getline(in, row1);
    CHECK(header.find("initial.amplitude") != std::string::npos);
    CHECK(row0.find("SteadyState") != std::string::npos);
    CHECK(row1.find("ReachedTEnd") != std::string::npos);
  }

  SECTION("b range conserves the volume across runs") {
    write_file(cfgpath, standard_config((dir / "swb").string(),
                                        "[sweep]\nmodel.b = 0.5, 1.0\n"));
    auto cfg = ConfigFile::parse_file(cfgpath.string());
    auto results = run_sweep(cfg, (dir / "swb").string());
    REQUIRE(results.size() == 2);
    for (const auto& r : results) {
      CHECK(r.error.empty());
      CHECK(r.vol_drift < 1e-8);
    }
  }

  SECTION("single-point sweep matches a direct run") {
    write_file(cfgpath, standard_config((dir / "sw1").string(),
                                        "[sweep]\nmodel.b = 1.0\n"));
    auto cfg = ConfigFile::parse_file(cfgpath.string());
    auto results = run_sweep(cfg, (dir / "sw1").string());
    REQUIRE(results.size() == 1);
    CHECK(results[0].error.empty());

    auto direct_cfg = ConfigFile::parse_string(standard_config((dir / "d").string()));
    auto spec = run_spec_from_config(direct_cfg);
    auto ex = execute_run(spec);
    const double v0 = ex.report.rows.front().volD;
    const double v1 = ex.report.rows.back().volD;
    CHECK(results[0].vol_drift ==
          Catch::Approx(std::abs(v1 - v0) / v0).margin(1e-15));
  }

  SECTION("failures are recorded per run and the sweep continues") {
    write_file(cfgpath,
               standard_config((dir / "swf").string(),
                               "[sweep]\ninitial.r0 = 0.6, 99.0\n"));
    auto cfg = ConfigFile::parse_file(cfgpath.string());
    auto results = run_sweep(cfg, (dir / "swf").string());
    REQUIRE(results.size() == 2);
    CHECK(results[0].error.empty());
    CHECK_FALSE(results[1].error.empty());
  }
  fs::remove_all(dir);
}
