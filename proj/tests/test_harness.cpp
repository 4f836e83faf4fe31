#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sys/wait.h>

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "zscatter/config.hpp"
#include "zscatter/harness.hpp"
#include "zscatter/io.hpp"

using namespace zscatter;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("zscatter_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

// small 2D prop1_3 run, a few seconds
nlohmann::json small_file() {
  return {{"grid", 64}, {"box", 32.0}, {"t0_list", {8.0, 12.0}}, {"iterate_t0", 12.0},
          {"snapshot_every", 20}, {"phi_tol", 1e-4}};
}

int run_cli(const std::string& args) {
  const char* bin = std::getenv("ZSCATTER_BIN");
  REQUIRE(bin != nullptr);
  std::string cmd = std::string(bin) + " -q " + args + " > /dev/null 2>&1";
  int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

}  // namespace

TEST_CASE("config precedence and validation") {
  RunConfig d = resolve_config("prop1_1", nullptr, {});
  CHECK(d == scenario_defaults("prop1_1"));
  CHECK(d.lambda == 0.5);
  CHECK(scenario_defaults("prop1_2").lambda == 1.5);
  CHECK(scenario_defaults("prop1_3").lambda == 1.0);
  CHECK(scenario_defaults("prop1_3").dim == 2);

  Overrides dt;
  dt.dt = 0.005;
  RunConfig only_dt = resolve_config("prop1_1", nullptr, dt);
  RunConfig want = d;
  want.dt = 0.005;
  CHECK(only_dt == want);

  nlohmann::json file{{"dt", 0.02}, {"grid", 32}, {"stages", {{"cauchy", false}}}};
  RunConfig from_file = resolve_config("prop1_1", file, dt);
  CHECK(from_file.dt == 0.005);  // flag beats file
  CHECK(from_file.grid == 32);   // file beats default
  CHECK_FALSE(from_file.stage_cauchy);
  CHECK(from_file.stage_iterate);

  Overrides t0;
  t0.t0_list = std::vector<double>{15.0, 30.0};
  RunConfig moved = resolve_config("prop1_1", nullptr, t0);
  CHECK(moved.iterate_t0 == 0.0);

  CHECK_THROWS_AS(resolve_config("prop9", nullptr, {}), std::invalid_argument);
  CHECK_THROWS_AS(resolve_config("prop1_1", nlohmann::json{{"dtt", 0.1}}, {}), std::invalid_argument);
  CHECK_THROWS_AS(resolve_config("prop1_1", nlohmann::json{{"dt", "fast"}}, {}), std::invalid_argument);
  Overrides three;
  three.dim = 3;
  CHECK_THROWS_AS(resolve_config("prop1_3", nullptr, three), std::invalid_argument);
  Overrides huge;
  huge.grid = 512;
  CHECK_THROWS_AS(resolve_config("prop1_1", nullptr, huge), std::invalid_argument);
  Overrides not_pow2;
  not_pow2.grid = 48;
  CHECK_THROWS_AS(resolve_config("prop1_1", nullptr, not_pow2), std::invalid_argument);
  Overrides bad_t0;
  bad_t0.t0_list = std::vector<double>{30.0, 20.0};
  CHECK_THROWS_AS(resolve_config("prop1_1", nullptr, bad_t0), std::invalid_argument);

  Overrides two;
  two.dim = 2;
  RunConfig fc = resolve_config("free_checks", nullptr, two);
  CHECK(fc.dim == 2);
  CHECK(fc.grid == 256);
}

TEST_CASE("resolved config round trip") {
  for (const auto& name : scenario_names()) {
    RunConfig c = resolve_config(name, nullptr, {});
    std::string text = nlohmann::json(c).dump();
    RunConfig back = resolve_config(name, nlohmann::json::parse(text), {});
    CHECK(back == c);
    CHECK(nlohmann::json::parse(text).get<RunConfig>() == c);
  }
}

TEST_CASE("field snapshot format") {
  Grid g(2, 8, 3.5);
  Field f = Field::sample(g, [](const std::array<double, 3>& x) { return Complex(x[0], -x[1] / 3.0); });
  f[0] = Complex(1.0, -2.0);
  fs::path dir = scratch("snap");
  fs::create_directories(dir);
  write_snapshot(dir / "f.zsc", f, 12.25);
  std::string bytes = slurp(dir / "f.zsc");
  REQUIRE(bytes.size() == 64 + 16 * g.size());
  CHECK(bytes.substr(0, 5) == "ZSC1 ");
  CHECK(bytes[63] == '\n');
  CHECK(bytes.substr(0, 40).find("dim=2 N=8 L=3.5 t=12.25 kind=c") != std::string::npos);
  // 1.0 and -2.0 as little-endian IEEE-754
  const unsigned char one[8] = {0, 0, 0, 0, 0, 0, 0xF0, 0x3F};
  const unsigned char m2[8] = {0, 0, 0, 0, 0, 0, 0x00, 0xC0};
  CHECK(std::memcmp(bytes.data() + 64, one, 8) == 0);
  CHECK(std::memcmp(bytes.data() + 72, m2, 8) == 0);

  Snapshot s = read_snapshot(dir / "f.zsc");
  CHECK(s.header.dim == 2);
  CHECK(s.header.n == 8);
  CHECK(s.header.box == 3.5);
  CHECK(s.header.time == 12.25);
  CHECK(s.header.kind == Kind::complex);
  CHECK(max_abs_difference(s.field, f) == 0.0);

  Field r = Field::sample(g, [](const std::array<double, 3>& x) { return x[0] * x[1]; }, Kind::real);
  write_snapshot(dir / "r.zsc", r, 1.0 / 3.0);
  Snapshot sr = read_snapshot(dir / "r.zsc");
  CHECK(sr.header.kind == Kind::real);
  CHECK(sr.header.time == 1.0 / 3.0);
  CHECK(max_abs_difference(sr.field, r) == 0.0);

  std::string cut = bytes.substr(0, 100);
  std::ofstream(dir / "cut.zsc", std::ios::binary) << cut;
  CHECK_THROWS(read_snapshot(dir / "cut.zsc"));
  CHECK_THROWS(parse_snapshot_header(std::string(64, ' ')));
  fs::remove_all(dir);
}

TEST_CASE("norm table round trip") {
  std::vector<NormSnapshot> rows(3);
  for (int k = 0; k < 3; ++k) {
    rows[k].time = 2.0 + k / 7.0;
    for (const auto& n : norm_names()) rows[k].set(n, std::exp(-k) / 3.0 + n.size());
  }
  rows[1].set("dev_H2", 0.125);
  std::stringstream ss;
  write_norms_csv(ss, rows);
  std::string header;
  std::getline(std::stringstream(ss.str()), header);
  CHECK(header.rfind("time,L2,L4,Linf,H1,H2,", 0) == 0);
  CHECK(header.substr(header.size() - 7) == ",dev_H2");
  auto back = read_norms_csv(ss);
  REQUIRE(back.size() == 3u);
  for (int k = 0; k < 3; ++k) {
    CHECK(back[k].time == rows[k].time);
    for (const auto& n : norm_names()) CHECK(back[k].get(n) == rows[k].get(n));
  }
  CHECK(back[1].get("dev_H2") == 0.125);
  CHECK_FALSE(back[0].has("dev_H2"));
}

TEST_CASE("end to end small run, determinism and stored trajectories") {
  fs::path a = scratch("run_a"), b = scratch("run_b");
  Overrides fa;
  fa.out = a.string();
  RunConfig ca = resolve_config("prop1_3", small_file(), fa);
  auto oa = run_scenario(ca);
  CHECK(oa.status == 0);
  for (const char* f : {"norms.csv", "rates.json", "iteration.json", "resolved_config.json"}) {
    CHECK(fs::exists(a / f));
  }
  CHECK(oa.check("phi_contraction") != nullptr);
  CHECK(oa.check("construction_agreement") != nullptr);
  nlohmann::json rates = read_json(a / "rates.json");
  CHECK(rates["regularity"]["norms"].contains("u_plus_L1"));
  CHECK(rates["pass"] == true);

  // echoed config re-parses to the same run
  RunConfig echoed = read_json(a / "resolved_config.json").get<RunConfig>();
  CHECK(echoed == ca);

  Overrides fb;
  fb.out = b.string();
  fb.jobs = 2;
  RunConfig cb = resolve_config("prop1_3", small_file(), fb);
  auto ob = run_scenario(cb);
  CHECK(ob.status == 0);
  CHECK(slurp(a / "norms.csv") == slurp(b / "norms.csv"));
  CHECK(slurp(a / "rates.json") == slurp(b / "rates.json"));
  CHECK(slurp(a / "iteration.json") == slurp(b / "iteration.json"));

  // norms recomputed from the stored snapshots match the run's own table
  fs::path traj = a / "traj" / "t0_12";
  REQUIRE(fs::exists(traj / "meta.json"));
  auto stored = trajectory_norms(traj);
  REQUIRE(stored.size() >= 2u);
  std::ifstream csv(a / "norms.csv");
  auto table = read_norms_csv(csv);
  int matched = 0;
  for (const auto& s : stored) {
    for (const auto& r : table) {
      if (std::abs(r.time - s.time) > 1e-9) continue;
      ++matched;
      for (const char* n : {"L2", "H2", "B_H1", "dtB_L2", "dt_L2"}) {
        CHECK(s.get(n) == doctest::Approx(r.get(n)).epsilon(1e-12));
      }
    }
  }
  CHECK(matched == static_cast<int>(stored.size()));
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("guard violation stops the run") {
  fs::path dir = scratch("guard");
  nlohmann::json f = small_file();
  f["box"] = 12.0;
  f["grid"] = 32;
  f["t0_list"] = {20.0};
  f["iterate_t0"] = 20.0;
  Overrides o;
  o.out = dir.string();
  auto out = run_scenario(resolve_config("prop1_3", f, o));
  CHECK(out.status == 3);
  CHECK(out.error.find("guard") != std::string::npos);
  CHECK(read_json(dir / "rates.json")["pass"] == false);
  fs::remove_all(dir);
}

TEST_CASE("command line") {
  fs::path dir = scratch("cli");
  CHECK(run_cli("run prop9") == 2);
  CHECK(run_cli("run prop1_3 --dim 3 --out " + dir.string()) == 2);
  CHECK(run_cli("run prop1_3 --dt fast") != 0);
  CHECK(run_cli("check --dim 2 --out " + (dir / "check").string()) == 0);
  CHECK(fs::exists(dir / "check" / "lemma_report.json"));
  CHECK_FALSE(fs::exists(dir / "check" / "traj"));

  std::ofstream(dir / "small.json") << small_file().dump();
  CHECK(run_cli("run prop1_3 --config " + (dir / "small.json").string() + " --out " +
                (dir / "run").string()) == 0);
  nlohmann::json echoed = read_json(dir / "run" / "resolved_config.json");
  CHECK(echoed["grid"] == 64);
  CHECK(echoed["out"] == (dir / "run").string());
  CHECK(run_cli("norms " + (dir / "run" / "traj" / "t0_12").string() + " --csv " +
                (dir / "n.csv").string()) == 0);
  CHECK(slurp(dir / "n.csv").rfind("time,L2,", 0) == 0);
  fs::remove_all(dir);
}
