#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "zscatter/config.hpp"
#include "zscatter/harness.hpp"
#include "zscatter/io.hpp"

namespace {

// exit codes: 0 all asserted checks pass, 1 a check failed, 2 bad usage or
// configuration, 3 the run could not proceed (guard violation)
constexpr int kUsage = 2;

int run_command(const std::string& scenario, const zscatter::Overrides& flags,
                const std::string& config_path, bool quiet) {
  nlohmann::json file;
  if (!config_path.empty()) file = zscatter::read_json(config_path);
  zscatter::RunConfig cfg = zscatter::resolve_config(scenario, file, flags);
  auto outcome = zscatter::run_scenario(cfg, quiet ? nullptr : &std::cerr);
  std::cout << (outcome.status == 0 ? "PASS" : "FAIL") << " " << cfg.scenario << " -> "
            << outcome.out_dir.string() << "\n";
  return outcome.status;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"zscatter: wave operator laboratory for the Zakharov system"};
  app.require_subcommand(1);
  bool quiet = false;
  app.add_flag("-q,--quiet", quiet, "no progress log on stderr");

  std::string scenario, config_path;
  zscatter::Overrides flags;
  int dim = 0, grid = 0, jobs = 0;
  double box = 0, dt = 0, T = 0, amp = 0;
  std::vector<double> t0;
  std::string out;

  auto* run = app.add_subcommand("run", "run a scenario preset");
  run->add_option("scenario", scenario, "prop1_1, prop1_1_weighted, prop1_2, prop1_2_part2, prop1_3, free_checks")
      ->required();
  auto* o_dim = run->add_option("--dim", dim, "space dimension");
  auto* o_grid = run->add_option("--grid", grid, "points per axis (power of two)");
  auto* o_box = run->add_option("--box", box, "box half-width L, the box is [-L, L)^dim");
  auto* o_dt = run->add_option("--dt", dt, "time step");
  auto* o_T = run->add_option("--T", T, "left end of the time interval");
  auto* o_t0 = run->add_option("--t0", t0, "increasing list of t0 values")->delimiter(',');
  auto* o_amp = run->add_option("--amp", amp, "amplitude of u+");
  auto* o_out = run->add_option("--out", out, "output directory");
  auto* o_jobs = run->add_option("--jobs", jobs, "concurrent t0 branches");
  run->add_option("--config", config_path, "JSON config file (flags take precedence)");

  std::string check_out = "zscatter_check";
  int check_dim = 3;
  auto* check = app.add_subcommand("check", "free_checks scenario only, no integration");
  check->add_option("--dim", check_dim, "space dimension")->check(CLI::IsMember({2, 3}));
  check->add_option("--out", check_out, "output directory");

  std::string traj_dir, csv_out;
  auto* norms = app.add_subcommand("norms", "norm table of a stored trajectory directory");
  norms->add_option("dir", traj_dir, "traj/<name> directory with meta.json")->required();
  norms->add_option("--csv", csv_out, "write here instead of stdout");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      if (*o_dim) flags.dim = dim;
      if (*o_grid) flags.grid = grid;
      if (*o_box) flags.box = box;
      if (*o_dt) flags.dt = dt;
      if (*o_T) flags.T = T;
      if (*o_t0) flags.t0_list = t0;
      if (*o_amp) flags.amp = amp;
      if (*o_out) flags.out = out;
      if (*o_jobs) flags.jobs = jobs;
      return run_command(scenario, flags, config_path, quiet);
    }
    if (*check) {
      zscatter::Overrides f;
      f.dim = check_dim;
      f.out = check_out;
      return run_command("free_checks", f, "", quiet);
    }
    if (*norms) {
      auto rows = zscatter::trajectory_norms(traj_dir);
      if (csv_out.empty()) {
        zscatter::write_norms_csv(std::cout, rows);
      } else {
        zscatter::write_norms_csv(std::filesystem::path(csv_out), rows);
      }
      return 0;
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "zscatter: " << e.what() << "\n";
    return kUsage;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "zscatter: config: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "zscatter: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
