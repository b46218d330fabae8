#include <atomic>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"
#include "xymetts/artifacts.hpp"
#include "xymetts/exact_oracle.hpp"
#include "xymetts/run_config.hpp"

namespace fs = std::filesystem;
using namespace xymetts;

namespace {

constexpr const char* kVersion = "xymetts 1.0.0";

int worker_count(std::optional<int> flag_value) {
  if (flag_value && *flag_value > 0) return *flag_value;
  if (const char* env = std::getenv("XYMETTS_WORKERS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return 1;
}

std::string member_path(const fs::path& dir, int id) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "member_%04d", id);
  return (dir / (std::string(buf) + ".tsv")).string();
}

std::string trajectory_path(const fs::path& dir, int id) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "member_%04d", id);
  return (dir / (std::string(buf) + ".traj.tsv")).string();
}

std::string snapshot_path(const fs::path& dir, int id) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "member_%04d", id);
  return (dir / (std::string(buf) + ".wf")).string();
}

int cmd_run(const std::string& config_path, std::optional<int> workers_flag,
            const std::map<std::string, std::string>& overrides) {
  RunConfig cfg = load_run_config(config_path);
  for (const auto& [key, value] : overrides) {
    if (key == "n_states") cfg.ensemble.n_states = std::stoi(value);
    else if (key == "master_seed") cfg.ensemble.master_seed = std::stoull(value);
    else if (key == "theta") cfg.ensemble.theta = std::stod(value);
    else if (key == "n_steps") cfg.evolution.n_steps = std::stoi(value);
    else if (key == "n_samples") cfg.evolution.n_samples = std::stoi(value);
    else if (key == "directory") cfg.output.directory = value;
    else if (key == "pre_evolution") cfg.pre_evolution.enabled = (value == "on");
  }

  const HamiltonianModel model = make_model(cfg);
  const EnsembleConfig ecfg = make_ensemble_config(cfg);
  ecfg.validate();
  const std::uint64_t hash = config_hash(cfg);
  const int workers = worker_count(workers_flag);

  const fs::path dir(cfg.output.directory);
  const fs::path members_dir = dir / "members";
  fs::create_directories(members_dir);

  const auto t0 = std::chrono::steady_clock::now();
  std::vector<WeightTable> tables(static_cast<std::size_t>(ecfg.n_states));
  std::vector<std::string> reasons(static_cast<std::size_t>(ecfg.n_states));
  std::vector<int> fresh_ids;
  // Resume: members whose artifacts carry the same config hash are reused.
  for (int id = 0; id < ecfg.n_states; ++id) {
    const std::string mpath = member_path(members_dir, id);
    if (fs::exists(mpath)) {
      try {
        MemberArtifact art = read_member(mpath);
        if (art.config_hash == hash && art.id == id && art.grid == ecfg.beta_grid) {
          tables[static_cast<std::size_t>(id)] = art.table;
          reasons[static_cast<std::size_t>(id)] = term_reason_token(art.term_reason);
          continue;
        }
      } catch (const std::exception&) {
        // fall through and recompute
      }
    }
    fresh_ids.push_back(id);
  }

  if (!fresh_ids.empty()) {
    EnsembleConfig partial = ecfg;
    // evolve_member is keyed by (master_seed, id), so evolving an id subset
    // reproduces exactly the members a full run would produce.
    std::atomic<std::size_t> next{0};
    auto work = [&]() {
      while (true) {
        const std::size_t slot = next.fetch_add(1);
        if (slot >= fresh_ids.size()) break;
        const int id = fresh_ids[slot];
        LstmWavefunction final_state;
        EnsembleMember m = evolve_member(model, partial, id, &final_state);
        WeightTable t =
            importance_weights(m, ecfg.beta_grid, ecfg.clamp_policy, ecfg.weight_refine_step);
        MemberArtifact art;
        art.id = id;
        art.config_hash = hash;
        art.term_reason = m.term_reason;
        art.usable_len = m.usable_len;
        art.taus = m.taus;
        art.betas = m.betas;
        art.smoothed_energy = m.smoothed_energy;
        art.smoothed_h2 = m.smoothed_h2;
        art.grid = ecfg.beta_grid;
        art.table = t;
        write_trajectory(trajectory_path(members_dir, id), m.trajectory);
        write_member(member_path(members_dir, id), art);
        write_wavefunction(snapshot_path(members_dir, id), final_state);
        tables[static_cast<std::size_t>(id)] = std::move(t);
        reasons[static_cast<std::size_t>(id)] = term_reason_token(m.term_reason);
      }
    };
    std::vector<std::thread> pool;
    for (int t = 0; t < workers; ++t) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }

  bool any_usable = false;
  for (const auto& t : tables) {
    for (auto v : t.valid) {
      if (v) { any_usable = true; break; }
    }
  }
  std::map<std::string, int> tally;
  for (const auto& r : reasons) ++tally[r];
  if (!any_usable) {
    std::cerr << "run failed: no usable members;";
    for (const auto& [r, n] : tally) std::cerr << " " << r << "=" << n;
    std::cerr << "\n";
    return 1;
  }

  ThermalCurve curve = assemble_curve(tables, ecfg.beta_grid);
  curve.exact.reserve(ecfg.beta_grid.size());
  for (double b : ecfg.beta_grid) {
    curve.exact.push_back(free_fermion_energy(model.n_sites, b, model.boundary));
  }
  write_curve((dir / "curve.tsv").string(), curve, model.n_sites, model.boundary);

  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  nlohmann::json manifest;
  manifest["version"] = kVersion;
  manifest["config"] = nlohmann::json::parse(run_config_to_json(cfg));
  char hashbuf[32];
  std::snprintf(hashbuf, sizeof(hashbuf), "%016llx",
                static_cast<unsigned long long>(hash));
  manifest["config_hash"] = hashbuf;
  manifest["term_reason_tally"] = tally;
  manifest["wall_time_seconds"] = wall;
  manifest["workers"] = workers;
  manifest["recomputed_members"] = fresh_ids.size();
  nlohmann::json seeds = nlohmann::json::array();
  for (int id = 0; id < ecfg.n_states; ++id) {
    seeds.push_back(member_seed(ecfg.master_seed, static_cast<std::uint64_t>(id)));
  }
  manifest["member_seeds"] = seeds;
  std::ofstream mf(dir / "manifest.json");
  mf << manifest.dump(2) << "\n";

  std::cout << "wrote " << (dir / "curve.tsv").string() << " (" << ecfg.n_states
            << " members, " << fresh_ids.size() << " recomputed, " << wall << " s)\n";
  return 0;
}

int cmd_oracle(int n_sites, const std::string& boundary_str, double beta_min,
               double beta_max, double beta_step, const std::string& method,
               bool cross_check) {
  const Boundary boundary = boundary_str == "open" ? Boundary::open : Boundary::periodic;
  const std::vector<double> grid = uniform_grid(beta_min, beta_max, beta_step);
  std::cout << "beta\tenergy_exact\n";
  double max_dev = 0.0;
  for (double b : grid) {
    const double eff = method == "ed" ? ed_energy(n_sites, b, boundary)
                                      : free_fermion_energy(n_sites, b, boundary);
    std::cout << format_double(b) << '\t' << format_double(eff) << '\n';
    if (cross_check) {
      const double ed = ed_energy(n_sites, b, boundary);
      max_dev = std::max(max_dev, std::abs(eff - ed));
    }
  }
  if (cross_check) {
    std::cerr << "max |free_fermion - ed| = " << max_dev << "\n";
    if (max_dev > 1e-10) return 1;
  }
  return 0;
}

int cmd_compare(const std::string& curve_path, std::optional<int> n_sites_flag,
                std::optional<std::string> boundary_flag) {
  const CurveFile cf = read_curve(curve_path);
  const int n = n_sites_flag.value_or(cf.n_sites);
  const Boundary boundary =
      boundary_flag ? (*boundary_flag == "open" ? Boundary::open : Boundary::periodic)
                    : cf.boundary;

  std::vector<double> exact;
  exact.reserve(cf.curve.betas.size());
  for (double b : cf.curve.betas) exact.push_back(free_fermion_energy(n, b, boundary));

  double max_dev = 0.0;
  int min_contrib = cf.curve.n_contributing.empty() ? 0 : cf.curve.n_contributing[0];
  std::cout << "beta\tenergy_estimate\tenergy_exact\tabs_error\tn_contributing\n";
  for (std::size_t i = 0; i < cf.curve.betas.size(); ++i) {
    const double dev = std::abs(cf.curve.energy[i] - exact[i]);
    max_dev = std::max(max_dev, dev);
    min_contrib = std::min(min_contrib, cf.curve.n_contributing[i]);
    std::cout << format_double(cf.curve.betas[i]) << '\t'
              << format_double(cf.curve.energy[i]) << '\t' << format_double(exact[i])
              << '\t' << format_double(dev) << '\t' << cf.curve.n_contributing[i] << '\n';
  }
  const double eps = error_metric(cf.curve, exact);
  std::cout << "# epsilon_integral_1_to_2.5 " << format_double(eps) << "\n";
  std::cout << "# max_abs_error " << format_double(max_dev) << "\n";
  std::cout << "# min_n_contributing " << min_contrib << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Finite-temperature XY-chain observables from ensembles of "
               "imaginary-time-evolved LSTM wavefunctions"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  // run
  auto* run = app.add_subcommand("run", "run a thermal ensemble from a config file");
  std::string config_path;
  run->add_option("-c,--config", config_path, "JSON config file")->required();
  std::optional<int> workers;
  run->add_option("-j,--workers", workers,
                  "worker threads (default: XYMETTS_WORKERS or 1)");
  std::optional<int> ov_n_states, ov_n_steps, ov_n_samples;
  std::optional<std::string> ov_seed, ov_theta, ov_dir;
  bool ov_pre_on = false, ov_pre_off = false;
  run->add_option("--n-states", ov_n_states, "override ensemble.n_states");
  run->add_option("--master-seed", ov_seed, "override ensemble.master_seed");
  run->add_option("--theta", ov_theta, "override ensemble.theta");
  run->add_option("--n-steps", ov_n_steps, "override evolution.n_steps");
  run->add_option("--n-samples", ov_n_samples, "override evolution.n_samples");
  run->add_option("--directory", ov_dir, "override output.directory");
  run->add_flag("--pre-evolution", ov_pre_on, "force real-time pre-evolution on");
  run->add_flag("--no-pre-evolution", ov_pre_off, "force real-time pre-evolution off");

  // oracle
  auto* oracle = app.add_subcommand("oracle", "exact thermal energy table");
  int o_n = 20;
  std::string o_boundary = "periodic", o_method = "free_fermion";
  double o_bmin = 0.0, o_bmax = 3.0, o_bstep = 0.05;
  bool o_cross = false;
  oracle->add_option("-n,--n-sites", o_n, "chain length")->required();
  oracle->add_option("--boundary", o_boundary, "periodic|open")
      ->check(CLI::IsMember({"periodic", "open"}));
  oracle->add_option("--beta-min", o_bmin, "grid start");
  oracle->add_option("--beta-max", o_bmax, "grid end");
  oracle->add_option("--beta-step", o_bstep, "grid spacing");
  oracle->add_option("--method", o_method, "free_fermion|ed")
      ->check(CLI::IsMember({"free_fermion", "ed"}));
  oracle->add_flag("--cross-check", o_cross,
                   "verify free-fermion against ED (nonzero exit beyond 1e-10)");

  // compare
  auto* compare = app.add_subcommand("compare", "compare a curve file to the oracle");
  std::string c_curve;
  std::optional<int> c_n;
  std::optional<std::string> c_boundary;
  compare->add_option("--curve", c_curve, "curve file from 'run'")->required();
  compare->add_option("-n,--n-sites", c_n, "override chain length");
  compare->add_option("--boundary", c_boundary, "override boundary")
      ->check(CLI::IsMember({"periodic", "open"}));

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      std::map<std::string, std::string> overrides;
      if (ov_n_states) overrides["n_states"] = std::to_string(*ov_n_states);
      if (ov_seed) overrides["master_seed"] = *ov_seed;
      if (ov_theta) overrides["theta"] = *ov_theta;
      if (ov_n_steps) overrides["n_steps"] = std::to_string(*ov_n_steps);
      if (ov_n_samples) overrides["n_samples"] = std::to_string(*ov_n_samples);
      if (ov_dir) overrides["directory"] = *ov_dir;
      if (ov_pre_on) overrides["pre_evolution"] = "on";
      if (ov_pre_off) overrides["pre_evolution"] = "off";
      return cmd_run(config_path, workers, overrides);
    }
    if (oracle->parsed()) {
      return cmd_oracle(o_n, o_boundary, o_bmin, o_bmax, o_bstep, o_method, o_cross);
    }
    if (compare->parsed()) {
      return cmd_compare(c_curve, c_n, c_boundary);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
