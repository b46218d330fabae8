#include "xymetts/run_config.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace xymetts {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& field, const std::string& what) {
  throw std::invalid_argument("config field '" + field + "': " + what);
}

void check_keys(const json& obj, const std::string& scope,
                const std::set<std::string>& allowed) {
  for (const auto& item : obj.items()) {
    if (!allowed.count(item.key())) {
      throw std::invalid_argument("unknown config key '" +
                                  (scope.empty() ? item.key() : scope + "." + item.key()) +
                                  "'");
    }
  }
}

template <typename T>
void load_field(const json& obj, const std::string& scope, const char* key, T& out) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception&) {
    fail(scope + "." + key, "wrong type");
  }
}

Boundary parse_boundary(const std::string& s, const std::string& field) {
  if (s == "periodic") return Boundary::periodic;
  if (s == "open") return Boundary::open;
  fail(field, "must be 'periodic' or 'open'");
}

SolverKind parse_solver(const std::string& s, const std::string& field) {
  if (s == "direct_sr") return SolverKind::direct_sr;
  if (s == "ntk_trick") return SolverKind::ntk_trick;
  fail(field, "must be 'direct_sr' or 'ntk_trick'");
}

ClampPolicy parse_clamp(const std::string& s, const std::string& field) {
  if (s == "clamp_completed") return ClampPolicy::clamp_completed;
  if (s == "exclude_beyond_range") return ClampPolicy::exclude_beyond_range;
  fail(field, "must be 'clamp_completed' or 'exclude_beyond_range'");
}

void validate(const RunConfig& c) {
  if (c.model.n_sites < 2) fail("model.n_sites", "must be >= 2");
  if (c.ansatz.d1 < 1) fail("ansatz.d1", "must be >= 1");
  if (c.ansatz.d2 < 1) fail("ansatz.d2", "must be >= 1");
  if (!(c.evolution.dtau > 0.0)) fail("evolution.dtau", "must be > 0");
  if (c.evolution.n_steps < 1) fail("evolution.n_steps", "must be >= 1");
  if (c.evolution.n_samples < 2) fail("evolution.n_samples", "must be >= 2");
  if (c.evolution.reg_shift < 0.0) fail("evolution.reg_shift", "must be >= 0");
  if (!(c.evolution.pinv_cutoff >= 0.0)) fail("evolution.pinv_cutoff", "must be >= 0");
  if (c.pre_evolution.enabled && !(c.pre_evolution.dt > 0.0)) {
    fail("pre_evolution.dt", "must be > 0");
  }
  if (c.pre_evolution.t_pre < 0.0) fail("pre_evolution.t_pre", "must be >= 0");
  if (c.ensemble.n_states < 1) fail("ensemble.n_states", "must be >= 1");
  if (!(c.ensemble.theta > 0.0)) fail("ensemble.theta", "must be > 0");
  if (!(c.ensemble.sigma2_floor > 0.0)) fail("ensemble.sigma2_floor", "must be > 0");
  if (c.smoothing.window < 3 || c.smoothing.window % 2 == 0) {
    fail("smoothing.window", "must be an odd integer >= 3");
  }
  if (c.smoothing.order < 1 || c.smoothing.order >= c.smoothing.window) {
    fail("smoothing.order", "must satisfy 1 <= order < window");
  }
  if (c.output.beta_min < 0.0) fail("output.beta_min", "must be >= 0");
  if (!(c.output.beta_max > c.output.beta_min)) fail("output.beta_max", "must exceed beta_min");
  if (!(c.output.beta_step > 0.0)) fail("output.beta_step", "must be > 0");
  if (c.output.directory.empty()) fail("output.directory", "must be nonempty");
}

}  // namespace

RunConfig parse_run_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("config is not valid JSON: ") + e.what());
  }
  check_keys(root, "", {"model", "ansatz", "evolution", "pre_evolution", "ensemble",
                        "smoothing", "output"});
  RunConfig c;

  if (root.contains("model")) {
    const auto& o = root["model"];
    check_keys(o, "model", {"n_sites", "boundary"});
    load_field(o, "model", "n_sites", c.model.n_sites);
    if (o.contains("boundary")) {
      c.model.boundary = parse_boundary(o["boundary"].get<std::string>(), "model.boundary");
    }
  }
  if (root.contains("ansatz")) {
    const auto& o = root["ansatz"];
    check_keys(o, "ansatz", {"d1", "d2"});
    load_field(o, "ansatz", "d1", c.ansatz.d1);
    load_field(o, "ansatz", "d2", c.ansatz.d2);
  }
  if (root.contains("evolution")) {
    const auto& o = root["evolution"];
    check_keys(o, "evolution",
               {"dtau", "n_steps", "n_samples", "reg_shift", "pinv_cutoff", "solver"});
    load_field(o, "evolution", "dtau", c.evolution.dtau);
    load_field(o, "evolution", "n_steps", c.evolution.n_steps);
    load_field(o, "evolution", "n_samples", c.evolution.n_samples);
    load_field(o, "evolution", "reg_shift", c.evolution.reg_shift);
    load_field(o, "evolution", "pinv_cutoff", c.evolution.pinv_cutoff);
    if (o.contains("solver")) {
      c.evolution.solver = parse_solver(o["solver"].get<std::string>(), "evolution.solver");
    }
  }
  if (root.contains("pre_evolution")) {
    const auto& o = root["pre_evolution"];
    check_keys(o, "pre_evolution", {"enabled", "dt", "t_pre"});
    load_field(o, "pre_evolution", "enabled", c.pre_evolution.enabled);
    load_field(o, "pre_evolution", "dt", c.pre_evolution.dt);
    load_field(o, "pre_evolution", "t_pre", c.pre_evolution.t_pre);
  }
  if (root.contains("ensemble")) {
    const auto& o = root["ensemble"];
    check_keys(o, "ensemble",
               {"n_states", "master_seed", "theta", "sigma2_floor", "clamp_policy"});
    load_field(o, "ensemble", "n_states", c.ensemble.n_states);
    load_field(o, "ensemble", "master_seed", c.ensemble.master_seed);
    load_field(o, "ensemble", "theta", c.ensemble.theta);
    load_field(o, "ensemble", "sigma2_floor", c.ensemble.sigma2_floor);
    if (o.contains("clamp_policy")) {
      c.ensemble.clamp_policy =
          parse_clamp(o["clamp_policy"].get<std::string>(), "ensemble.clamp_policy");
    }
  }
  if (root.contains("smoothing")) {
    const auto& o = root["smoothing"];
    check_keys(o, "smoothing", {"window", "order"});
    load_field(o, "smoothing", "window", c.smoothing.window);
    load_field(o, "smoothing", "order", c.smoothing.order);
  }
  if (root.contains("output")) {
    const auto& o = root["output"];
    check_keys(o, "output", {"beta_min", "beta_max", "beta_step", "directory"});
    load_field(o, "output", "beta_min", c.output.beta_min);
    load_field(o, "output", "beta_max", c.output.beta_max);
    load_field(o, "output", "beta_step", c.output.beta_step);
    load_field(o, "output", "directory", c.output.directory);
  }
  validate(c);
  return c;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str());
}

std::string run_config_to_json(const RunConfig& c) {
  json root;
  root["model"] = {{"n_sites", c.model.n_sites},
                   {"boundary", c.model.boundary == Boundary::periodic ? "periodic" : "open"}};
  root["ansatz"] = {{"d1", c.ansatz.d1}, {"d2", c.ansatz.d2}};
  root["evolution"] = {
      {"dtau", c.evolution.dtau},
      {"n_steps", c.evolution.n_steps},
      {"n_samples", c.evolution.n_samples},
      {"reg_shift", c.evolution.reg_shift},
      {"pinv_cutoff", c.evolution.pinv_cutoff},
      {"solver", c.evolution.solver == SolverKind::direct_sr ? "direct_sr" : "ntk_trick"}};
  root["pre_evolution"] = {{"enabled", c.pre_evolution.enabled},
                           {"dt", c.pre_evolution.dt},
                           {"t_pre", c.pre_evolution.t_pre}};
  root["ensemble"] = {
      {"n_states", c.ensemble.n_states},
      {"master_seed", c.ensemble.master_seed},
      {"theta", c.ensemble.theta},
      {"sigma2_floor", c.ensemble.sigma2_floor},
      {"clamp_policy", c.ensemble.clamp_policy == ClampPolicy::clamp_completed
                           ? "clamp_completed"
                           : "exclude_beyond_range"}};
  root["smoothing"] = {{"window", c.smoothing.window}, {"order", c.smoothing.order}};
  root["output"] = {{"beta_min", c.output.beta_min},
                    {"beta_max", c.output.beta_max},
                    {"beta_step", c.output.beta_step},
                    {"directory", c.output.directory}};
  return root.dump(2);
}

std::uint64_t config_hash(const RunConfig& cfg) {
  // nlohmann::json objects iterate in sorted key order, so dump() is
  // canonical for a given field set.
  const std::string dump = run_config_to_json(cfg);
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : dump) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  return h;
}

HamiltonianModel make_model(const RunConfig& cfg) {
  return HamiltonianModel(cfg.model.n_sites, cfg.model.boundary);
}

EnsembleConfig make_ensemble_config(const RunConfig& cfg) {
  EnsembleConfig e;
  e.n_states = cfg.ensemble.n_states;
  e.master_seed = cfg.ensemble.master_seed;
  e.theta = cfg.ensemble.theta;
  e.clamp_policy = cfg.ensemble.clamp_policy;
  e.ansatz_d1 = cfg.ansatz.d1;
  e.ansatz_d2 = cfg.ansatz.d2;
  e.pre_evolution = cfg.pre_evolution.enabled;
  e.pre_dt = cfg.pre_evolution.dt;
  e.t_pre = cfg.pre_evolution.t_pre;
  e.evolver.dtau = cfg.evolution.dtau;
  e.evolver.n_samples = cfg.evolution.n_samples;
  e.evolver.reg_shift = cfg.evolution.reg_shift;
  e.evolver.pinv_cutoff = cfg.evolution.pinv_cutoff;
  e.evolver.solver = cfg.evolution.solver;
  e.n_steps = cfg.evolution.n_steps;
  e.smoothing.window = cfg.smoothing.window;
  e.smoothing.order = cfg.smoothing.order;
  e.smoothing.sigma2_floor = cfg.ensemble.sigma2_floor;
  e.beta_grid = uniform_grid(cfg.output.beta_min, cfg.output.beta_max, cfg.output.beta_step);
  return e;
}

}  // namespace xymetts
