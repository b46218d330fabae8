#pragma once

#include <cstdint>
#include <string>

#include "xymetts/thermal.hpp"

namespace xymetts {

// Mirror of the configuration file tree. Unknown keys anywhere in the file
// are errors; missing keys fall back to these defaults.
struct RunConfig {
  struct Model {
    int n_sites = 10;
    Boundary boundary = Boundary::periodic;
  } model;

  struct Ansatz {
    int d1 = 10;
    int d2 = 2;
  } ansatz;

  struct Evolution {
    double dtau = 0.01;
    int n_steps = 300;
    int n_samples = 100;
    double reg_shift = 1e-4;
    double pinv_cutoff = 1e-12;
    SolverKind solver = SolverKind::ntk_trick;
  } evolution;

  struct PreEvolution {
    bool enabled = true;
    double dt = 0.01;
    double t_pre = 1.0;
  } pre_evolution;

  struct Ensemble {
    int n_states = 100;
    std::uint64_t master_seed = 1;
    double theta = 10.0;
    double sigma2_floor = 1e-6;
    ClampPolicy clamp_policy = ClampPolicy::clamp_completed;
  } ensemble;

  struct Smoothing {
    int window = 21;
    int order = 3;
  } smoothing;

  struct Output {
    double beta_min = 0.0;
    double beta_max = 3.0;
    double beta_step = 0.05;
    std::string directory = "run_output";
  } output;
};

RunConfig load_run_config(const std::string& path);
RunConfig parse_run_config(const std::string& json_text);
std::string run_config_to_json(const RunConfig& cfg);

// FNV-1a of the canonical (sorted-key) JSON dump: changes iff any field
// changes.
std::uint64_t config_hash(const RunConfig& cfg);

HamiltonianModel make_model(const RunConfig& cfg);
EnsembleConfig make_ensemble_config(const RunConfig& cfg);

}  // namespace xymetts
