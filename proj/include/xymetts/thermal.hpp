#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "xymetts/evolver.hpp"
#include "xymetts/signal_processing.hpp"

namespace xymetts {

struct SmoothingConfig {
  int window = 21;
  int order = 3;
  double sigma2_floor = 1e-6;      // floor applied before dividing in the
                                   // beta(tau) integrand
  int completed_run_length = 10;   // consecutive floored steps that mark a
                                   // member converged
};

enum class TermReason { completed, threshold, spike, step_rejected };

std::string to_string(TermReason r);

// Members that converged (sigma^2 at the floor: ground-state tail) keep
// contributing their final energy beyond their reached beta range;
// exclude_beyond_range drops every member outside its range instead.
enum class ClampPolicy { clamp_completed, exclude_beyond_range };

struct ReparamResult {
  std::vector<double> taus;             // usable (finite, pre-termination) part
  std::vector<double> betas;            // beta(tau) from the integrated identity
  std::vector<double> smoothed_energy;  // aligned with taus
  std::vector<double> smoothed_h2;
  std::size_t usable_len = 0;           // longest strictly-increasing beta prefix
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);
  // Index where sigma^2 first stayed at the floor for completed_run_length
  // consecutive steps (the member counts as converged from here on);
  // npos when the floor never bound.
  std::size_t floored_start = npos;

  bool floored() const { return floored_start != npos; }
};

// Smooths <H> and <H^2>, assembles sigma^2 from the smoothed moments, and
// integrates beta(tau) = -int (1/sigma^2) dE/dtau' by trapezoid from zero.
ReparamResult reparameterize(const Trajectory& traj, const SmoothingConfig& cfg);

// First index whose incoming slope |d beta / d tau| exceeds theta, or
// betas.size() when no step does.
std::size_t threshold_cut(const std::vector<double>& betas,
                          const std::vector<double>& taus, double theta);

struct EnsembleMember {
  int id = 0;
  Trajectory trajectory;
  std::vector<double> taus;
  std::vector<double> betas;
  std::vector<double> smoothed_energy;
  std::vector<double> smoothed_h2;
  std::size_t usable_len = 0;
  TermReason term_reason = TermReason::completed;

  double beta_max() const {
    return usable_len > 0 ? betas[usable_len - 1] : 0.0;
  }
};

// ln Z_i and E_i evaluated on a beta grid, with a per-point contribution
// flag resolved under the clamp policy.
struct WeightTable {
  std::vector<double> log_z;
  std::vector<double> energy;
  std::vector<std::uint8_t> valid;
};

// ln Z_i(beta) = -int_0^beta E_i db' accumulated by trapezoid on a grid
// refined to at most refine_step; E_i(b') comes from the inverted beta(tau)
// map and the smoothed energy. Z_i(0) = 1. When strict is true, grid points
// beyond the member's range throw instead of being flagged invalid.
WeightTable importance_weights(const EnsembleMember& member,
                               const std::vector<double>& grid, ClampPolicy policy,
                               double refine_step = 0.01, bool strict = false);

struct ThermalCurve {
  std::vector<double> betas;
  std::vector<double> energy;
  std::vector<int> n_contributing;
  std::vector<std::uint8_t> defined;  // 0 where no member contributes
  std::vector<double> exact;          // optional reference, may be empty
};

ThermalCurve assemble_curve(const std::vector<WeightTable>& tables,
                            const std::vector<double>& grid);

ThermalCurve thermal_average(const std::vector<EnsembleMember>& members,
                             const std::vector<double>& grid, ClampPolicy policy,
                             double refine_step = 0.01);

// Weighted ensemble average of a per-member grid observable; energy is the
// wired-in case, the getter makes any reparameterized diagonal observable
// averageable the same way.
ThermalCurve thermal_average_observable(
    const std::vector<EnsembleMember>& members, const std::vector<double>& grid,
    ClampPolicy policy,
    const std::vector<std::vector<double>>& observable_on_grid,
    double refine_step = 0.01);

// epsilon = int_1^2.5 |E_est - E_exact| d beta, trapezoid on the curve grid
// restricted to [1, 2.5]; undefined points are skipped.
double error_metric(const ThermalCurve& curve,
                    const std::vector<double>& exact_on_grid);

struct EnsembleConfig {
  int n_states = 100;
  std::uint64_t master_seed = 1;
  double theta = 10.0;
  ClampPolicy clamp_policy = ClampPolicy::clamp_completed;

  int ansatz_d1 = 10;
  int ansatz_d2 = 2;

  bool pre_evolution = true;
  double pre_dt = 0.01;
  double t_pre = 1.0;

  EvolverConfig evolver;  // imaginary-time settings
  int n_steps = 300;
  // Online convergence stop: raw sigma^2 below this for
  // smoothing.completed_run_length consecutive records ends the evolution.
  double online_sigma2_stop = 1e-4;

  SmoothingConfig smoothing;
  std::vector<double> beta_grid;
  double weight_refine_step = 0.01;

  void validate() const;
};

struct EnsembleResult {
  std::vector<EnsembleMember> members;
  std::vector<WeightTable> tables;
  ThermalCurve curve;
};

// Fully deterministic given the seed: per-member streams come from
// member_seed(master_seed, id), so extending n_states reuses earlier members
// bit for bit. final_state, when given, receives the parameters after the
// last accepted update.
EnsembleMember evolve_member(const HamiltonianModel& model, const EnsembleConfig& cfg,
                             int member_id, LstmWavefunction* final_state = nullptr);

// Evolves all members (optionally on a worker pool; identical output for any
// worker count) and assembles the weighted thermal curve.
EnsembleResult run_ensemble(const HamiltonianModel& model, const EnsembleConfig& cfg,
                            int n_workers = 1);

std::vector<double> uniform_grid(double lo, double hi, double step);

}  // namespace xymetts
