#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <vector>

#include "xymetts/grad_engine.hpp"
#include "xymetts/lstm.hpp"
#include "xymetts/xy_chain.hpp"

namespace xymetts {

enum class EvolveMode { imaginary, real };
enum class SolverKind { direct_sr, ntk_trick };

struct EvolverConfig {
  double dtau = 0.01;          // imaginary step, or dt in real mode
  int n_samples = 100;         // per-step batch size
  double reg_shift = 1e-4;     // scaled diagonal regularization epsilon
  double reg_floor = 1e-10;    // absolute diagonal floor delta
  double pinv_cutoff = 1e-12;  // relative singular-value cutoff
  EvolveMode mode = EvolveMode::imaginary;
  SolverKind solver = SolverKind::ntk_trick;
  // Replace sampling by exhaustive |psi|^2-weighted enumeration (tests;
  // N <= 14).
  bool exact_batch = false;

  void validate() const;
};

struct StepRecord {
  double tau = 0.0;       // cumulative imaginary time (or real time)
  double energy = 0.0;    // Re<E_loc>
  double h2 = 0.0;        // <|E_loc|^2>
  double grad_norm = 0.0;
  bool terminated = false;  // step rejected; parameters were not updated
};

using Trajectory = std::vector<StepRecord>;

// Observer hook invoked once per step with the step's batch; used for
// generic diagonal observables.
using BatchObserver = std::function<void(
    int step, const std::vector<SpinConfiguration>&, const Eigen::VectorXd& weights)>;

using StopCondition = std::function<bool(const Trajectory&)>;

// One update theta -> theta - dtau * delta with
// (S + eps diag(S) + delta_floor I) delta = grad solved by a pseudoinverse
// over the real parameter coordinates. Real mode multiplies the update by
// the imaginary unit in the complex-coordinate representation. The returned
// record holds the moments measured on the incoming state with tau = 0;
// evolve() assigns cumulative times.
StepRecord sr_step(LstmWavefunction& w, const HamiltonianModel& model,
                   const EvolverConfig& cfg, Rng& rng);

// Same contract solved in sample space: delta = A^T (A A^T)^+ (2 b) over the
// stacked real/imaginary rows, which agrees with sr_step exactly in the
// zero-regularization pseudoinverse limit.
StepRecord ntk_step(LstmWavefunction& w, const HamiltonianModel& model,
                    const EvolverConfig& cfg, Rng& rng);

// Dispatches on cfg.solver.
StepRecord evolve_step(LstmWavefunction& w, const HamiltonianModel& model,
                       const EvolverConfig& cfg, Rng& rng);

// Iterates steps, recording the pre-update moments of every visited state
// and one final measurement after the last accepted update. Halts when stop
// returns true or a step is rejected; the terminal record is kept.
Trajectory evolve(LstmWavefunction& w, const HamiltonianModel& model,
                  const EvolverConfig& cfg, Rng& rng, int n_steps,
                  const StopCondition& stop = nullptr,
                  const BatchObserver& observer = nullptr);

// Monte Carlo moments of the current state: (Re<E_loc>, <|E_loc|^2>).
// sigma^2 = h2 - energy^2.
std::pair<double, double> estimate_moments(const LstmWavefunction& w,
                                           const HamiltonianModel& model, Rng& rng,
                                           int n_samples);

// Exact-expectation moments from exhaustive enumeration (N <= 14).
std::pair<double, double> estimate_moments_exact(const LstmWavefunction& w,
                                                 const HamiltonianModel& model);

// Exhaustive |psi|^2-weighted batch over all 2^N configurations.
void exhaustive_batch(const LstmWavefunction& w, std::vector<SpinConfiguration>& configs,
                      Eigen::VectorXd& weights);

// delta-theta of a single step without applying it (solver agreement tests).
Eigen::VectorXd solve_update_direction(const LogDerivativeBatch& o_centered,
                                       const Eigen::VectorXcd& e_centered,
                                       const Eigen::VectorXd& weights,
                                       const EvolverConfig& cfg, bool* degenerate);

}  // namespace xymetts
