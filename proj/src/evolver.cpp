#include "xymetts/evolver.hpp"

#include <cmath>
#include <stdexcept>

namespace xymetts {

namespace {

constexpr Complex kImaginaryUnit{0.0, 1.0};

// Symmetric PSD pseudoinverse solve with a relative eigenvalue cutoff.
// Returns the retained rank.
int pinv_solve(const Eigen::MatrixXd& m, const Eigen::VectorXd& rhs, double cutoff,
               Eigen::VectorXd& x) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  const Eigen::VectorXd& lam = es.eigenvalues();
  const double lmax = lam.size() > 0 ? lam(lam.size() - 1) : 0.0;
  if (!(lmax > 0.0)) return 0;
  const double thresh = cutoff * lmax;
  Eigen::VectorXd proj = es.eigenvectors().transpose() * rhs;
  int rank = 0;
  for (Eigen::Index i = 0; i < lam.size(); ++i) {
    if (lam(i) > thresh) {
      proj(i) /= lam(i);
      ++rank;
    } else {
      proj(i) = 0.0;
    }
  }
  x.noalias() = es.eigenvectors() * proj;
  return rank;
}

struct StepBatch {
  std::vector<SpinConfiguration> configs;
  Eigen::VectorXd weights;
  Eigen::VectorXcd e_loc;
  double energy = 0.0;
  double h2 = 0.0;
  bool finite = true;
};

StepBatch measure_batch(const LstmWavefunction& w, const HamiltonianModel& model,
                        const EvolverConfig& cfg, Rng& rng) {
  StepBatch b;
  if (cfg.exact_batch) {
    exhaustive_batch(w, b.configs, b.weights);
  } else {
    b.configs = sample(w, rng, cfg.n_samples);
    b.weights = uniform_weights(cfg.n_samples);
  }
  const Eigen::Index m = static_cast<Eigen::Index>(b.configs.size());
  b.e_loc.resize(m);
  LstmScratch scratch;
  scratch.resize(w);
  const LogPsiFn logpsi = [&](const SpinConfiguration& x) {
    return log_amplitude(w, x, scratch);
  };
  for (Eigen::Index a = 0; a < m; ++a) {
    b.e_loc(a) = local_energy(model, logpsi, b.configs[static_cast<std::size_t>(a)]);
  }
  if (!b.e_loc.allFinite()) {
    b.finite = false;
    return b;
  }
  b.energy = (b.weights.cast<Complex>().cwiseProduct(b.e_loc)).sum().real();
  b.h2 = b.weights.dot(b.e_loc.cwiseAbs2());
  return b;
}

}  // namespace

void EvolverConfig::validate() const {
  if (!(dtau > 0.0)) throw std::invalid_argument("EvolverConfig: dtau must be > 0");
  if (n_samples < 2 && !exact_batch) {
    throw std::invalid_argument("EvolverConfig: n_samples must be >= 2");
  }
  if (reg_shift < 0.0 || reg_floor < 0.0) {
    throw std::invalid_argument("EvolverConfig: regularization must be nonnegative");
  }
}

void exhaustive_batch(const LstmWavefunction& w, std::vector<SpinConfiguration>& configs,
                      Eigen::VectorXd& weights) {
  if (w.n_sites > 14) throw std::invalid_argument("exhaustive_batch: N too large");
  const std::uint64_t dim = 1ull << w.n_sites;
  configs.clear();
  configs.reserve(dim);
  Eigen::VectorXd logw(static_cast<Eigen::Index>(dim));
  LstmScratch scratch;
  scratch.resize(w);
  for (std::uint64_t idx = 0; idx < dim; ++idx) {
    configs.push_back(config_from_index(idx, w.n_sites));
    logw(static_cast<Eigen::Index>(idx)) =
        2.0 * log_amplitude(w, configs.back(), scratch).real();
  }
  logw.array() -= logw.maxCoeff();
  weights = logw.array().exp();
  weights /= weights.sum();
}

Eigen::VectorXd solve_update_direction(const LogDerivativeBatch& o_centered,
                                       const Eigen::VectorXcd& e_centered,
                                       const Eigen::VectorXd& weights,
                                       const EvolverConfig& cfg, bool* degenerate) {
  const Eigen::Index m = o_centered.o.rows();
  const Eigen::Index p2 = o_centered.o.cols();
  // Weighted least-squares system over real coordinates: rows are the real
  // and imaginary parts of sqrt(w_a) * O_a, the target is sqrt(w_a) * e_a.
  Eigen::MatrixXd a(2 * m, p2);
  Eigen::VectorXd b(2 * m);
  const Eigen::VectorXd sw = weights.cwiseSqrt();
  a.topRows(m) = sw.asDiagonal() * o_centered.o.real();
  a.bottomRows(m) = sw.asDiagonal() * o_centered.o.imag();
  b.head(m) = sw.cwiseProduct(e_centered.real());
  b.tail(m) = sw.cwiseProduct(e_centered.imag());

  Eigen::VectorXd delta;
  int rank = 0;
  if (cfg.solver == SolverKind::direct_sr) {
    Eigen::MatrixXd s = a.transpose() * a;
    const Eigen::VectorXd diag = s.diagonal();
    s.diagonal() += cfg.reg_shift * diag;
    s.diagonal().array() += cfg.reg_floor;
    const Eigen::VectorXd grad = 2.0 * (a.transpose() * b);
    rank = pinv_solve(s, grad, cfg.pinv_cutoff, delta);
  } else {
    Eigen::MatrixXd k = a * a.transpose();
    const Eigen::VectorXd diag = k.diagonal();
    k.diagonal() += cfg.reg_shift * diag;
    k.diagonal().array() += cfg.reg_floor;
    Eigen::VectorXd y;
    rank = pinv_solve(k, Eigen::VectorXd(2.0 * b), cfg.pinv_cutoff, y);
    delta.noalias() = a.transpose() * y;
  }
  if (degenerate != nullptr) *degenerate = (rank < 1);
  if (rank < 1) delta = Eigen::VectorXd::Zero(p2);
  return delta;
}

namespace {

StepRecord step_impl(LstmWavefunction& w, const HamiltonianModel& model,
                     const EvolverConfig& cfg, Rng& rng, int step_index = 0,
                     const BatchObserver& observer = nullptr) {
  cfg.validate();
  StepRecord rec;
  StepBatch batch;
  try {
    batch = measure_batch(w, model, cfg, rng);
  } catch (const std::runtime_error&) {
    rec.terminated = true;  // sampling failure counts as rejection
    return rec;
  }
  if (!batch.finite) {
    rec.terminated = true;
    return rec;
  }
  rec.energy = batch.energy;
  rec.h2 = batch.h2;
  if (observer) observer(step_index, batch.configs, batch.weights);

  LogDerivativeBatch o = log_derivatives(w, batch.configs);
  Eigen::VectorXcd e = batch.e_loc;
  center(o, e, batch.weights);
  if (!o.o.allFinite()) {
    rec.terminated = true;
    return rec;
  }
  rec.grad_norm = energy_gradient(o, e, batch.weights).norm();

  bool degenerate = false;
  const Eigen::VectorXd delta = solve_update_direction(o, e, batch.weights, cfg, &degenerate);
  if (degenerate) {
    rec.terminated = true;
    return rec;
  }
  const Complex factor = (cfg.mode == EvolveMode::imaginary)
                             ? Complex(cfg.dtau, 0.0)
                             : kImaginaryUnit * cfg.dtau;
  w.add_scaled_update(delta, factor);
  return rec;
}

}  // namespace

StepRecord sr_step(LstmWavefunction& w, const HamiltonianModel& model,
                   const EvolverConfig& cfg, Rng& rng) {
  if (cfg.solver != SolverKind::direct_sr) {
    throw std::invalid_argument("sr_step: cfg.solver must be direct_sr");
  }
  return step_impl(w, model, cfg, rng);
}

StepRecord ntk_step(LstmWavefunction& w, const HamiltonianModel& model,
                    const EvolverConfig& cfg, Rng& rng) {
  if (cfg.solver != SolverKind::ntk_trick) {
    throw std::invalid_argument("ntk_step: cfg.solver must be ntk_trick");
  }
  return step_impl(w, model, cfg, rng);
}

StepRecord evolve_step(LstmWavefunction& w, const HamiltonianModel& model,
                       const EvolverConfig& cfg, Rng& rng) {
  return step_impl(w, model, cfg, rng);
}

Trajectory evolve(LstmWavefunction& w, const HamiltonianModel& model,
                  const EvolverConfig& cfg, Rng& rng, int n_steps,
                  const StopCondition& stop, const BatchObserver& observer) {
  cfg.validate();
  Trajectory traj;
  if (n_steps <= 0) return traj;
  traj.reserve(static_cast<std::size_t>(n_steps) + 1);

  bool terminated = false;
  bool stopped = false;
  int k = 0;
  for (; k < n_steps; ++k) {
    StepRecord rec = step_impl(w, model, cfg, rng, k, observer);
    rec.tau = k * cfg.dtau;
    traj.push_back(rec);
    if (rec.terminated) {
      terminated = true;
      break;
    }
    if (stop && stop(traj)) {
      stopped = true;
      break;
    }
  }
  if (!terminated && !stopped && k == n_steps) {
    // Moments of the final state, one step past the last record.
    StepRecord fin;
    fin.tau = n_steps * cfg.dtau;
    double energy = 0.0, h2 = 0.0;
    if (cfg.exact_batch) {
      std::tie(energy, h2) = estimate_moments_exact(w, model);
    } else {
      std::tie(energy, h2) = estimate_moments(w, model, rng, cfg.n_samples);
    }
    fin.energy = energy;
    fin.h2 = h2;
    traj.push_back(fin);
  }
  return traj;
}

std::pair<double, double> estimate_moments(const LstmWavefunction& w,
                                           const HamiltonianModel& model, Rng& rng,
                                           int n_samples) {
  EvolverConfig cfg;
  cfg.n_samples = n_samples;
  const StepBatch b = measure_batch(w, model, cfg, rng);
  if (!b.finite) throw std::runtime_error("estimate_moments: non-finite local energy");
  return {b.energy, b.h2};
}

std::pair<double, double> estimate_moments_exact(const LstmWavefunction& w,
                                                 const HamiltonianModel& model) {
  EvolverConfig cfg;
  cfg.exact_batch = true;
  Rng rng(0);
  const StepBatch b = measure_batch(w, model, cfg, rng);
  if (!b.finite) throw std::runtime_error("estimate_moments_exact: non-finite local energy");
  return {b.energy, b.h2};
}

}  // namespace xymetts
