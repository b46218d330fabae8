#include "xymetts/thermal.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>
#include <thread>

namespace xymetts {

std::string to_string(TermReason r) {
  switch (r) {
    case TermReason::completed: return "completed";
    case TermReason::threshold: return "threshold";
    case TermReason::spike: return "spike";
    case TermReason::step_rejected: return "step_rejected";
  }
  return "unknown";
}

ReparamResult reparameterize(const Trajectory& traj, const SmoothingConfig& cfg) {
  // Usable records: everything before the first rejected or non-finite one.
  std::size_t len = 0;
  for (const auto& r : traj) {
    if (r.terminated || !std::isfinite(r.energy) || !std::isfinite(r.h2)) break;
    ++len;
  }
  if (len < static_cast<std::size_t>(cfg.window)) {
    throw std::invalid_argument("reparameterize: trajectory length " +
                                std::to_string(len) + " shorter than smoothing window " +
                                std::to_string(cfg.window));
  }
  ReparamResult res;
  res.taus.resize(len);
  std::vector<double> e_raw(len), h2_raw(len);
  for (std::size_t k = 0; k < len; ++k) {
    res.taus[k] = traj[k].tau;
    e_raw[k] = traj[k].energy;
    h2_raw[k] = traj[k].h2;
  }
  res.smoothed_energy = savgol(e_raw, cfg.window, cfg.order);
  res.smoothed_h2 = savgol(h2_raw, cfg.window, cfg.order);
  const std::vector<double> dedt =
      derivative_savgol(e_raw, res.taus, cfg.window, cfg.order);

  std::vector<double> integrand(len);
  int floored_run = 0;
  for (std::size_t k = 0; k < len; ++k) {
    const double var = res.smoothed_h2[k] -
                       res.smoothed_energy[k] * res.smoothed_energy[k];
    if (var < cfg.sigma2_floor) {
      ++floored_run;
      if (floored_run >= cfg.completed_run_length && res.floored_start == ReparamResult::npos) {
        res.floored_start = k + 1 - static_cast<std::size_t>(cfg.completed_run_length);
      }
    } else {
      floored_run = 0;
    }
    integrand[k] = -dedt[k] / std::max(var, cfg.sigma2_floor);
  }
  res.betas.assign(len, 0.0);
  for (std::size_t k = 1; k < len; ++k) {
    res.betas[k] = res.betas[k - 1] + 0.5 * (integrand[k] + integrand[k - 1]) *
                                          (res.taus[k] - res.taus[k - 1]);
  }
  res.usable_len = monotone_prefix(res.betas);
  return res;
}

std::size_t threshold_cut(const std::vector<double>& betas,
                          const std::vector<double>& taus, double theta) {
  if (betas.size() != taus.size()) {
    throw std::invalid_argument("threshold_cut: betas/taus size mismatch");
  }
  for (std::size_t k = 1; k < betas.size(); ++k) {
    const double slope = (betas[k] - betas[k - 1]) / (taus[k] - taus[k - 1]);
    if (std::abs(slope) > theta) return k;
  }
  return betas.size();
}

namespace {

// E_i as a function of beta over the member's usable knots.
struct MemberEnergyMap {
  PchipInterpolant beta_to_tau;
  PchipInterpolant tau_to_energy;
  double beta_max = 0.0;
  double final_energy = 0.0;
  bool single_point = false;

  explicit MemberEnergyMap(const EnsembleMember& m) {
    const std::size_t n = m.usable_len;
    if (n == 0) throw std::invalid_argument("member has no usable data");
    beta_max = m.betas[n - 1];
    final_energy = m.smoothed_energy[n - 1];
    if (n == 1) {
      single_point = true;
      return;
    }
    std::vector<double> b(m.betas.begin(), m.betas.begin() + static_cast<long>(n));
    std::vector<double> t(m.taus.begin(), m.taus.begin() + static_cast<long>(n));
    std::vector<double> e(m.smoothed_energy.begin(),
                          m.smoothed_energy.begin() + static_cast<long>(n));
    beta_to_tau = invert_map(t, b);
    tau_to_energy = PchipInterpolant(t, e);
  }

  double energy_at(double beta) const {
    if (single_point || beta >= beta_max) return final_energy;
    return tau_to_energy(beta_to_tau(beta));
  }
};

}  // namespace

WeightTable importance_weights(const EnsembleMember& member,
                               const std::vector<double>& grid, ClampPolicy policy,
                               double refine_step, bool strict) {
  if (member.usable_len == 0) {
    if (strict) throw std::out_of_range("importance_weights: member has no usable data");
    WeightTable t;
    t.log_z.assign(grid.size(), 0.0);
    t.energy.assign(grid.size(), 0.0);
    t.valid.assign(grid.size(), 0);
    return t;
  }
  const MemberEnergyMap emap(member);
  const bool may_clamp =
      policy == ClampPolicy::clamp_completed && member.term_reason == TermReason::completed;

  WeightTable t;
  t.log_z.assign(grid.size(), 0.0);
  t.energy.assign(grid.size(), 0.0);
  t.valid.assign(grid.size(), 0);

  double lnz = 0.0;
  double prev_beta = 0.0;
  double prev_e = emap.energy_at(0.0);
  for (std::size_t gi = 0; gi < grid.size(); ++gi) {
    const double target = grid[gi];
    if (target < prev_beta) {
      throw std::invalid_argument("importance_weights: grid must be increasing from 0");
    }
    const bool in_range = target <= emap.beta_max + 1e-12;
    if (!in_range && strict && !may_clamp) {
      throw std::out_of_range("importance_weights: grid point " + std::to_string(target) +
                              " beyond member range " + std::to_string(emap.beta_max));
    }
    // Advance the trapezoid accumulator to `target` in refined substeps.
    const double span = target - prev_beta;
    if (span > 0.0) {
      const int nsub = std::max(1, static_cast<int>(std::ceil(span / refine_step)));
      const double h = span / nsub;
      for (int s = 1; s <= nsub; ++s) {
        const double b = prev_beta + h * s;
        const double e = emap.energy_at(b);
        lnz -= 0.5 * (prev_e + e) * h;
        prev_e = e;
      }
      prev_beta = target;
    }
    t.log_z[gi] = lnz;
    t.energy[gi] = emap.energy_at(target);
    t.valid[gi] = (in_range || may_clamp) ? 1 : 0;
  }
  return t;
}

ThermalCurve assemble_curve(const std::vector<WeightTable>& tables,
                            const std::vector<double>& grid) {
  ThermalCurve c;
  c.betas = grid;
  c.energy.assign(grid.size(), std::numeric_limits<double>::quiet_NaN());
  c.n_contributing.assign(grid.size(), 0);
  c.defined.assign(grid.size(), 0);
  for (std::size_t gi = 0; gi < grid.size(); ++gi) {
    double lmax = -std::numeric_limits<double>::infinity();
    for (const auto& t : tables) {
      if (t.valid[gi] && t.log_z[gi] > lmax) lmax = t.log_z[gi];
    }
    if (!std::isfinite(lmax)) continue;
    double num = 0.0, den = 0.0;
    int count = 0;
    for (const auto& t : tables) {
      if (!t.valid[gi]) continue;
      const double w = std::exp(t.log_z[gi] - lmax);
      num += w * t.energy[gi];
      den += w;
      ++count;
    }
    c.energy[gi] = num / den;
    c.n_contributing[gi] = count;
    c.defined[gi] = 1;
  }
  return c;
}

ThermalCurve thermal_average(const std::vector<EnsembleMember>& members,
                             const std::vector<double>& grid, ClampPolicy policy,
                             double refine_step) {
  std::vector<WeightTable> tables;
  tables.reserve(members.size());
  for (const auto& m : members) {
    tables.push_back(importance_weights(m, grid, policy, refine_step));
  }
  return assemble_curve(tables, grid);
}

ThermalCurve thermal_average_observable(
    const std::vector<EnsembleMember>& members, const std::vector<double>& grid,
    ClampPolicy policy, const std::vector<std::vector<double>>& observable_on_grid,
    double refine_step) {
  if (observable_on_grid.size() != members.size()) {
    throw std::invalid_argument("thermal_average_observable: one value row per member");
  }
  std::vector<WeightTable> tables;
  tables.reserve(members.size());
  for (std::size_t i = 0; i < members.size(); ++i) {
    WeightTable t = importance_weights(members[i], grid, policy, refine_step);
    if (observable_on_grid[i].size() != grid.size()) {
      throw std::invalid_argument("thermal_average_observable: grid size mismatch");
    }
    t.energy = observable_on_grid[i];  // reuse the weighted-average machinery
    tables.push_back(std::move(t));
  }
  return assemble_curve(tables, grid);
}

double error_metric(const ThermalCurve& curve, const std::vector<double>& exact_on_grid) {
  if (exact_on_grid.size() != curve.betas.size()) {
    throw std::invalid_argument("error_metric: exact grid size mismatch");
  }
  double eps = 0.0;
  bool have_prev = false;
  double prev_beta = 0.0, prev_dev = 0.0;
  for (std::size_t i = 0; i < curve.betas.size(); ++i) {
    const double b = curve.betas[i];
    if (b < 1.0 - 1e-12 || b > 2.5 + 1e-12 || !curve.defined[i]) continue;
    const double dev = std::abs(curve.energy[i] - exact_on_grid[i]);
    if (have_prev) eps += 0.5 * (dev + prev_dev) * (b - prev_beta);
    prev_beta = b;
    prev_dev = dev;
    have_prev = true;
  }
  return eps;
}

void EnsembleConfig::validate() const {
  if (n_states < 1) throw std::invalid_argument("ensemble: n_states must be >= 1");
  if (!(theta > 0.0)) throw std::invalid_argument("ensemble: theta must be > 0");
  if (n_steps < 1) throw std::invalid_argument("ensemble: n_steps must be >= 1");
  if (beta_grid.empty() || beta_grid.front() < 0.0) {
    throw std::invalid_argument("ensemble: beta grid must start at beta >= 0");
  }
  for (std::size_t i = 1; i < beta_grid.size(); ++i) {
    if (!(beta_grid[i] > beta_grid[i - 1])) {
      throw std::invalid_argument("ensemble: beta grid must be strictly increasing");
    }
  }
  if (pre_evolution && (!(pre_dt > 0.0) || t_pre < 0.0)) {
    throw std::invalid_argument("ensemble: pre-evolution requires dt > 0 and T_pre >= 0");
  }
  evolver.validate();
}

EnsembleMember evolve_member(const HamiltonianModel& model, const EnsembleConfig& cfg,
                             int member_id, LstmWavefunction* final_state) {
  Rng rng(member_seed(cfg.master_seed, static_cast<std::uint64_t>(member_id)));
  LstmWavefunction w = init_product_state(random_cps(rng, model.n_sites), cfg.ansatz_d1,
                                          cfg.ansatz_d2);

  if (cfg.pre_evolution && cfg.t_pre > 0.0) {
    EvolverConfig pre = cfg.evolver;
    pre.mode = EvolveMode::real;
    pre.dtau = cfg.pre_dt;
    const int pre_steps = static_cast<int>(std::lround(cfg.t_pre / cfg.pre_dt));
    evolve(w, model, pre, rng, pre_steps);
  }

  EvolverConfig imag = cfg.evolver;
  imag.mode = EvolveMode::imaginary;
  const int run_len = cfg.smoothing.completed_run_length;
  const double floor = cfg.online_sigma2_stop;
  const StopCondition stop = [run_len, floor](const Trajectory& traj) {
    if (static_cast<int>(traj.size()) < run_len) return false;
    for (std::size_t k = traj.size() - static_cast<std::size_t>(run_len);
         k < traj.size(); ++k) {
      const double var = traj[k].h2 - traj[k].energy * traj[k].energy;
      if (var >= floor) return false;
    }
    return true;
  };

  EnsembleMember m;
  m.id = member_id;
  m.trajectory = evolve(w, model, imag, rng, cfg.n_steps, stop);
  if (final_state != nullptr) *final_state = w;

  const bool rejected = !m.trajectory.empty() && m.trajectory.back().terminated;
  ReparamResult rep;
  try {
    rep = reparameterize(m.trajectory, cfg.smoothing);
  } catch (const std::invalid_argument&) {
    m.usable_len = 0;
    m.term_reason = TermReason::step_rejected;
    return m;
  }
  m.taus = std::move(rep.taus);
  m.betas = std::move(rep.betas);
  m.smoothed_energy = std::move(rep.smoothed_energy);
  m.smoothed_h2 = std::move(rep.smoothed_h2);

  const std::size_t monotone_len = rep.usable_len;
  const std::size_t cut = threshold_cut(
      std::vector<double>(m.betas.begin(), m.betas.begin() + static_cast<long>(monotone_len)),
      std::vector<double>(m.taus.begin(), m.taus.begin() + static_cast<long>(monotone_len)),
      cfg.theta);
  m.usable_len = std::min(monotone_len, cut);

  // A member whose sigma^2 already sat at the floor when its usable data
  // ends is converged: whatever non-monotonicity or slope blowup follows is
  // the ill-defined tail of the beta integrand, not an optimization spike.
  if (rep.floored_start != ReparamResult::npos && rep.floored_start <= m.usable_len) {
    m.term_reason = TermReason::completed;
  } else if (cut < monotone_len) {
    m.term_reason = TermReason::threshold;
  } else if (monotone_len < m.betas.size()) {
    m.term_reason = TermReason::spike;
  } else if (rejected) {
    m.term_reason = TermReason::step_rejected;
  } else {
    m.term_reason = TermReason::completed;
  }
  return m;
}

EnsembleResult run_ensemble(const HamiltonianModel& model, const EnsembleConfig& cfg,
                            int n_workers) {
  cfg.validate();
  EnsembleResult res;
  res.members.resize(static_cast<std::size_t>(cfg.n_states));

  const int workers = std::max(1, n_workers);
  std::atomic<int> next{0};
  auto work = [&]() {
    while (true) {
      const int id = next.fetch_add(1);
      if (id >= cfg.n_states) break;
      res.members[static_cast<std::size_t>(id)] = evolve_member(model, cfg, id);
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int t = 0; t < workers; ++t) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }

  int usable = 0;
  std::map<TermReason, int> tally;
  for (const auto& m : res.members) {
    ++tally[m.term_reason];
    if (m.usable_len > 0) ++usable;
  }
  if (usable == 0) {
    std::string msg = "run_ensemble: no usable members;";
    for (const auto& [reason, count] : tally) {
      msg += " " + to_string(reason) + "=" + std::to_string(count);
    }
    throw std::runtime_error(msg);
  }

  res.tables.reserve(res.members.size());
  for (const auto& m : res.members) {
    res.tables.push_back(
        importance_weights(m, cfg.beta_grid, cfg.clamp_policy, cfg.weight_refine_step));
  }
  res.curve = assemble_curve(res.tables, cfg.beta_grid);
  return res;
}

std::vector<double> uniform_grid(double lo, double hi, double step) {
  if (!(step > 0.0) || hi < lo) throw std::invalid_argument("uniform_grid: bad range");
  std::vector<double> g;
  const int n = static_cast<int>(std::round((hi - lo) / step));
  g.reserve(static_cast<std::size_t>(n) + 1);
  for (int i = 0; i <= n; ++i) g.push_back(lo + step * i);
  return g;
}

}  // namespace xymetts
