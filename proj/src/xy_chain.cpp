#include "xymetts/xy_chain.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace xymetts {

HamiltonianModel::HamiltonianModel(int n, Boundary b, double c)
    : n_sites(n), boundary(b), coupling(c) {
  if (n < 2) throw std::invalid_argument("HamiltonianModel: n_sites must be >= 2");
}

static void check_config(const HamiltonianModel& model, const SpinConfiguration& x) {
  if (static_cast<int>(x.size()) != model.n_sites) {
    throw std::invalid_argument("configuration length " + std::to_string(x.size()) +
                                " does not match n_sites " + std::to_string(model.n_sites));
  }
}

std::vector<std::pair<SpinConfiguration, double>> connected_states(
    const HamiltonianModel& model, const SpinConfiguration& x) {
  check_config(model, x);
  std::vector<std::pair<SpinConfiguration, double>> out;
  const double element = 2.0 * model.coupling;
  // A periodic 2-site ring has two bonds on the same pair of sites; they
  // connect the same pair of states, so the elements add up.
  if (model.boundary == Boundary::periodic && model.n_sites == 2) {
    if (x[0] != x[1]) {
      SpinConfiguration xp = {x[1], x[0]};
      out.emplace_back(std::move(xp), 2.0 * element);
    }
    return out;
  }
  const int nb = model.n_bonds();
  for (int j = 0; j < nb; ++j) {
    const int a = j;
    const int b = (j + 1) % model.n_sites;
    if (x[a] != x[b]) {
      SpinConfiguration xp = x;
      std::swap(xp[a], xp[b]);
      out.emplace_back(std::move(xp), element);
    }
  }
  return out;
}

Complex local_energy(const HamiltonianModel& model, const LogPsiFn& logpsi,
                     const SpinConfiguration& x) {
  const Complex lx = logpsi(x);
  Complex e = 0.0;
  for (const auto& [xp, elem] : connected_states(model, x)) {
    e += elem * std::exp(logpsi(xp) - lx);
  }
  return e;
}

Eigen::MatrixXd dense_hamiltonian(const HamiltonianModel& model) {
  if (model.n_sites > 14) {
    throw std::invalid_argument("dense_hamiltonian: N > 14 not supported");
  }
  const std::uint64_t dim = 1ull << model.n_sites;
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dim),
                                            static_cast<Eigen::Index>(dim));
  for (std::uint64_t idx = 0; idx < dim; ++idx) {
    const SpinConfiguration x = config_from_index(idx, model.n_sites);
    for (const auto& [xp, elem] : connected_states(model, x)) {
      h(static_cast<Eigen::Index>(basis_index(xp)), static_cast<Eigen::Index>(idx)) += elem;
    }
  }
  return h;
}

}  // namespace xymetts
