#pragma once

#include <Eigen/Dense>
#include <complex>
#include <functional>
#include <utility>
#include <vector>

#include "xymetts/spins.hpp"

namespace xymetts {

using Complex = std::complex<double>;

enum class Boundary { periodic, open };

// Spin-1/2 XY chain, H = coupling * sum_j (sx_j sx_{j+1} + sy_j sy_{j+1}).
// The sum runs over j = 1..N for periodic chains (site N+1 = site 1) and
// j = 1..N-1 for open chains. In the z basis the Hamiltonian is purely
// off-diagonal: each anti-aligned adjacent pair can be swapped with matrix
// element 2*coupling.
struct HamiltonianModel {
  int n_sites = 2;
  Boundary boundary = Boundary::periodic;
  double coupling = 0.5;

  HamiltonianModel() = default;
  HamiltonianModel(int n, Boundary b, double c = 0.5);

  int n_bonds() const { return boundary == Boundary::periodic ? n_sites : n_sites - 1; }
};

using LogPsiFn = std::function<Complex(const SpinConfiguration&)>;

// All x' with <x|H|x'> != 0 together with the matrix element. The diagonal
// element is zero and never listed.
std::vector<std::pair<SpinConfiguration, double>> connected_states(
    const HamiltonianModel& model, const SpinConfiguration& x);

// E_loc(x) = sum_{x'} <x|H|x'> exp(logpsi(x') - logpsi(x)).
// A non-finite logpsi at any connected state propagates into the result;
// rejection is the caller's decision.
Complex local_energy(const HamiltonianModel& model, const LogPsiFn& logpsi,
                     const SpinConfiguration& x);

// Dense 2^N x 2^N matrix for test oracles; guarded to N <= 14.
Eigen::MatrixXd dense_hamiltonian(const HamiltonianModel& model);

}  // namespace xymetts
