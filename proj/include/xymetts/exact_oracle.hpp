#pragma once

#include <Eigen/Dense>
#include <vector>

#include "xymetts/xy_chain.hpp"

namespace xymetts {

// Thermal energy Tr[H e^{-bH}] / Tr[e^{-bH}] of the XY chain with coupling
// 1/2 via the Jordan-Wigner free-fermion mapping (hopping amplitude 1).
// Periodic chains use the parity-projected combination of periodic and
// anti-periodic mode sets; open chains use the modes of the open hopping
// matrix directly.
double free_fermion_energy(int n_sites, double beta, Boundary boundary);

// Full-spectrum thermal energy from magnetization-sector block
// diagonalization of the dense Hamiltonian. Independent of the free-fermion
// route; N <= 12.
double ed_energy(int n_sites, double beta, Boundary boundary);

struct ImaginaryEvolutionPoint {
  double tau = 0.0;
  double energy = 0.0;   // <H> of e^{-tau H}|phi0> (normalized)
  double h2 = 0.0;       // <H^2>
  double log_norm = 0.0; // ln <phi(tau)|phi(tau)>, with <phi0|phi0> as given
};

// Applies e^{-tau H} in the eigenbasis of the dense Hamiltonian and returns
// the exact moments and log-norm at each requested tau. N <= 10.
std::vector<ImaginaryEvolutionPoint> exact_imaginary_evolution(
    const HamiltonianModel& model, const Eigen::VectorXcd& phi0,
    const std::vector<double>& taus);

}  // namespace xymetts
