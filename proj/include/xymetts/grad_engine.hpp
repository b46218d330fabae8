#pragma once

#include <Eigen/Dense>
#include <vector>

#include "xymetts/lstm.hpp"

namespace xymetts {

// Logarithmic derivatives of the ansatz. Parameters are enumerated as real
// coordinates: complex parameter mu (in to_vector() order) contributes
// column 2*mu for its real part and 2*mu+1 for its imaginary part. Entries
// are complex because ln(psi) is complex:
//   o(a, r) = d ln psi(x_a) / d theta_r.
struct LogDerivativeBatch {
  Eigen::MatrixXcd o;  // (n_samples, 2P)
  bool centered = false;
};

// Exact reverse-mode derivatives of log_amplitude, one row per sample.
// The split activations make ln(psi) non-holomorphic, so the real and
// imaginary coordinate columns are independent.
LogDerivativeBatch log_derivatives(const LstmWavefunction& w,
                                   const std::vector<SpinConfiguration>& batch);

// Single-sample derivative row (length 2P); used by the batch version and
// by the finite-difference tests.
Eigen::VectorXcd log_derivative_row(const LstmWavefunction& w,
                                    const SpinConfiguration& x);

inline Eigen::VectorXd uniform_weights(Eigen::Index n) {
  return Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
}

// Subtracts the (weighted) sample means columnwise from o and from e.
void center(LogDerivativeBatch& o, Eigen::VectorXcd& e, const Eigen::VectorXd& weights);
void center(LogDerivativeBatch& o, Eigen::VectorXcd& e);

// dE/dtheta_r = 2 Re( sum_a w_a conj(o(a,r)) e(a) ), with o and e centered.
Eigen::VectorXd energy_gradient(const LogDerivativeBatch& o, const Eigen::VectorXcd& e,
                                const Eigen::VectorXd& weights);
Eigen::VectorXd energy_gradient(const LogDerivativeBatch& o, const Eigen::VectorXcd& e);

// Quantum geometric tensor S(r,s) = sum_a w_a conj(o(a,r)) o(a,s):
// Hermitian positive semidefinite.
Eigen::MatrixXcd geometric_tensor(const LogDerivativeBatch& o,
                                  const Eigen::VectorXd& weights);
Eigen::MatrixXcd geometric_tensor(const LogDerivativeBatch& o);

// Neural tangent kernel T(a,b) = sum_r conj(o(a,r)) o(b,r): the Gram matrix
// in the sample index, sharing its nonzero spectrum with n_samples * S.
Eigen::MatrixXcd ntk(const LogDerivativeBatch& o);

}  // namespace xymetts
