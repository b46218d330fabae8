#include "xymetts/exact_oracle.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace xymetts {

namespace {

// ln(1 + e^{-b*e}) without overflow.
double log1p_exp(double x) {  // x = -b*e
  if (x > 0.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

struct SignedLog {
  double log_abs;
  int sign;       // 0 when the product is exactly zero
  double dlog;    // d(log|value|)/d(beta), valid only when sign != 0
};

// Product over modes of (1 - e^{-beta*eps}) in sign-tracked log space,
// together with its logarithmic beta-derivative.
SignedLog parity_product(const std::vector<double>& eps, double beta) {
  SignedLog r{0.0, 1, 0.0};
  for (double e : eps) {
    const double be = beta * e;
    if (be == 0.0) {
      // A zero mode makes the product identically zero for all beta.
      return SignedLog{0.0, 0, 0.0};
    }
    // 1 - e^{-be}: positive for be > 0, negative for be < 0.
    if (be > 0.0) {
      r.log_abs += std::log1p(-std::exp(-be));
    } else {
      r.log_abs += -be + std::log1p(-std::exp(be));
      r.sign = -r.sign;
    }
    // d/db log|1 - e^{-be}| = e / (e^{be} - 1)
    r.dlog += e / std::expm1(be);
  }
  return r;
}

// Product over modes of (1 + e^{-beta*eps}) in log space with derivative.
SignedLog fock_product(const std::vector<double>& eps, double beta) {
  SignedLog r{0.0, 1, 0.0};
  for (double e : eps) {
    r.log_abs += log1p_exp(-beta * e);
    r.dlog += -e / (1.0 + std::exp(beta * e));
  }
  return r;
}

std::vector<double> open_modes(int n) {
  std::vector<double> eps(static_cast<std::size_t>(n));
  for (int k = 1; k <= n; ++k) {
    eps[static_cast<std::size_t>(k - 1)] =
        2.0 * std::cos(std::numbers::pi * k / (n + 1));
  }
  return eps;
}

std::vector<double> ring_modes(int n, bool antiperiodic) {
  std::vector<double> eps(static_cast<std::size_t>(n));
  for (int m = 0; m < n; ++m) {
    const double k = antiperiodic ? std::numbers::pi * (2 * m + 1) / n
                                  : 2.0 * std::numbers::pi * m / n;
    eps[static_cast<std::size_t>(m)] = 2.0 * std::cos(k);
  }
  return eps;
}

double kahan_mean(const Eigen::VectorXd& v) {
  double sum = 0.0, comp = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double y = v(i) - comp;
    const double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }
  return sum / static_cast<double>(v.size());
}

}  // namespace

double free_fermion_energy(int n_sites, double beta, Boundary boundary) {
  if (n_sites < 2) throw std::invalid_argument("free_fermion_energy: n_sites must be >= 2");
  if (beta == 0.0) return 0.0;  // Tr H = 0: both mode sets sum to zero

  if (boundary == Boundary::open) {
    const auto eps = open_modes(n_sites);
    double e = 0.0;
    for (double ek : eps) e += ek / (1.0 + std::exp(beta * ek));
    return e;
  }

  // Periodic ring: Z = (1/2)[Z_AP^+ + Z_AP^- + Z_P^+ - Z_P^-], where
  // Z^+ = prod(1 + e^{-b eps}) traces the sector-unrestricted Fock space and
  // Z^- = prod(1 - e^{-b eps}) traces it with a fermion-parity insertion.
  // Even parity pairs with anti-periodic modes, odd parity with periodic.
  const auto eps_ap = ring_modes(n_sites, true);
  const auto eps_p = ring_modes(n_sites, false);
  const SignedLog terms[4] = {
      fock_product(eps_ap, beta),
      parity_product(eps_ap, beta),
      fock_product(eps_p, beta),
      parity_product(eps_p, beta),
  };
  const int proj_sign[4] = {+1, +1, +1, -1};

  double lmax = -std::numeric_limits<double>::infinity();
  for (const auto& t : terms) {
    if (t.sign != 0 && t.log_abs > lmax) lmax = t.log_abs;
  }
  double z = 0.0, dz = 0.0;
  for (int t = 0; t < 4; ++t) {
    if (terms[t].sign == 0) continue;
    const double w = proj_sign[t] * terms[t].sign * std::exp(terms[t].log_abs - lmax);
    z += w;
    dz += w * terms[t].dlog;
  }
  // E = -dZ/db / Z
  return -dz / z;
}

double ed_energy(int n_sites, double beta, Boundary boundary) {
  if (n_sites > 12) throw std::invalid_argument("ed_energy: N > 12 not supported");
  const HamiltonianModel model(n_sites, boundary);
  const Eigen::MatrixXd h = dense_hamiltonian(model);
  const std::uint64_t dim = 1ull << n_sites;

  // Magnetization is conserved; diagonalize each up-spin sector separately.
  std::vector<std::vector<Eigen::Index>> sectors(static_cast<std::size_t>(n_sites) + 1);
  for (std::uint64_t idx = 0; idx < dim; ++idx) {
    sectors[static_cast<std::size_t>(__builtin_popcountll(idx))].push_back(
        static_cast<Eigen::Index>(idx));
  }
  Eigen::VectorXd evals(static_cast<Eigen::Index>(dim));
  Eigen::Index pos = 0;
  for (const auto& basis : sectors) {
    const Eigen::Index m = static_cast<Eigen::Index>(basis.size());
    Eigen::MatrixXd block(m, m);
    for (Eigen::Index r = 0; r < m; ++r) {
      for (Eigen::Index c = 0; c < m; ++c) block(r, c) = h(basis[static_cast<std::size_t>(r)], basis[static_cast<std::size_t>(c)]);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(block, Eigen::EigenvaluesOnly);
    evals.segment(pos, m) = es.eigenvalues();
    pos += m;
  }

  if (beta == 0.0) return kahan_mean(evals);

  const double lmin = evals.minCoeff();
  double z = 0.0, ze = 0.0;
  for (Eigen::Index i = 0; i < evals.size(); ++i) {
    const double w = std::exp(-beta * (evals(i) - lmin));
    z += w;
    ze += w * evals(i);
  }
  return ze / z;
}

std::vector<ImaginaryEvolutionPoint> exact_imaginary_evolution(
    const HamiltonianModel& model, const Eigen::VectorXcd& phi0,
    const std::vector<double>& taus) {
  if (model.n_sites > 10) {
    throw std::invalid_argument("exact_imaginary_evolution: N > 10 not supported");
  }
  const Eigen::Index dim = Eigen::Index(1) << model.n_sites;
  if (phi0.size() != dim) {
    throw std::invalid_argument("exact_imaginary_evolution: phi0 dimension mismatch");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense_hamiltonian(model));
  const Eigen::VectorXd lam = es.eigenvalues();
  const Eigen::VectorXd pop0 = (es.eigenvectors().transpose() * phi0).cwiseAbs2();

  std::vector<ImaginaryEvolutionPoint> out;
  out.reserve(taus.size());
  for (double tau : taus) {
    // Occupations |c_k|^2 e^{-2 tau lam_k}, factored around the dominant mode.
    const Eigen::ArrayXd logw = pop0.array().log() - 2.0 * tau * lam.array();
    const double lmax = logw.maxCoeff();
    const Eigen::ArrayXd w = (logw - lmax).exp() * (pop0.array() > 0.0).cast<double>();
    const double z = w.sum();
    ImaginaryEvolutionPoint p;
    p.tau = tau;
    p.energy = (w * lam.array()).sum() / z;
    p.h2 = (w * lam.array().square()).sum() / z;
    p.log_norm = lmax + std::log(z);
    out.push_back(p);
  }
  return out;
}

}  // namespace xymetts
