#include "xymetts/grad_engine.hpp"

#include <cmath>
#include <stdexcept>

namespace xymetts {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Per-site activations of one cell recorded by the tracing forward pass.
struct LayerTrace {
  Eigen::MatrixXcd gi, gf, gg, go;  // (h, N) activated gates
  Eigen::MatrixXcd c, tc, h;       // (h, N) cell state, tanh(cell), output
  void resize(int hidden, int n) {
    gi.resize(hidden, n); gf.resize(hidden, n); gg.resize(hidden, n);
    go.resize(hidden, n); c.resize(hidden, n); tc.resize(hidden, n);
    h.resize(hidden, n);
  }
};

struct ForwardTrace {
  LayerTrace l1, l2;
  void resize(const LstmWavefunction& w) {
    l1.resize(w.d1(), w.n_sites);
    l2.resize(w.d2(), w.n_sites);
  }
};

void traced_cell_step(const LstmLayerParams& p, int prev_spin,
                      const Eigen::VectorXcd* input, LayerTrace& tr, int t,
                      Eigen::VectorXcd& pre) {
  const int hd = p.hidden();
  if (input != nullptr) {
    pre.noalias() = p.w_x * (*input);
  } else if (prev_spin >= 0) {
    pre = p.w_x.col(prev_spin);
  } else {
    pre.setZero();
  }
  if (t > 0) pre.noalias() += p.w_h * tr.h.col(t - 1);
  pre += p.b;
  for (int j = 0; j < hd; ++j) {
    const Complex zi = pre(j), zf = pre(hd + j), zg = pre(2 * hd + j), zo = pre(3 * hd + j);
    const Complex gi(sigmoid(zi.real()), sigmoid(zi.imag()));
    const Complex gf(sigmoid(zf.real()), sigmoid(zf.imag()));
    const Complex gg(std::tanh(zg.real()), std::tanh(zg.imag()));
    const Complex go(sigmoid(zo.real()), sigmoid(zo.imag()));
    const Complex cprev = (t > 0) ? tr.c(j, t - 1) : Complex(0.0);
    const Complex c = gf * cprev + gi * gg;
    const Complex tc(std::tanh(c.real()), std::tanh(c.imag()));
    tr.gi(j, t) = gi; tr.gf(j, t) = gf; tr.gg(j, t) = gg; tr.go(j, t) = go;
    tr.c(j, t) = c; tr.tc(j, t) = tc; tr.h(j, t) = go * tc;
  }
}

void run_traced_forward(const LstmWavefunction& w, const SpinConfiguration& x,
                        ForwardTrace& tr, Eigen::VectorXcd& pre1,
                        Eigen::VectorXcd& pre2) {
  for (int t = 0; t < w.n_sites; ++t) {
    const int prev = (t == 0) ? -1 : static_cast<int>(x[static_cast<std::size_t>(t - 1)]);
    traced_cell_step(w.layer1, prev, nullptr, tr.l1, t, pre1);
    const Eigen::VectorXcd h1 = tr.l1.h.col(t);
    traced_cell_step(w.layer2, -1, &h1, tr.l2, t, pre2);
  }
}

// Adjoint propagation rules. Within one backward pass the target is one real
// component of ln(psi); per node u the packed adjoint is
// g(u) = dL/d(Re u) + i dL/d(Im u). For the complex product z = x*y this
// gives g(x) = g(z) * conj(y); for a split activation w = f(Re z) + i f(Im z)
// it gives g(z) = Re(g(w)) f'(Re z) + i Im(g(w)) f'(Im z).
inline Complex sig_back(Complex g, Complex s) {
  return {g.real() * s.real() * (1.0 - s.real()), g.imag() * s.imag() * (1.0 - s.imag())};
}
inline Complex tanh_back(Complex g, Complex th) {
  return {g.real() * (1.0 - th.real() * th.real()),
          g.imag() * (1.0 - th.imag() * th.imag())};
}

// Complex adjoints accumulated per parameter; shaped like the wavefunction
// so the flattening order matches to_vector().
struct Adjoints {
  LstmWavefunction acc;
  explicit Adjoints(const LstmWavefunction& w) {
    acc = make_lstm(w.n_sites, w.d1(), w.d2());
  }
};

struct CellBackState {
  Eigen::VectorXcd gh, gc;  // adjoints of h_t / c_t flowing from later sites
};

// One cell's backward step at site t. Consumes gh/gc for site t and leaves
// the adjoints for site t-1 in their place; returns the input adjoint
// through w_x when requested.
void cell_backward(const LstmLayerParams& p, const LayerTrace& tr, int t,
                   const Eigen::VectorXcd* input, int prev_spin, CellBackState& st,
                   LstmLayerParams& grad, Eigen::VectorXcd& gpre,
                   Eigen::VectorXcd* ginput) {
  const int hd = p.hidden();
  for (int j = 0; j < hd; ++j) {
    const Complex gh = st.gh(j);
    const Complex go_adj = gh * std::conj(tr.tc(j, t));
    const Complex gtc = gh * std::conj(tr.go(j, t));
    const Complex gc = st.gc(j) + tanh_back(gtc, tr.tc(j, t));
    const Complex cprev = (t > 0) ? tr.c(j, t - 1) : Complex(0.0);
    const Complex gf_adj = gc * std::conj(cprev);
    const Complex gi_adj = gc * std::conj(tr.gg(j, t));
    const Complex gg_adj = gc * std::conj(tr.gi(j, t));
    st.gc(j) = gc * std::conj(tr.gf(j, t));  // adjoint of c_{t-1}
    gpre(j) = sig_back(gi_adj, tr.gi(j, t));
    gpre(hd + j) = sig_back(gf_adj, tr.gf(j, t));
    gpre(2 * hd + j) = tanh_back(gg_adj, tr.gg(j, t));
    gpre(3 * hd + j) = sig_back(go_adj, tr.go(j, t));
  }
  grad.b += gpre;
  if (input != nullptr) {
    grad.w_x.noalias() += gpre * input->conjugate().transpose();
  } else if (prev_spin >= 0) {
    grad.w_x.col(prev_spin) += gpre;
  }
  if (t > 0) {
    grad.w_h.noalias() += gpre * tr.h.col(t - 1).conjugate().transpose();
    st.gh.noalias() = p.w_h.adjoint() * gpre;
  } else {
    st.gh.setZero();
  }
  if (ginput != nullptr) ginput->noalias() = p.w_x.adjoint() * gpre;
}

// Backward pass for one real component of ln(psi); seed = 1 targets the real
// part, seed = i the imaginary part.
void backward_pass(const LstmWavefunction& w, const SpinConfiguration& x,
                   const ForwardTrace& tr, Complex seed, LstmWavefunction& grad) {
  const int n = w.n_sites;
  CellBackState s2{Eigen::VectorXcd::Zero(w.d2()), Eigen::VectorXcd::Zero(w.d2())};
  CellBackState s1{Eigen::VectorXcd::Zero(w.d1()), Eigen::VectorXcd::Zero(w.d1())};
  Eigen::VectorXcd gpre2(4 * w.d2()), gpre1(4 * w.d1());
  Eigen::VectorXcd gh1_from_l2(w.d1());

  for (int t = n - 1; t >= 0; --t) {
    const int sel = static_cast<int>(x[static_cast<std::size_t>(t)]);
    grad.site_bias(sel, t) += seed;
    grad.w_out.row(sel) += seed * tr.l2.h.col(t).conjugate().transpose();
    s2.gh += seed * w.w_out.row(sel).adjoint();

    const Eigen::VectorXcd h1 = tr.l1.h.col(t);
    cell_backward(w.layer2, tr.l2, t, &h1, -1, s2, grad.layer2, gpre2, &gh1_from_l2);

    s1.gh += gh1_from_l2;
    const int prev = (t == 0) ? -1 : static_cast<int>(x[static_cast<std::size_t>(t - 1)]);
    cell_backward(w.layer1, tr.l1, t, nullptr, prev, s1, grad.layer1, gpre1, nullptr);
  }
}

}  // namespace

Eigen::VectorXcd log_derivative_row(const LstmWavefunction& w, const SpinConfiguration& x) {
  if (static_cast<int>(x.size()) != w.n_sites) {
    throw std::invalid_argument("log_derivative_row: configuration length mismatch");
  }
  ForwardTrace tr;
  tr.resize(w);
  Eigen::VectorXcd pre1(4 * w.d1()), pre2(4 * w.d2());
  run_traced_forward(w, x, tr, pre1, pre2);
  if (!tr.l2.h.allFinite() || !tr.l1.h.allFinite()) {
    throw std::runtime_error("log_derivative_row: non-finite forward pass");
  }

  LstmWavefunction g_re = make_lstm(w.n_sites, w.d1(), w.d2());
  LstmWavefunction g_im = make_lstm(w.n_sites, w.d1(), w.d2());
  backward_pass(w, x, tr, Complex(1.0, 0.0), g_re);
  backward_pass(w, x, tr, Complex(0.0, 1.0), g_im);

  // Pack: column 2mu is the derivative with respect to Re(theta_mu), column
  // 2mu+1 with respect to Im(theta_mu). g_re holds d(Re ln psi)/d(..),
  // g_im holds d(Im ln psi)/d(..), both packed per complex parameter.
  const Eigen::VectorXcd vr = g_re.to_vector();
  const Eigen::VectorXcd vi = g_im.to_vector();
  const int p = w.parameter_count();
  Eigen::VectorXcd row(2 * p);
  for (int mu = 0; mu < p; ++mu) {
    row(2 * mu) = Complex(vr(mu).real(), vi(mu).real());
    row(2 * mu + 1) = Complex(vr(mu).imag(), vi(mu).imag());
  }
  return row;
}

LogDerivativeBatch log_derivatives(const LstmWavefunction& w,
                                   const std::vector<SpinConfiguration>& batch) {
  if (batch.empty()) throw std::invalid_argument("log_derivatives: empty batch");
  LogDerivativeBatch out;
  out.o.resize(static_cast<Eigen::Index>(batch.size()), w.real_parameter_count());
  for (std::size_t a = 0; a < batch.size(); ++a) {
    out.o.row(static_cast<Eigen::Index>(a)) = log_derivative_row(w, batch[a]).transpose();
  }
  return out;
}

void center(LogDerivativeBatch& o, Eigen::VectorXcd& e, const Eigen::VectorXd& weights) {
  if (o.o.rows() != e.size() || o.o.rows() != weights.size()) {
    throw std::invalid_argument("center: size mismatch");
  }
  const Eigen::RowVectorXcd omean = weights.transpose().cast<Complex>() * o.o;
  o.o.rowwise() -= omean;
  const Complex emean = weights.cast<Complex>().dot(e);
  e.array() -= emean;
  o.centered = true;
}

void center(LogDerivativeBatch& o, Eigen::VectorXcd& e) {
  center(o, e, uniform_weights(o.o.rows()));
}

Eigen::VectorXd energy_gradient(const LogDerivativeBatch& o, const Eigen::VectorXcd& e,
                                const Eigen::VectorXd& weights) {
  const Eigen::VectorXcd we = weights.cast<Complex>().cwiseProduct(e);
  return 2.0 * (o.o.adjoint() * we).real();
}

Eigen::VectorXd energy_gradient(const LogDerivativeBatch& o, const Eigen::VectorXcd& e) {
  return energy_gradient(o, e, uniform_weights(o.o.rows()));
}

Eigen::MatrixXcd geometric_tensor(const LogDerivativeBatch& o,
                                  const Eigen::VectorXd& weights) {
  const Eigen::MatrixXcd scaled =
      weights.cwiseSqrt().cast<Complex>().asDiagonal() * o.o;
  return scaled.adjoint() * scaled;
}

Eigen::MatrixXcd geometric_tensor(const LogDerivativeBatch& o) {
  return geometric_tensor(o, uniform_weights(o.o.rows()));
}

Eigen::MatrixXcd ntk(const LogDerivativeBatch& o) {
  return o.o.conjugate() * o.o.transpose();
}

}  // namespace xymetts
