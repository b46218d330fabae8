#include "xymetts/lstm.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace xymetts {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Split activations: the scalar nonlinearity acts on real and imaginary
// parts independently.
Complex sigmoid_split(Complex z) { return {sigmoid(z.real()), sigmoid(z.imag())}; }
Complex tanh_split(Complex z) { return {std::tanh(z.real()), std::tanh(z.imag())}; }

// Log used for product-state biases. Zero amplitudes map to a large negative
// real part: exp(2*(-1e3)) underflows to zero, so such spins are never
// sampled, while sums of biases stay finite.
Complex safe_log(Complex a) {
  if (a == Complex(0.0, 0.0)) return {-1.0e3, 0.0};
  return std::log(a);
}

void check_dims(const LstmWavefunction& w, const SpinConfiguration& x) {
  if (static_cast<int>(x.size()) != w.n_sites) {
    throw std::invalid_argument("configuration length does not match n_sites");
  }
}

}  // namespace

int LstmWavefunction::parameter_count() const {
  auto sz = [](const auto& m) { return static_cast<int>(m.size()); };
  return sz(layer1.w_x) + sz(layer1.w_h) + sz(layer1.b) + sz(layer2.w_x) +
         sz(layer2.w_h) + sz(layer2.b) + sz(w_out) + sz(site_bias);
}

Eigen::VectorXcd LstmWavefunction::to_vector() const {
  Eigen::VectorXcd v(parameter_count());
  Eigen::Index pos = 0;
  auto put = [&](const auto& m) {
    v.segment(pos, m.size()) = Eigen::Map<const Eigen::VectorXcd>(m.data(), m.size());
    pos += m.size();
  };
  put(layer1.w_x); put(layer1.w_h); put(layer1.b);
  put(layer2.w_x); put(layer2.w_h); put(layer2.b);
  put(w_out); put(site_bias);
  return v;
}

void LstmWavefunction::from_vector(const Eigen::VectorXcd& v) {
  if (v.size() != parameter_count()) {
    throw std::invalid_argument("from_vector: size mismatch");
  }
  Eigen::Index pos = 0;
  auto take = [&](auto& m) {
    Eigen::Map<Eigen::VectorXcd>(m.data(), m.size()) = v.segment(pos, m.size());
    pos += m.size();
  };
  take(layer1.w_x); take(layer1.w_h); take(layer1.b);
  take(layer2.w_x); take(layer2.w_h); take(layer2.b);
  take(w_out); take(site_bias);
}

void LstmWavefunction::add_scaled_update(const Eigen::VectorXd& dir, Complex factor) {
  const int p = parameter_count();
  if (dir.size() != 2 * p) {
    throw std::invalid_argument("add_scaled_update: direction size mismatch");
  }
  Eigen::VectorXcd v = to_vector();
  for (int mu = 0; mu < p; ++mu) {
    v(mu) -= factor * Complex(dir(2 * mu), dir(2 * mu + 1));
  }
  from_vector(v);
}

LstmWavefunction make_lstm(int n_sites, int d1, int d2) {
  if (n_sites < 1 || d1 < 1 || d2 < 1) {
    throw std::invalid_argument("make_lstm: dimensions must be positive");
  }
  LstmWavefunction w;
  w.n_sites = n_sites;
  w.layer1.w_x = Eigen::MatrixXcd::Zero(4 * d1, 2);
  w.layer1.w_h = Eigen::MatrixXcd::Zero(4 * d1, d1);
  w.layer1.b = Eigen::VectorXcd::Zero(4 * d1);
  w.layer2.w_x = Eigen::MatrixXcd::Zero(4 * d2, d1);
  w.layer2.w_h = Eigen::MatrixXcd::Zero(4 * d2, d2);
  w.layer2.b = Eigen::VectorXcd::Zero(4 * d2);
  w.w_out = Eigen::MatrixXcd::Zero(2, d2);
  w.site_bias = Eigen::MatrixXcd::Zero(2, n_sites);
  return w;
}

LstmWavefunction random_lstm(int n_sites, int d1, int d2, Rng& rng, double scale) {
  LstmWavefunction w = make_lstm(n_sites, d1, d2);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXcd v(w.parameter_count());
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    v(i) = scale * Complex(normal(rng), normal(rng));
  }
  w.from_vector(v);
  return w;
}

void LstmScratch::resize(const LstmWavefunction& w) {
  const int d1 = w.d1(), d2 = w.d2();
  pre1.resize(4 * d1); c1.resize(d1); cn1.resize(d1); h1.resize(d1); t1.resize(d1);
  pre2.resize(4 * d2); c2.resize(d2); cn2.resize(d2); h2.resize(d2); t2.resize(d2);
}

namespace {

// One cell step: reads (c, h), writes the new state back into (c, h) using
// cn/t as temporaries. `prev_spin` < 0 selects the zero start token for
// layer 1; layer 2 passes the layer-1 output through `input`.
void cell_step(const LstmLayerParams& p, int prev_spin, const Eigen::VectorXcd* input,
               Eigen::VectorXcd& pre, Eigen::VectorXcd& c, Eigen::VectorXcd& cn,
               Eigen::VectorXcd& h, Eigen::VectorXcd& t, bool first_site) {
  const int hd = p.hidden();
  if (input != nullptr) {
    pre.noalias() = p.w_x * (*input);
  } else if (prev_spin >= 0) {
    pre = p.w_x.col(prev_spin);
  } else {
    pre.setZero();
  }
  if (!first_site) pre.noalias() += p.w_h * h;
  pre += p.b;

  for (int j = 0; j < hd; ++j) {
    const Complex gi = sigmoid_split(pre(j));
    const Complex gf = sigmoid_split(pre(hd + j));
    const Complex gg = tanh_split(pre(2 * hd + j));
    const Complex go = sigmoid_split(pre(3 * hd + j));
    const Complex cprev = first_site ? Complex(0.0) : c(j);
    cn(j) = gf * cprev + gi * gg;
    t(j) = go * tanh_split(cn(j));
  }
  c = cn;
  h = t;
}

}  // namespace

ConditionalLogits conditionals(const LstmWavefunction& w, const SpinConfiguration& x) {
  check_dims(w, x);
  LstmScratch s;
  s.resize(w);
  ConditionalLogits logits(2, w.n_sites);
  for (int tpos = 0; tpos < w.n_sites; ++tpos) {
    const bool first = (tpos == 0);
    const int prev = first ? -1 : static_cast<int>(x[static_cast<std::size_t>(tpos - 1)]);
    cell_step(w.layer1, prev, nullptr, s.pre1, s.c1, s.cn1, s.h1, s.t1, first);
    cell_step(w.layer2, -1, &s.h1, s.pre2, s.c2, s.cn2, s.h2, s.t2, first);
    logits.col(tpos) = w.w_out * s.h2 + w.site_bias.col(tpos);
  }
  return logits;
}

Complex log_amplitude(const LstmWavefunction& w, const SpinConfiguration& x,
                      LstmScratch& s) {
  check_dims(w, x);
  Complex acc = 0.0;
  for (int tpos = 0; tpos < w.n_sites; ++tpos) {
    const bool first = (tpos == 0);
    const int prev = first ? -1 : static_cast<int>(x[static_cast<std::size_t>(tpos - 1)]);
    cell_step(w.layer1, prev, nullptr, s.pre1, s.c1, s.cn1, s.h1, s.t1, first);
    cell_step(w.layer2, -1, &s.h1, s.pre2, s.c2, s.cn2, s.h2, s.t2, first);
    const int sel = static_cast<int>(x[static_cast<std::size_t>(tpos)]);
    acc += (w.w_out.row(sel) * s.h2)(0) + w.site_bias(sel, tpos);
  }
  return acc;
}

Complex log_amplitude(const LstmWavefunction& w, const SpinConfiguration& x) {
  LstmScratch s;
  s.resize(w);
  return log_amplitude(w, x, s);
}

SpinConfiguration sample_one(const LstmWavefunction& w, Rng& rng, LstmScratch& s,
                             Complex* logpsi) {
  SpinConfiguration x(static_cast<std::size_t>(w.n_sites));
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Complex acc = 0.0;
  for (int tpos = 0; tpos < w.n_sites; ++tpos) {
    const bool first = (tpos == 0);
    const int prev = first ? -1 : static_cast<int>(x[static_cast<std::size_t>(tpos - 1)]);
    cell_step(w.layer1, prev, nullptr, s.pre1, s.c1, s.cn1, s.h1, s.t1, first);
    cell_step(w.layer2, -1, &s.h1, s.pre2, s.c2, s.cn2, s.h2, s.t2, first);
    const Complex l0 = (w.w_out.row(0) * s.h2)(0) + w.site_bias(0, tpos);
    const Complex l1 = (w.w_out.row(1) * s.h2)(0) + w.site_bias(1, tpos);
    // Probabilities depend only on logit differences; shifting by the larger
    // real part keeps the exponentials in range.
    const double m = std::max(l0.real(), l1.real());
    const double p0 = std::exp(2.0 * (l0.real() - m));
    const double p1 = std::exp(2.0 * (l1.real() - m));
    const double norm = p0 + p1;
    if (!(norm > 0.0) || !std::isfinite(norm)) {
      throw std::runtime_error("sample: vanishing conditional probabilities at site " +
                               std::to_string(tpos));
    }
    const int spin = (unif(rng) * norm < p0) ? 0 : 1;
    x[static_cast<std::size_t>(tpos)] = static_cast<std::uint8_t>(spin);
    acc += (spin == 0) ? l0 : l1;
  }
  if (logpsi != nullptr) *logpsi = acc;
  return x;
}

std::vector<SpinConfiguration> sample(const LstmWavefunction& w, Rng& rng, int count) {
  if (count < 1) throw std::invalid_argument("sample: count must be >= 1");
  LstmScratch s;
  s.resize(w);
  std::vector<SpinConfiguration> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) out.push_back(sample_one(w, rng, s));
  return out;
}

LstmWavefunction init_product_state(const ProductAmplitudes& amps, int d1, int d2) {
  if (amps.rows() != 2 || amps.cols() < 1) {
    throw std::invalid_argument("init_product_state: amplitudes must be (2, N)");
  }
  const int n = static_cast<int>(amps.cols());
  for (int i = 0; i < n; ++i) {
    if (amps(0, i) == Complex(0.0) && amps(1, i) == Complex(0.0)) {
      throw std::invalid_argument("init_product_state: zero amplitude pair at site " +
                                  std::to_string(i));
    }
  }
  LstmWavefunction w = make_lstm(n, d1, d2);
  // Fixed generic head and inter-layer weights. Both cells are zero, so h2
  // vanishes identically and the amplitudes factorize exactly; the nonzero
  // values keep d(lnpsi)/d(cell parameters) from vanishing at the product
  // point, which a fully zeroed network cannot recover from.
  Rng gen(0x5eedf00dULL);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double head_scale = 0.5;
  const double inter_scale = 0.5 / std::sqrt(static_cast<double>(d1));
  for (Eigen::Index j = 0; j < w.w_out.size(); ++j) {
    w.w_out.data()[j] = head_scale * Complex(normal(gen), normal(gen));
  }
  for (Eigen::Index j = 0; j < w.layer2.w_x.size(); ++j) {
    w.layer2.w_x.data()[j] = inter_scale * Complex(normal(gen), normal(gen));
  }
  for (int i = 0; i < n; ++i) {
    w.site_bias(0, i) = safe_log(amps(0, i));
    w.site_bias(1, i) = safe_log(amps(1, i));
  }
  return w;
}

ProductAmplitudes random_cps(Rng& rng, int n_sites) {
  std::normal_distribution<double> normal(0.0, 1.0);
  ProductAmplitudes amps(2, n_sites);
  for (int i = 0; i < n_sites; ++i) {
    const Complex a(normal(rng), normal(rng));
    const Complex b(normal(rng), normal(rng));
    const double norm = std::sqrt(std::norm(a) + std::norm(b));
    amps(0, i) = a / norm;
    amps(1, i) = b / norm;
  }
  return amps;
}

}  // namespace xymetts
