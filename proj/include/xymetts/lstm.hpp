#pragma once

#include <Eigen/Dense>
#include <complex>
#include <vector>

#include "xymetts/rng.hpp"
#include "xymetts/spins.hpp"
#include "xymetts/xy_chain.hpp"

namespace xymetts {

// One LSTM cell with complex parameters. Gate pre-activations are stacked
// along rows in the order input, forget, cell, output (4 blocks of `hidden`
// rows each). Nonlinearities act separately on real and imaginary parts of
// the pre-activations (split activation); gate products are full complex
// multiplications.
struct LstmLayerParams {
  Eigen::MatrixXcd w_x;  // (4*hidden, input_dim)
  Eigen::MatrixXcd w_h;  // (4*hidden, hidden)
  Eigen::VectorXcd b;    // (4*hidden)

  int hidden() const { return static_cast<int>(b.size()) / 4; }
  int input_dim() const { return static_cast<int>(w_x.cols()); }
  void setZero() { w_x.setZero(); w_h.setZero(); b.setZero(); }
};

// Two-layer LSTM autoregressive wavefunction with unnormalized conditional
// log-amplitudes ("logits"). Site t receives the one-hot of spin t-1 (a zero
// vector at the first site); the logit pair at site t is
// w_out * h2_t + site_bias.col(t). Initial hidden and cell states are zero.
struct LstmWavefunction {
  int n_sites = 0;
  LstmLayerParams layer1;     // input dim 2
  LstmLayerParams layer2;     // input dim d1
  Eigen::MatrixXcd w_out;     // (2, d2)
  Eigen::MatrixXcd site_bias; // (2, n_sites)

  int d1() const { return layer1.hidden(); }
  int d2() const { return layer2.hidden(); }

  // Number of complex parameters; real coordinates are twice this.
  int parameter_count() const;
  int real_parameter_count() const { return 2 * parameter_count(); }

  // Flat complex parameter vector in a fixed documented order:
  // l1.w_x, l1.w_h, l1.b, l2.w_x, l2.w_h, l2.b, w_out, site_bias,
  // matrices column-major.
  Eigen::VectorXcd to_vector() const;
  void from_vector(const Eigen::VectorXcd& v);

  // theta_mu -= factor * (dir[2mu] + i dir[2mu+1]). The imaginary-time update
  // uses factor = dtau; the real-time update uses factor = i*dt.
  void add_scaled_update(const Eigen::VectorXd& dir, Complex factor);
};

LstmWavefunction make_lstm(int n_sites, int d1 = 10, int d2 = 2);

// Fully random Gaussian parameters (ground-state-search style init).
LstmWavefunction random_lstm(int n_sites, int d1, int d2, Rng& rng, double scale = 0.2);

// All per-site conditional logits along the path x, shape (2, N).
using ConditionalLogits = Eigen::MatrixXcd;

// Reusable buffers for the forward pass; hot loops should reuse one across
// calls.
struct LstmScratch {
  Eigen::VectorXcd pre1, c1, cn1, h1, t1;
  Eigen::VectorXcd pre2, c2, cn2, h2, t2;
  void resize(const LstmWavefunction& w);
};

ConditionalLogits conditionals(const LstmWavefunction& w, const SpinConfiguration& x);

Complex log_amplitude(const LstmWavefunction& w, const SpinConfiguration& x);
Complex log_amplitude(const LstmWavefunction& w, const SpinConfiguration& x,
                      LstmScratch& scratch);

// Ancestral sampling: at each site, spin s is drawn with probability
// |exp l_s|^2 / sum_s' |exp l_s'|^2. Reproducible for a fixed generator
// state; samples are i.i.d.
std::vector<SpinConfiguration> sample(const LstmWavefunction& w, Rng& rng, int count);

// Sample one configuration and return its log-amplitude as a byproduct.
SpinConfiguration sample_one(const LstmWavefunction& w, Rng& rng, LstmScratch& scratch,
                             Complex* logpsi = nullptr);

// Per-site amplitude pairs a_i(s), shape (2, N).
using ProductAmplitudes = Eigen::MatrixXcd;

// Exact product-state initialization: both LSTM cells are zeroed, so the
// recurrent output vanishes identically and log_amplitude(x) equals
// sum_i ln a_i(x_i). The output head and the layer-2 input weights are set
// to fixed nonzero values: they do not contribute to the amplitudes at this
// point, but they keep the gradient flow into both cells open so evolution
// can leave the product manifold.
LstmWavefunction init_product_state(const ProductAmplitudes& amps, int d1 = 10,
                                    int d2 = 2);

// Gaussian classical product state: each of the 2N amplitudes has
// independent standard-normal real and imaginary parts, then each site pair
// is normalized to unit 2-norm so every member starts with Z_i(0) = 1.
ProductAmplitudes random_cps(Rng& rng, int n_sites);

}  // namespace xymetts
