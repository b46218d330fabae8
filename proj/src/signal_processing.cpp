#include "xymetts/signal_processing.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace xymetts {

namespace {

void check_savgol_args(std::size_t n, int window, int order) {
  if (window < 1 || window % 2 == 0) {
    throw std::invalid_argument("savgol: window must be a positive odd integer");
  }
  if (order < 0 || order >= window) {
    throw std::invalid_argument("savgol: order must satisfy 0 <= order < window");
  }
  if (n < static_cast<std::size_t>(window)) {
    throw std::invalid_argument("savgol: sequence length " + std::to_string(n) +
                                " shorter than window " + std::to_string(window));
  }
}

// Least-squares polynomial coefficients (ascending powers of the integer
// offset) for the window starting at index `start`.
Eigen::VectorXd fit_window(const std::vector<double>& values, std::size_t start,
                           int window, int order) {
  Eigen::MatrixXd v(window, order + 1);
  Eigen::VectorXd y(window);
  for (int r = 0; r < window; ++r) {
    double p = 1.0;
    for (int c = 0; c <= order; ++c) {
      v(r, c) = p;
      p *= static_cast<double>(r);
    }
    y(r) = values[start + static_cast<std::size_t>(r)];
  }
  return v.colPivHouseholderQr().solve(y);
}

double poly_eval(const Eigen::VectorXd& coeffs, double t) {
  double acc = 0.0;
  for (Eigen::Index c = coeffs.size() - 1; c >= 0; --c) acc = acc * t + coeffs(c);
  return acc;
}

double poly_deriv_eval(const Eigen::VectorXd& coeffs, double t) {
  double acc = 0.0;
  for (Eigen::Index c = coeffs.size() - 1; c >= 1; --c) {
    acc = acc * t + static_cast<double>(c) * coeffs(c);
  }
  return acc;
}

// Shared implementation: evaluates either the fitted polynomial or its
// derivative (in index units) at every point.
std::vector<double> savgol_impl(const std::vector<double>& values, int window,
                                int order, bool derivative) {
  const std::size_t n = values.size();
  check_savgol_args(n, window, order);
  const int hw = window / 2;
  std::vector<double> out(n);

  const Eigen::VectorXd head = fit_window(values, 0, window, order);
  for (int i = 0; i < hw; ++i) {
    out[static_cast<std::size_t>(i)] =
        derivative ? poly_deriv_eval(head, i) : poly_eval(head, i);
  }
  for (std::size_t i = static_cast<std::size_t>(hw); i + static_cast<std::size_t>(hw) < n;
       ++i) {
    const Eigen::VectorXd c = fit_window(values, i - static_cast<std::size_t>(hw), window, order);
    out[i] = derivative ? poly_deriv_eval(c, hw) : poly_eval(c, hw);
  }
  const Eigen::VectorXd tail = fit_window(values, n - static_cast<std::size_t>(window), window, order);
  for (int i = window - hw; i < window; ++i) {
    out[n - static_cast<std::size_t>(window) + static_cast<std::size_t>(i)] =
        derivative ? poly_deriv_eval(tail, i) : poly_eval(tail, i);
  }
  return out;
}

}  // namespace

std::vector<double> savgol(const std::vector<double>& values, int window, int order) {
  return savgol_impl(values, window, order, false);
}

std::vector<double> derivative_savgol(const std::vector<double>& values,
                                      const std::vector<double>& taus, int window,
                                      int order) {
  if (taus.size() != values.size()) {
    throw std::invalid_argument("derivative_savgol: taus/values size mismatch");
  }
  if (taus.size() < 2) {
    throw std::invalid_argument("derivative_savgol: need at least two points");
  }
  const double dt = (taus.back() - taus.front()) / static_cast<double>(taus.size() - 1);
  if (!(dt > 0.0)) {
    throw std::invalid_argument("derivative_savgol: taus must be increasing");
  }
  for (std::size_t i = 1; i < taus.size(); ++i) {
    const double step = taus[i] - taus[i - 1];
    if (std::abs(step - dt) > 0.01 * dt) {
      throw std::invalid_argument("derivative_savgol: non-uniform tau spacing at index " +
                                  std::to_string(i));
    }
  }
  std::vector<double> d = savgol_impl(values, window, order, true);
  for (auto& v : d) v /= dt;
  return d;
}

std::size_t monotone_prefix(const std::vector<double>& values) {
  if (values.empty()) return 0;
  std::size_t len = 1;
  while (len < values.size() && values[len] > values[len - 1]) ++len;
  return len;
}

PchipInterpolant::PchipInterpolant(std::vector<double> xs, std::vector<double> ys)
    : xs_(std::move(xs)), ys_(std::move(ys)) {
  const std::size_t n = xs_.size();
  if (n < 2) throw std::invalid_argument("PchipInterpolant: need at least two knots");
  if (ys_.size() != n) throw std::invalid_argument("PchipInterpolant: xs/ys size mismatch");
  for (std::size_t i = 1; i < n; ++i) {
    if (!(xs_[i] > xs_[i - 1])) {
      throw std::invalid_argument("PchipInterpolant: xs must be strictly increasing");
    }
  }
  // Fritsch-Carlson slopes.
  std::vector<double> h(n - 1), delta(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    h[i] = xs_[i + 1] - xs_[i];
    delta[i] = (ys_[i + 1] - ys_[i]) / h[i];
  }
  slopes_.assign(n, 0.0);
  if (n == 2) {
    slopes_[0] = slopes_[1] = delta[0];
  } else {
    for (std::size_t i = 1; i + 1 < n; ++i) {
      if (delta[i - 1] == 0.0 || delta[i] == 0.0 || (delta[i - 1] < 0) != (delta[i] < 0)) {
        slopes_[i] = 0.0;  // local extremum
      } else {
        const double w1 = 2.0 * h[i] + h[i - 1];
        const double w2 = h[i] + 2.0 * h[i - 1];
        slopes_[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
      }
    }
    // One-sided endpoint slopes, clipped to preserve shape.
    auto endpoint = [](double h0, double h1, double d0, double d1) {
      double m = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
      if (m * d0 <= 0.0) {
        m = 0.0;
      } else if ((d0 < 0) != (d1 < 0) && std::abs(m) > 3.0 * std::abs(d0)) {
        m = 3.0 * d0;
      }
      return m;
    };
    slopes_[0] = endpoint(h[0], h[1], delta[0], delta[1]);
    slopes_[n - 1] = endpoint(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
  }
}

double PchipInterpolant::operator()(double x) const {
  if (xs_.empty()) throw std::logic_error("PchipInterpolant: not initialized");
  if (x < xs_.front() || x > xs_.back()) {
    throw std::out_of_range("PchipInterpolant: query " + std::to_string(x) +
                            " outside [" + std::to_string(xs_.front()) + ", " +
                            std::to_string(xs_.back()) + "]");
  }
  const auto it = std::upper_bound(xs_.begin(), xs_.end(), x);
  std::size_t i = (it == xs_.begin()) ? 0 : static_cast<std::size_t>(it - xs_.begin()) - 1;
  if (i >= xs_.size() - 1) i = xs_.size() - 2;
  const double h = xs_[i + 1] - xs_[i];
  const double t = (x - xs_[i]) / h;
  const double t2 = t * t, t3 = t2 * t;
  const double h00 = 2 * t3 - 3 * t2 + 1;
  const double h10 = t3 - 2 * t2 + t;
  const double h01 = -2 * t3 + 3 * t2;
  const double h11 = t3 - t2;
  return h00 * ys_[i] + h10 * h * slopes_[i] + h01 * ys_[i + 1] + h11 * h * slopes_[i + 1];
}

PchipInterpolant invert_map(const std::vector<double>& taus,
                            const std::vector<double>& betas) {
  if (taus.size() != betas.size()) {
    throw std::invalid_argument("invert_map: taus/betas size mismatch");
  }
  return PchipInterpolant(betas, taus);
}

}  // namespace xymetts
