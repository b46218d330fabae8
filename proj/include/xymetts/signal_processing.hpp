#pragma once

#include <cstddef>
#include <vector>

namespace xymetts {

// Savitzky-Golay smoothing: least-squares local polynomial of the given
// order over an odd window. Endpoints are handled by fitting the first/last
// full window once and evaluating its polynomial at the edge points (no
// reflection padding).
std::vector<double> savgol(const std::vector<double>& values, int window, int order);

// Derivative of the local polynomial fit with respect to tau at each point.
// Requires (near-)uniform tau spacing; deviations beyond 1% are rejected.
std::vector<double> derivative_savgol(const std::vector<double>& values,
                                      const std::vector<double>& taus, int window,
                                      int order);

// Length of the longest strictly increasing prefix.
std::size_t monotone_prefix(const std::vector<double>& values);

// Shape-preserving piecewise-cubic Hermite interpolant (Fritsch-Carlson
// slopes). Monotone data produce a monotone interpolant with no overshoot;
// non-monotone data get zero slope at interior extrema.
class PchipInterpolant {
 public:
  PchipInterpolant() = default;
  // xs strictly increasing; ys arbitrary.
  PchipInterpolant(std::vector<double> xs, std::vector<double> ys);

  double operator()(double x) const;  // range error outside [xs.front(), xs.back()]
  double x_min() const { return xs_.front(); }
  double x_max() const { return xs_.back(); }
  std::size_t size() const { return xs_.size(); }

 private:
  std::vector<double> xs_, ys_, slopes_;
};

// Monotone interpolant of tau as a function of beta, built from strictly
// increasing betas. Queries outside the data range throw.
PchipInterpolant invert_map(const std::vector<double>& taus,
                            const std::vector<double>& betas);

}  // namespace xymetts
