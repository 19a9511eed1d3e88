#ifndef FLDP_EDGE_RATE_HPP
#define FLDP_EDGE_RATE_HPP

#include <string>
#include <vector>

namespace fldp {

/// A single transition-rate function k_ij(t).  All kinds are T-periodic by
/// construction; evaluation reduces t modulo the period.
class EdgeRate {
 public:
  enum class Kind { Constant, Fourier, Piecewise };

  struct Piece {
    double begin = 0.0;
    double end = 0.0;
    double value = 0.0;
  };

  static EdgeRate constant(double value);
  // c0 + sum_n a_n cos(2 pi n t / T) + b_n sin(2 pi n t / T)
  static EdgeRate fourier(double c0, std::vector<double> cos_coeffs,
                          std::vector<double> sin_coeffs);
  // Contiguous constant pieces covering [0, T), joined by linear ramps of
  // width `smoothing_width` centered on each boundary (including the wrap).
  static EdgeRate piecewise(std::vector<Piece> pieces, double smoothing_width);

  Kind kind() const { return kind_; }
  bool reversed() const { return reversed_; }

  double operator()(double t, double period) const;

  // Same rate traversed in reversed protocol time, k(T - t).
  EdgeRate time_reversed() const;

  // For the periodicity validation check: evaluate without first reducing
  // t modulo the period (piecewise subtracts whole periods explicitly).
  double eval_unreduced(double t, double period) const;

  double constant_value() const { return constant_; }
  double fourier_mean() const { return c0_; }
  const std::vector<double>& fourier_cos() const { return cos_coeffs_; }
  const std::vector<double>& fourier_sin() const { return sin_coeffs_; }
  const std::vector<Piece>& pieces() const { return pieces_; }
  double smoothing_width() const { return smoothing_width_; }

 private:
  EdgeRate() = default;
  double eval_reduced(double tm, double period) const;

  Kind kind_ = Kind::Constant;
  bool reversed_ = false;
  double constant_ = 0.0;
  double c0_ = 0.0;
  std::vector<double> cos_coeffs_;
  std::vector<double> sin_coeffs_;
  std::vector<Piece> pieces_;
  double smoothing_width_ = 0.0;
};

}  // namespace fldp

#endif
