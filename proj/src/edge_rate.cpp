#include "fldp/edge_rate.hpp"

#include <algorithm>
#include <cmath>

#include "fldp/errors.hpp"

namespace fldp {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;

double reduce_mod(double t, double period) {
  double tm = std::fmod(t, period);
  if (tm < 0.0) tm += period;
  return tm;
}
}  // namespace

EdgeRate EdgeRate::constant(double value) {
  if (value < 0.0) throw ConfigError("constant rate must be nonnegative");
  EdgeRate r;
  r.kind_ = Kind::Constant;
  r.constant_ = value;
  return r;
}

EdgeRate EdgeRate::fourier(double c0, std::vector<double> cos_coeffs,
                           std::vector<double> sin_coeffs) {
  EdgeRate r;
  r.kind_ = Kind::Fourier;
  r.c0_ = c0;
  r.cos_coeffs_ = std::move(cos_coeffs);
  r.sin_coeffs_ = std::move(sin_coeffs);
  return r;
}

EdgeRate EdgeRate::piecewise(std::vector<Piece> pieces, double smoothing_width) {
  if (pieces.empty()) throw ConfigError("piecewise rate needs at least one piece");
  std::sort(pieces.begin(), pieces.end(),
            [](const Piece& a, const Piece& b) { return a.begin < b.begin; });
  for (std::size_t i = 0; i + 1 < pieces.size(); ++i) {
    if (std::abs(pieces[i].end - pieces[i + 1].begin) > 1e-12)
      throw ConfigError("piecewise rate pieces must be contiguous");
  }
  for (const Piece& p : pieces) {
    if (p.value < 0.0) throw ConfigError("piecewise rate values must be nonnegative");
    if (p.end <= p.begin) throw ConfigError("piecewise rate piece has empty interval");
  }
  if (smoothing_width < 0.0) throw ConfigError("smoothing width must be nonnegative");
  EdgeRate r;
  r.kind_ = Kind::Piecewise;
  r.pieces_ = std::move(pieces);
  r.smoothing_width_ = smoothing_width;
  return r;
}

EdgeRate EdgeRate::time_reversed() const {
  EdgeRate r = *this;
  r.reversed_ = !r.reversed_;
  return r;
}

double EdgeRate::operator()(double t, double period) const {
  double tm = reduce_mod(t, period);
  if (reversed_) tm = reduce_mod(period - tm, period);
  return eval_reduced(tm, period);
}

double EdgeRate::eval_unreduced(double t, double period) const {
  if (reversed_) return (*this)(t, period);
  switch (kind_) {
    case Kind::Constant:
      return constant_;
    case Kind::Fourier: {
      double v = c0_;
      for (std::size_t n = 0; n < cos_coeffs_.size(); ++n)
        v += cos_coeffs_[n] * std::cos(kTwoPi * double(n + 1) * t / period);
      for (std::size_t n = 0; n < sin_coeffs_.size(); ++n)
        v += sin_coeffs_[n] * std::sin(kTwoPi * double(n + 1) * t / period);
      return v;
    }
    case Kind::Piecewise: {
      double tm = t;
      while (tm >= period) tm -= period;
      while (tm < 0.0) tm += period;
      return eval_reduced(tm, period);
    }
  }
  return 0.0;
}

double EdgeRate::eval_reduced(double tm, double period) const {
  switch (kind_) {
    case Kind::Constant:
      return constant_;
    case Kind::Fourier: {
      double v = c0_;
      for (std::size_t n = 0; n < cos_coeffs_.size(); ++n)
        v += cos_coeffs_[n] * std::cos(kTwoPi * double(n + 1) * tm / period);
      for (std::size_t n = 0; n < sin_coeffs_.size(); ++n)
        v += sin_coeffs_[n] * std::sin(kTwoPi * double(n + 1) * tm / period);
      return v;
    }
    case Kind::Piecewise:
      break;
  }

  // Piecewise with C0 ramps across each boundary, wrap included.
  const double w = smoothing_width_;
  const std::size_t m = pieces_.size();
  // Which piece does tm fall in?
  std::size_t idx = m - 1;
  for (std::size_t i = 0; i < m; ++i) {
    if (tm >= pieces_[i].begin && tm < pieces_[i].end) {
      idx = i;
      break;
    }
  }
  double v = pieces_[idx].value;
  if (m == 1 || w <= 0.0) return v;

  // Ramp around the lower boundary of this piece (wrap for the first piece).
  const double lo = pieces_[idx].begin;
  const double prev = (idx == 0) ? pieces_[m - 1].value : pieces_[idx - 1].value;
  const double d_lo = tm - lo;
  if (d_lo < w / 2.0) {
    const double theta = 0.5 + d_lo / w;
    return prev + theta * (v - prev);
  }
  // Ramp around the upper boundary (wrap for the last piece).
  const double hi = pieces_[idx].end;
  const double next = (idx + 1 == m) ? pieces_[0].value : pieces_[idx + 1].value;
  const double d_hi = hi - tm;
  if (d_hi < w / 2.0) {
    const double theta = 0.5 - d_hi / w;
    return v + theta * (next - v);
  }
  return v;
}

}  // namespace fldp
