#ifndef FLDP_PROTOCOL_HPP
#define FLDP_PROTOCOL_HPP

#include <Eigen/Dense>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "fldp/edge_rate.hpp"

namespace fldp {

// Float-safe threshold for "strictly positive rate".
inline constexpr double kRateEps = 1e-12;

struct ValidationIssue {
  std::string check;
  double time = 0.0;
  std::string detail;
};

struct ValidationReport {
  bool passed = false;
  std::vector<ValidationIssue> violations;
  std::vector<double> irreducible_times;  // candidate t* values
  int grid_points = 0;
};

enum class Direction { Forward, Backward };

/// Immutable time-periodic rate protocol: the generator family A(t).
/// The validation report is computed eagerly at construction (failures are
/// recorded, not thrown); operations that require well-posed dynamics call
/// require_valid().
class RateProtocol {
 public:
  using EdgeMap = std::map<std::pair<int, int>, EdgeRate>;

  RateProtocol(int n_states, double period, EdgeMap edges,
               std::string description = {}, int validation_grid = 1024);

  int n_states() const { return n_; }
  double period() const { return period_; }
  const std::string& description() const { return description_; }
  const EdgeMap& edges() const { return edges_; }

  // k_ij(t); 0 when the edge is absent.
  double rate(int i, int j, double t) const;
  bool has_edge(int i, int j) const;

  const ValidationReport& validation() const { return report_; }
  void require_valid() const;  // throws ConfigError when validation failed

  // max_t ||A(t) - A(T - t)||_inf < 1e-10 on the validation grid
  bool time_symmetric() const { return time_symmetric_; }

  // The protocol with rates k_ij(T - t): driving traversed backward.
  RateProtocol time_reversed() const;

  static RateProtocol from_json(const std::string& json_text,
                                int validation_grid = 1024);
  std::string to_json() const;

 private:
  int n_;
  double period_;
  EdgeMap edges_;
  std::vector<const EdgeRate*> flat_;  // n*n lookup, nullptr = absent
  std::string description_;
  ValidationReport report_;
  bool time_symmetric_ = false;

  void rebuild_flat();
};

// Generator A(t): off-diagonal (i,j) = k_ij(t), diagonal -K_i(t).
Eigen::MatrixXd generator(const RateProtocol& p, double t);

// Heat-dissipation tilt: off-diagonal k_ij^{1+lambda} k_ji^{-lambda},
// diagonal -K_i.  A one-sided zero rate raises a ValidationError.
Eigen::MatrixXd tilted_w(const RateProtocol& p, double t, double lambda);

// Entropy-production tilt: off-diagonal additionally carries
// (mu_i/mu_j)^lambda; the diagonal depends on the process direction:
//   Forward:  -[(1-lambda) K_i + lambda C_i]
//   Backward: -[(1+lambda) K_i - lambda C_i]
// with C_i = sum_{l != i} k_li mu_l / mu_i.  The law must be strictly
// positive component-wise.
Eigen::MatrixXd tilted_s(const RateProtocol& p, double t, double lambda,
                         const Eigen::VectorXd& law,
                         Direction direction = Direction::Forward);

// Runs all protocol invariant checks on a uniform grid over [0, T).
ValidationReport validate(const RateProtocol& p, int grid_points);

}  // namespace fldp

#endif
