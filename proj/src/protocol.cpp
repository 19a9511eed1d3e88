#include "fldp/protocol.hpp"

#include <cmath>
#include <sstream>

#include <json.hpp>

#include "fldp/errors.hpp"

namespace fldp {

namespace {

// Strong connectivity of the eps-thresholded adjacency at time t.
bool strongly_connected(const RateProtocol& p, double t) {
  const int n = p.n_states();
  if (n == 1) return true;
  auto reach = [&](bool transpose) {
    std::vector<char> seen(n, 0);
    std::vector<int> stack{0};
    seen[0] = 1;
    int count = 1;
    while (!stack.empty()) {
      int u = stack.back();
      stack.pop_back();
      for (int v = 0; v < n; ++v) {
        if (v == u || seen[v]) continue;
        double k = transpose ? p.rate(v, u, t) : p.rate(u, v, t);
        if (k > kRateEps) {
          seen[v] = 1;
          ++count;
          stack.push_back(v);
        }
      }
    }
    return count == n;
  };
  return reach(false) && reach(true);
}

}  // namespace

RateProtocol::RateProtocol(int n_states, double period, EdgeMap edges,
                           std::string description, int validation_grid)
    : n_(n_states),
      period_(period),
      edges_(std::move(edges)),
      description_(std::move(description)) {
  if (n_ < 1) throw ConfigError("n_states must be positive");
  if (period_ <= 0.0) throw ConfigError("period must be positive");
  for (const auto& [key, _] : edges_) {
    auto [i, j] = key;
    if (i < 0 || i >= n_ || j < 0 || j >= n_ || i == j)
      throw ConfigError("edge (" + std::to_string(i) + "," + std::to_string(j) +
                        ") out of range");
  }
  rebuild_flat();
  report_ = validate(*this, validation_grid);

  double asym = 0.0;
  const int g = std::max(validation_grid, 16);
  for (int k = 0; k < g; ++k) {
    double t = period_ * double(k) / double(g);
    Eigen::MatrixXd d = generator(*this, t) - generator(*this, period_ - t);
    asym = std::max(asym, d.cwiseAbs().maxCoeff());
  }
  time_symmetric_ = asym < 1e-10;
}

void RateProtocol::rebuild_flat() {
  flat_.assign(std::size_t(n_) * n_, nullptr);
  for (const auto& [key, rate] : edges_)
    flat_[std::size_t(key.first) * n_ + key.second] = &rate;
}

double RateProtocol::rate(int i, int j, double t) const {
  const EdgeRate* e = flat_[std::size_t(i) * n_ + j];
  return e ? (*e)(t, period_) : 0.0;
}

bool RateProtocol::has_edge(int i, int j) const {
  return flat_[std::size_t(i) * n_ + j] != nullptr;
}

void RateProtocol::require_valid() const {
  if (report_.passed) return;
  std::string msg = "protocol failed validation";
  if (!report_.violations.empty())
    msg += ": " + report_.violations.front().check + " at t=" +
           std::to_string(report_.violations.front().time) + " (" +
           report_.violations.front().detail + ")";
  else if (report_.irreducible_times.empty())
    msg += ": no grid time with strongly connected adjacency";
  throw ConfigError(msg);
}

RateProtocol RateProtocol::time_reversed() const {
  EdgeMap rev;
  for (const auto& [key, rate] : edges_) rev.emplace(key, rate.time_reversed());
  return RateProtocol(n_, period_, std::move(rev),
                      description_.empty() ? "time-reversed"
                                           : description_ + " (time-reversed)",
                      report_.grid_points);
}

Eigen::MatrixXd generator(const RateProtocol& p, double t) {
  const int n = p.n_states();
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    double escape = 0.0;
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      double k = p.rate(i, j, t);
      a(i, j) = k;
      escape += k;
    }
    a(i, i) = -escape;
  }
  return a;
}

Eigen::MatrixXd tilted_w(const RateProtocol& p, double t, double lambda) {
  const int n = p.n_states();
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    double escape = 0.0;
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      const double kij = p.rate(i, j, t);
      const double kji = p.rate(j, i, t);
      escape += kij;
      if (kij <= kRateEps) {
        if (kji > kRateEps)
          throw ValidationError("ergodic consistency violated: k(" +
                                std::to_string(j + 1) + "," +
                                std::to_string(i + 1) + ") > 0 while reverse rate is 0 at t=" +
                                std::to_string(t));
        continue;  // edge absent in both directions
      }
      if (kji <= kRateEps)
        throw ValidationError("ergodic consistency violated: k(" +
                              std::to_string(i + 1) + "," + std::to_string(j + 1) +
                              ") > 0 while reverse rate is 0 at t=" + std::to_string(t));
      l(i, j) = (lambda == 0.0) ? kij
                                : std::pow(kij, 1.0 + lambda) * std::pow(kji, -lambda);
    }
    l(i, i) = -escape;
  }
  return l;
}

Eigen::MatrixXd tilted_s(const RateProtocol& p, double t, double lambda,
                         const Eigen::VectorXd& law, Direction direction) {
  const int n = p.n_states();
  if (law.size() != n) throw ConfigError("law dimension mismatch");
  for (int i = 0; i < n; ++i)
    if (!(law(i) > 1e-300))
      throw NumericalError("degenerate law: mu(" + std::to_string(i + 1) +
                           ") below positivity floor");
  Eigen::MatrixXd m = tilted_w(p, t, lambda);
  for (int i = 0; i < n; ++i) {
    double escape = 0.0;   // K_i
    double inflow = 0.0;   // C_i = sum_l k_li mu_l / mu_i
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      escape += p.rate(i, j, t);
      inflow += p.rate(j, i, t) * law(j) / law(i);
      if (m(i, j) != 0.0 && lambda != 0.0)
        m(i, j) *= std::pow(law(i) / law(j), lambda);
    }
    m(i, i) = (direction == Direction::Forward)
                  ? -((1.0 - lambda) * escape + lambda * inflow)
                  : -((1.0 + lambda) * escape - lambda * inflow);
  }
  return m;
}

ValidationReport validate(const RateProtocol& p, int grid_points) {
  if (grid_points < 16) throw ConfigError("validation grid needs >= 16 points");
  ValidationReport rep;
  rep.grid_points = grid_points;
  const int n = p.n_states();
  const double T = p.period();

  for (int g = 0; g < grid_points; ++g) {
    const double t = T * double(g) / double(grid_points);
    for (const auto& [key, rate] : p.edges()) {
      auto [i, j] = key;
      const double k = rate(t, T);
      const double k_wrap = rate.eval_unreduced(t + T, T);
      if (std::abs(k - k_wrap) >= 1e-10)
        rep.violations.push_back(
            {"periodicity", t,
             "edge (" + std::to_string(i + 1) + "," + std::to_string(j + 1) +
                 ") differs across one period by " + std::to_string(k - k_wrap)});
      if (k < 0.0)
        rep.violations.push_back(
            {"nonnegativity", t,
             "edge (" + std::to_string(i + 1) + "," + std::to_string(j + 1) +
                 ") = " + std::to_string(k)});
    }
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        const bool fwd = p.rate(i, j, t) > kRateEps;
        const bool bwd = p.rate(j, i, t) > kRateEps;
        if (fwd != bwd)
          rep.violations.push_back(
              {"ergodic-consistency", t,
               "edge (" + std::to_string(i + 1) + "," + std::to_string(j + 1) +
                   ") positive in one direction only"});
      }
    }
    if (strongly_connected(p, t)) rep.irreducible_times.push_back(t);
  }
  rep.passed = rep.violations.empty() && !rep.irreducible_times.empty();
  return rep;
}

// ---------------------------------------------------------------------------
// JSON schema: {"n_states": int, "period": float, "edges": [...], "description": str}
// States are 0-indexed in files.

RateProtocol RateProtocol::from_json(const std::string& json_text,
                                     int validation_grid) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("protocol JSON parse error: ") + e.what());
  }
  try {
    const int n = j.at("n_states").get<int>();
    const double T = j.at("period").get<double>();
    EdgeMap edges;
    for (const auto& je : j.at("edges")) {
      const int from = je.at("from").get<int>();
      const int to = je.at("to").get<int>();
      const std::string kind = je.at("kind").get<std::string>();
      EdgeRate rate = EdgeRate::constant(0.0);
      if (kind == "constant") {
        rate = EdgeRate::constant(je.at("value").get<double>());
      } else if (kind == "fourier") {
        std::vector<double> a, b;
        if (je.contains("cos")) a = je.at("cos").get<std::vector<double>>();
        if (je.contains("sin")) b = je.at("sin").get<std::vector<double>>();
        rate = EdgeRate::fourier(je.at("mean").get<double>(), std::move(a),
                                 std::move(b));
      } else if (kind == "piecewise") {
        std::vector<EdgeRate::Piece> pieces;
        for (const auto& jp : je.at("pieces"))
          pieces.push_back({jp.at("begin").get<double>(),
                            jp.at("end").get<double>(),
                            jp.at("value").get<double>()});
        // Default ramp width T/100 per piecewise smoothing convention.
        const double w = je.contains("smoothing_width")
                             ? je.at("smoothing_width").get<double>()
                             : T / 100.0;
        rate = EdgeRate::piecewise(std::move(pieces), w);
      } else {
        throw ConfigError("unknown edge kind: " + kind);
      }
      if (!edges.emplace(std::make_pair(from, to), std::move(rate)).second)
        throw ConfigError("duplicate edge (" + std::to_string(from) + "," +
                          std::to_string(to) + ")");
    }
    std::string desc = j.value("description", std::string{});
    return RateProtocol(n, T, std::move(edges), std::move(desc), validation_grid);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("protocol JSON schema error: ") + e.what());
  }
}

std::string RateProtocol::to_json() const {
  nlohmann::json j;
  j["n_states"] = n_;
  j["period"] = period_;
  j["description"] = description_;
  j["edges"] = nlohmann::json::array();
  for (const auto& [key, rate] : edges_) {
    nlohmann::json je;
    je["from"] = key.first;
    je["to"] = key.second;
    switch (rate.kind()) {
      case EdgeRate::Kind::Constant:
        je["kind"] = "constant";
        je["value"] = rate.constant_value();
        break;
      case EdgeRate::Kind::Fourier:
        je["kind"] = "fourier";
        je["mean"] = rate.fourier_mean();
        je["cos"] = rate.fourier_cos();
        je["sin"] = rate.fourier_sin();
        break;
      case EdgeRate::Kind::Piecewise: {
        je["kind"] = "piecewise";
        je["smoothing_width"] = rate.smoothing_width();
        je["pieces"] = nlohmann::json::array();
        for (const auto& piece : rate.pieces())
          je["pieces"].push_back({{"begin", piece.begin},
                                  {"end", piece.end},
                                  {"value", piece.value}});
        break;
      }
    }
    j["edges"].push_back(std::move(je));
  }
  return j.dump(2);
}

}  // namespace fldp
