#ifndef FLDP_ERRORS_HPP
#define FLDP_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace fldp {

// Error categories; values double as CLI exit codes.
enum class ErrorCode : int {
  Config = 2,
  Validation = 3,
  Numerical = 4,
  Statistical = 5,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

struct ConfigError : Error {
  explicit ConfigError(const std::string& w) : Error(ErrorCode::Config, w) {}
};

// Misconfigured or unvalidated dynamics: one-sided edges, failed protocol
// checks, misaligned grids fed to cross-checks.
struct ValidationError : Error {
  explicit ValidationError(const std::string& w)
      : Error(ErrorCode::Validation, w) {}
};

struct NumericalError : Error {
  explicit NumericalError(const std::string& w)
      : Error(ErrorCode::Numerical, w) {}
};

struct StatisticalError : Error {
  explicit StatisticalError(const std::string& w)
      : Error(ErrorCode::Statistical, w) {}
};

}  // namespace fldp

#endif
