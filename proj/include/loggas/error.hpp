#pragma once

#include <stdexcept>
#include <string>

namespace loggas {

// Machine-readable failure categories. The CLI maps these to exit codes and
// one-line diagnoses; library code throws them directly.
enum class ErrorCode {
  ok = 0,
  regularity,          // derivative order exceeds declared regularity
  unknown_catalog,     // name not in the potential/measure catalog
  convergence,         // optimizer failed to reach first-order stationarity
  window_too_small,    // detected support touches the grid window
  proximity,           // evaluation point too close to the support
  domain,              // argument outside the operation's domain
  admissibility,       // (X1)/(X2) conditions not satisfied
  step_size,           // |t| exceeds t_max for the transport
  identity_violation,  // paired identities disagree beyond tolerance
  insufficient_samples,
  io_error,
  config_invalid,
};

inline const char* error_code_name(ErrorCode c) {
  switch (c) {
    case ErrorCode::ok: return "ok";
    case ErrorCode::regularity: return "regularity";
    case ErrorCode::unknown_catalog: return "unknown_catalog";
    case ErrorCode::convergence: return "convergence";
    case ErrorCode::window_too_small: return "window_too_small";
    case ErrorCode::proximity: return "proximity";
    case ErrorCode::domain: return "domain";
    case ErrorCode::admissibility: return "admissibility";
    case ErrorCode::step_size: return "step_size";
    case ErrorCode::identity_violation: return "identity_violation";
    case ErrorCode::insufficient_samples: return "insufficient_samples";
    case ErrorCode::io_error: return "io_error";
    case ErrorCode::config_invalid: return "config_invalid";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace loggas
