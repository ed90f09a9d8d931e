#pragma once

#include <stdexcept>
#include <string>

namespace mmlp_lab {

/// Harness failure with a stable machine-readable code
/// (config, checkpoint, stale_config, io, diverged).
class LabError : public std::runtime_error {
 public:
  LabError(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}
  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

}  // namespace mmlp_lab
