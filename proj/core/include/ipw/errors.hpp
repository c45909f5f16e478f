#pragma once

#include <stdexcept>
#include <string>

namespace ipw {

/// A precondition of a library call was not met by the caller.
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Invalid experiment or detector configuration. `field` names the offending
/// entry using a dotted path such as "detectors[1].t_h".
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& message)
      : std::runtime_error(field + ": " + message), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

}  // namespace ipw
