#pragma once

#include <stdexcept>
#include <string>

namespace lrscb {

// Invalid parameters or mismatched dimensions. `field` names the offending
// configuration key when there is one.
class ConfigError : public std::invalid_argument {
 public:
  explicit ConfigError(const std::string& what, std::string field = {})
      : std::invalid_argument(what), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

// Not enough data to compute a requested statistic.
class InsufficientData : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace lrscb
