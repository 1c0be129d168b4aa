#pragma once

#include <stdexcept>
#include <string>

namespace mrccc {

// Input does not satisfy a documented precondition (shapes, finiteness, ranges).
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent external data (CSV, manifest).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A numerical routine failed; `step` names the sampler step or solver call.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(std::string step, const std::string& what)
      : std::runtime_error(step + ": " + what), step_(std::move(step)) {}

  const std::string& step() const noexcept { return step_; }

 private:
  std::string step_;
};

}  // namespace mrccc
