#pragma once

#include <stdexcept>
#include <string>

namespace fraclab {

// Bad arguments, shapes or configuration values.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A requested problem exceeds a desk-scale cap (node count, unknowns).
class CapacityError : public std::length_error {
 public:
  using std::length_error::length_error;
};

// A numerical method did not reach its tolerance. Carries what it did reach.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& what, double achieved)
      : std::runtime_error(what + " (achieved " + std::to_string(achieved) + ")"),
        achieved_(achieved) {}

  double achieved() const noexcept { return achieved_; }

 private:
  double achieved_;
};

// A manufactured solution failed its admissibility certificate.
class CertificateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace fraclab
