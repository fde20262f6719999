#pragma once

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace rdq {

// Bad arguments or incompatible inputs (CLI exit code 2).
struct UsageError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Branch cut hits, division by zero, singular systems.
struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

// Quadrature or ODE failed to reach the requested tolerance (CLI exit code 3).
struct NonConvergence : std::runtime_error {
  NonConvergence(const std::string& what, std::vector<std::complex<double>> coarse = {},
                 std::vector<std::complex<double>> fine = {})
      : std::runtime_error(what), coarse_value(std::move(coarse)), fine_value(std::move(fine)) {}
  std::vector<std::complex<double>> coarse_value;
  std::vector<std::complex<double>> fine_value;
};

}  // namespace rdq
