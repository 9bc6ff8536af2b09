#pragma once

#include <stdexcept>
#include <string>

namespace mmrl {

// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

// Riccati iteration did not reach the requested residual.
class NonConvergence : public Error {
 public:
  using Error::Error;
};

class CandidateUnstabilizable : public Error {
 public:
  using Error::Error;
};

// Information matrix not positive definite (insufficient excitation so far).
class SingularInformation : public Error {
 public:
  using Error::Error;
};

class PolicySynthesisFailed : public Error {
 public:
  using Error::Error;
};

class EmptyInput : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

}  // namespace mmrl
