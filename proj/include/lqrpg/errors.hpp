#pragma once

#include <stdexcept>
#include <string>

namespace lqrpg {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
public:
  using Error::Error;
};

class InvalidParameter : public Error {
public:
  using Error::Error;
};

/// A gain failed the rho(sqrt(gamma) * (A - B K)) < 1 test where one was required.
class NotStabilizing : public Error {
public:
  using Error::Error;
};

/// I - gamma (A_cl^T kron A_cl^T) is too ill-conditioned to solve against.
class SingularT : public Error {
public:
  using Error::Error;
};

class NoConvergence : public Error {
public:
  using Error::Error;
};

class DirectionError : public Error {
public:
  using Error::Error;
};

class LineSearchFailure : public Error {
public:
  using Error::Error;
};

class SeedNotStabilizing : public Error {
public:
  using Error::Error;
};

class PerturbationLeftStabilizingSet : public Error {
public:
  using Error::Error;
};

class DimensionUnsupported : public Error {
public:
  using Error::Error;
};

class ConfigError : public Error {
public:
  using Error::Error;
};

} // namespace lqrpg
