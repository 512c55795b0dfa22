#pragma once

#include <stdexcept>
#include <string>

namespace cpt {

/// Base class for all errors raised by this library.
class error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid argument values (non-finite parameters, negative precipitation, ...).
class domain_error : public error {
 public:
  using error::error;
};

/// The truncated series window would exceed the hard term cap.
/// Carries the offending parameter values in the message.
class series_error : public error {
 public:
  using error::error;
};

/// A latent recursion produced a non-finite or non-positive parameter.
class divergence_error : public error {
 public:
  divergence_error(const std::string& what, long long first_bad_index)
      : error(what), index(first_bad_index) {}
  long long index;
};

/// An MCMC kernel could not complete (NaN target, unbounded bracket, ...).
class kernel_error : public error {
 public:
  using error::error;
};

/// The naive moment estimators are outside their support.
class init_error : public error {
 public:
  using error::error;
};

/// Malformed or inconsistent input data / files.
class data_error : public error {
 public:
  using error::error;
};

/// Bad run configuration.
class config_error : public error {
 public:
  using error::error;
};

/// A chain aborted mid-run; `state_blob` holds the serialized crash state
/// so the failure can be inspected offline.
class chain_abort_error : public error {
 public:
  chain_abort_error(const std::string& what, std::string blob)
      : error(what), state_blob(std::move(blob)) {}
  std::string state_blob;
};

}  // namespace cpt
