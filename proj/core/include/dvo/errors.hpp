#pragma once

#include <stdexcept>

namespace dvo {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Task exceeds the exhaustive-enumeration bound (B^D > kMaxLeaves).
struct EnumerabilityError : Error {
  using Error::Error;
};

/// Stepping past a terminal state, or querying a reward before one is reached.
struct IllegalTransitionError : Error {
  using Error::Error;
};

/// A quantity that should hold by construction failed its consistency check.
struct IntegrityError : Error {
  using Error::Error;
};

/// A trajectory could not be matched against a search tree.
struct ExtractionError : Error {
  using Error::Error;
};

/// Invalid or inconsistent configuration / input files.
struct ConfigError : Error {
  using Error::Error;
};

}  // namespace dvo
