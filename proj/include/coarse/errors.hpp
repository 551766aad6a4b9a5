#pragma once

#include <stdexcept>
#include <string>

namespace coarse {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Unknown point, mismatched universes, empty fibers.
struct DomainError : Error {
  using Error::Error;
};

/// The finite window is too small to represent what was asked for.
struct TruncationError : Error {
  using Error::Error;
};

/// A configured cap (points, radius, universe size) was exceeded.
struct ResourceError : Error {
  using Error::Error;
};

/// Sub-certificate parameters do not support the requested targets.
struct ParameterMismatch : Error {
  using Error::Error;
};

/// Certificate or input file does not match the schema.
struct MalformedCertificate : Error {
  using Error::Error;
};

/// A membership oracle that is not closed under products and inverses.
struct InvalidSubgroup : Error {
  using Error::Error;
};

}  // namespace coarse
