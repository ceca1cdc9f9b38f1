#pragma once

#include <stdexcept>
#include <string>

namespace nbp {

/// Malformed model construction: unknown variable, bad bounds, wrong kind.
struct ModelError : std::runtime_error {
  explicit ModelError(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed input file; message names the offending field or line.
struct ParseError : std::runtime_error {
  explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

/// A size guard was exceeded (enumeration or exact-fit scale limits).
struct GuardError : std::runtime_error {
  explicit GuardError(const std::string& what) : std::runtime_error(what) {}
};

/// Invalid run configuration (bad key, bad combination).
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// The bilevel program itself has no feasible tender.
struct InfeasibleError : std::runtime_error {
  explicit InfeasibleError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace nbp
