#pragma once

#include <stdexcept>
#include <string>

namespace qst {

// Malformed input: bad spec, bad config, precondition violated.
struct InputError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Request exceeds a size cap (memory / dimension).
struct ResourceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A physical or numerical condition makes the request impossible
// (degenerate spectrum, no transferring mode, no route, ...).
struct DomainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace qst
