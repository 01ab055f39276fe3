#pragma once

#include <stdexcept>
#include <string>

namespace urnfield {

// Precondition on a caller-supplied argument was violated.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A model-level requirement failed at run time (divergent tail, zero pool
// weight, hypothesis of a lemma not met by the supplied sequence, ...).
class ConditionViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A root-finder or search could not produce the requested object.
class NotFound : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Numerical bookkeeping went out of tolerance; indicates a bug, not a model event.
class InternalError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace urnfield
