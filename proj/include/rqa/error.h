#ifndef RQA_ERROR_H_
#define RQA_ERROR_H_

#include <stdexcept>
#include <string>

namespace rqa {

// Raised when a caller breaks an operation's precondition (shape mismatch,
// out-of-range id, invalid hyperparameter). Indicates a programming error.
class ContractViolation : public std::logic_error {
 public:
  explicit ContractViolation(const std::string& what) : std::logic_error(what) {}
};

// File could not be opened, read, or written.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

// On-disk artifact is malformed or does not match the running configuration.
class FormatError : public std::runtime_error {
 public:
  explicit FormatError(const std::string& what) : std::runtime_error(what) {}
};

// Training hit a non-finite loss or gradient.
class TrainingAborted : public std::runtime_error {
 public:
  explicit TrainingAborted(const std::string& what) : std::runtime_error(what) {}
};

#define RQA_REQUIRE(cond, msg)                 \
  do {                                         \
    if (!(cond)) throw ::rqa::ContractViolation(msg); \
  } while (0)

}  // namespace rqa

#endif  // RQA_ERROR_H_
