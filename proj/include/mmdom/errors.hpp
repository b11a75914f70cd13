#pragma once

#include <stdexcept>
#include <string>

namespace mmdom {

// Input or precondition violation (CLI exit status 2).
class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A numbered lemma hypothesis failed on the supplied data.
class HypothesisError : public PreconditionError {
 public:
  HypothesisError(int hypothesis, const std::string& what)
      : PreconditionError("hypothesis (" + std::to_string(hypothesis) + ") violated: " + what),
        hypothesis_(hypothesis),
        detail_(what) {}
  int hypothesis() const { return hypothesis_; }
  const std::string& detail() const { return detail_; }

 private:
  int hypothesis_;
  std::string detail_;
};

// A constructed object failed one of its own checked conclusions. Seeing this
// means a bug (or a transfer outside the representative's neighborhood).
class PostconditionError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Z is not in the checkable neighborhood of the representative.
class TransferError : public PreconditionError {
 public:
  using PreconditionError::PreconditionError;
};

class BudgetExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace mmdom
