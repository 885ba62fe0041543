#pragma once

#include <stdexcept>
#include <string>

namespace maad {

// Caller broke a precondition (shape mismatch, bad argument).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// A quantity that must be finite was not.
class NumericError : public std::runtime_error {
 public:
  NumericError(const std::string& what, double value)
      : std::runtime_error(what + " (value=" + std::to_string(value) + ")"), value_(value) {}
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
  double value() const { return value_; }

 private:
  double value_ = 0.0;
};

class InfeasibleTransition : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class EmptyBufferError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class EmptyResultError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DegenerateInput : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class AbsoluteContinuityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw ContractViolation(msg);
}

}  // namespace maad
