#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace arbor {

/// Base of every error raised by the library. Catch this to handle all of them.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DepthExceeded : public Error {
 public:
  using Error::Error;
};

class SymbolOutOfRange : public Error {
 public:
  using Error::Error;
};

class DegreeMismatch : public Error {
 public:
  using Error::Error;
};

class SchemaError : public Error {
 public:
  using Error::Error;
};

class UnknownGenerator : public Error {
 public:
  using Error::Error;
};

class BadPermutation : public Error {
 public:
  using Error::Error;
};

/// A computation hit its exploration cap. `partial()` is how far it got
/// (elements enumerated, words visited, ...); the partial result is never
/// returned as if it were complete.
class BudgetExceeded : public Error {
 public:
  BudgetExceeded(const std::string& what, std::size_t partial)
      : Error(what + " (partial count " + std::to_string(partial) + ")"), partial_(partial) {}
  std::size_t partial() const noexcept { return partial_; }

 private:
  std::size_t partial_;
};

class SourceNotUniform : public Error {
 public:
  using Error::Error;
};

class IncompleteCriticalData : public Error {
 public:
  IncompleteCriticalData(const std::string& what, long long deficit)
      : Error(what), deficit_(deficit) {}
  long long deficit() const noexcept { return deficit_; }

 private:
  long long deficit_;
};

class NotCritical : public Error {
 public:
  using Error::Error;
};

class NotPCF : public Error {
 public:
  using Error::Error;
};

/// A theorem-backed cross-check disagreed. Always a bug in the inputs' contract
/// or in this library, never an expected outcome.
class InternalInconsistency : public Error {
 public:
  using Error::Error;
};

class PreconditionNotChebyshevLike : public Error {
 public:
  using Error::Error;
};

class UnknownEntry : public Error {
 public:
  using Error::Error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A recursion/polynomial pairing violated a validator clause.
class ValidationFailure : public Error {
 public:
  ValidationFailure(const std::string& clause, const std::string& what)
      : Error("clause (" + clause + "): " + what), clause_(clause) {}
  const std::string& clause() const noexcept { return clause_; }

 private:
  std::string clause_;
};

}  // namespace arbor
