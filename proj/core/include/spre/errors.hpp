#pragma once

#include <stdexcept>
#include <string>

namespace spre {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class EmptyEntityError : public Error {
 public:
  EmptyEntityError() : Error("entity is empty after normalization") {}
};

class ParseFailure : public Error {
 public:
  using Error::Error;
};

/// A backend attempt failed in a way that is worth retrying (429, 5xx, connect error).
class TransientBackendError : public Error {
 public:
  using Error::Error;
};

/// Retries exhausted; the backend could not be reached at all.
class BackendUnavailable : public Error {
 public:
  using Error::Error;
};

/// The wire payload parsed but lacks the expected completion/embedding.
class MalformedResponse : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class ZeroVector : public Error {
 public:
  ZeroVector() : Error("cosine undefined for an all-zero vector") {}
};

/// Dataset file could not be parsed; carries the 1-based line number.
class FormatError : public Error {
 public:
  FormatError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class EmptyDataset : public Error {
 public:
  using Error::Error;
};

class InsufficientRelations : public Error {
 public:
  using Error::Error;
};

class MissingGold : public Error {
 public:
  using Error::Error;
};

}  // namespace spre
