#pragma once

#include <stdexcept>
#include <string>

namespace cranimem {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Argument outside its declared range.
class DomainError : public Error {
 public:
  DomainError(std::string field, const std::string& what)
      : Error(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Caller broke an operation's precondition.
class ContractError : public Error {
 public:
  using Error::Error;
};

// Base for failures that carry the model's raw output.
class RawTextError : public Error {
 public:
  RawTextError(const std::string& what, std::string raw)
      : Error(what), raw_(std::move(raw)) {}
  const std::string& raw() const noexcept { return raw_; }

 private:
  std::string raw_;
};

class ParseError : public RawTextError {
 public:
  using RawTextError::RawTextError;
};

class GateError : public RawTextError {
 public:
  GateError(const std::string& what, std::string raw, bool backend_unavailable = false)
      : RawTextError(what, std::move(raw)), backend_unavailable_(backend_unavailable) {}
  // True when the backend could not be reached, false for unusable output.
  bool backend_unavailable() const noexcept { return backend_unavailable_; }

 private:
  bool backend_unavailable_;
};

class ExtractionError : public RawTextError {
 public:
  using RawTextError::RawTextError;
};

class AnswerParseError : public RawTextError {
 public:
  using RawTextError::RawTextError;
};

class BackendUnavailable : public Error {
 public:
  using Error::Error;
};

// Scripted mock was asked something it has no answer for.
class MockMiss : public Error {
 public:
  using Error::Error;
};

class DuplicateItemError : public Error {
 public:
  using Error::Error;
};

class StoreCorruption : public Error {
 public:
  using Error::Error;
};

class PersistenceError : public Error {
 public:
  using Error::Error;
};

class ChecksumError : public PersistenceError {
 public:
  explicit ChecksumError(std::string file)
      : PersistenceError("checksum mismatch in " + file), file_(std::move(file)) {}
  const std::string& file() const noexcept { return file_; }

 private:
  std::string file_;
};

class VersionError : public PersistenceError {
 public:
  using PersistenceError::PersistenceError;
};

}  // namespace cranimem
