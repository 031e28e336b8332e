#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace recomp {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Failures of the environment rather than of the program under repair
/// (missing compiler, unspawnable binary, unreachable backend). These abort a
/// run; everything else is recorded as data in an outcome.
class InfrastructureError : public Error {
 public:
  using Error::Error;
};

class ManifestParseError : public Error {
 public:
  using Error::Error;
};

class MissingArtifact : public Error {
 public:
  explicit MissingArtifact(std::string path)
      : Error("missing artifact: " + path), path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

class InvalidRange : public Error {
 public:
  using Error::Error;
};

class UnbalancedBraces : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class CompilerNotFound : public InfrastructureError {
 public:
  using InfrastructureError::InfrastructureError;
};

class WorkdirError : public InfrastructureError {
 public:
  using InfrastructureError::InfrastructureError;
};

class CompileTimeout : public Error {
 public:
  using Error::Error;
};

class ExecError : public InfrastructureError {
 public:
  using InfrastructureError::InfrastructureError;
};

class NotASanitizerReport : public Error {
 public:
  using Error::Error;
};

class MissingSlot : public Error {
 public:
  explicit MissingSlot(std::string slot)
      : Error("missing prompt slot: " + slot), slot_(std::move(slot)) {}
  const std::string& slot() const noexcept { return slot_; }

 private:
  std::string slot_;
};

class PreconditionViolation : public Error {
 public:
  using Error::Error;
};

class EmptyExtraction : public Error {
 public:
  EmptyExtraction() : Error("no code-like content in response") {}
};

class BackendUnavailable : public InfrastructureError {
 public:
  using InfrastructureError::InfrastructureError;
};

class FixtureExhausted : public InfrastructureError {
 public:
  using InfrastructureError::InfrastructureError;
};

/// The backend rejected the request as too long for the model's window.
class ContextOverflow : public Error {
 public:
  using Error::Error;
};

class MismatchedRecords : public Error {
 public:
  using Error::Error;
};

/// Malformed line in an outcomes file.
class OutcomeParseError : public Error {
 public:
  using Error::Error;
};

}  // namespace recomp
