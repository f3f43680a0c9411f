#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace abrsim {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SchedulingInPast : public Error {
 public:
  using Error::Error;
};

class InvalidContract : public Error {
 public:
  using Error::Error;
};

class SourceIdle : public Error {
 public:
  using Error::Error;
};

class DegenerateOptimal : public Error {
 public:
  using Error::Error;
};

class UnknownVc : public Error {
 public:
  using Error::Error;
};

class NegativeLoss : public Error {
 public:
  using Error::Error;
};

class InsufficientBuffer : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// One problem found while validating a scenario, keyed by the offending
/// configuration field (e.g. "vc 3.route").
struct FieldDiagnostic {
  std::string field;
  std::string message;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(std::vector<FieldDiagnostic> diagnostics);
  ConfigError(std::string field, std::string message);

  const std::vector<FieldDiagnostic>& diagnostics() const { return diagnostics_; }

 private:
  static std::string summarize(const std::vector<FieldDiagnostic>& d);
  std::vector<FieldDiagnostic> diagnostics_;
};

}  // namespace abrsim
