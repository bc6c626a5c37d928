#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace dermanet {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Malformed input text (CSV, config file, ...).
class FormatError : public Error {
public:
  using Error::Error;
};

/// A ground-truth row whose one-hot columns do not name exactly one category.
class AmbiguousLabelError : public FormatError {
public:
  AmbiguousLabelError(std::string image_id, const std::string& what)
      : FormatError(what), image_id_(std::move(image_id)) {}
  const std::string& image_id() const { return image_id_; }

private:
  std::string image_id_;
};

/// File could not be read, decoded, or verified (weights, images, manifests).
class LoadError : public Error {
public:
  using Error::Error;
};

/// An API precondition was violated by the caller.
class ContractViolation : public Error {
public:
  using Error::Error;
};

/// Invalid or inconsistent configuration values.
class ConfigError : public Error {
public:
  using Error::Error;
};

/// Non-finite values where finite arithmetic is required.
class NumericError : public Error {
public:
  using Error::Error;
};

/// Checkpoint container could not be restored (bad magic, version, truncation).
class CheckpointError : public Error {
public:
  CheckpointError(const std::string& what, int format_version)
      : Error(what), format_version_(format_version) {}
  int format_version() const { return format_version_; }

private:
  int format_version_ = 0;
};

/// Training produced a non-finite loss; carries the step diagnostics.
class TrainingDiverged : public Error {
public:
  TrainingDiverged(const std::string& what, long step, double lr,
                   std::vector<std::string> batch_ids)
      : Error(what), step_(step), lr_(lr), batch_ids_(std::move(batch_ids)) {}
  long step() const { return step_; }
  double lr() const { return lr_; }
  const std::vector<std::string>& batch_ids() const { return batch_ids_; }

private:
  long step_;
  double lr_;
  std::vector<std::string> batch_ids_;
};

}  // namespace dermanet
