#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace chgat {

enum class ErrorKind {
  file_missing,
  parse_error,
  duplicate_character,
  invariant_violation,
  unknown_character,
  dimension_mismatch,
  shape_mismatch,
  empty_name,
  name_too_long,
  unknown_variant,
  empty_training_set,
  diverged_loss,
  training_failed,
  checkpoint_error,
  invalid_argument,
};

/// Base of every error raised by the library. The kind lets callers map
/// failures onto exit codes without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class FileMissing : public Error {
 public:
  explicit FileMissing(const std::string& path)
      : Error(ErrorKind::file_missing, "file not found: " + path), path_(path) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& reason)
      : Error(ErrorKind::parse_error, "line " + std::to_string(line) + ": " + reason),
        line_(line),
        reason_(reason) {}
  std::size_t line() const noexcept { return line_; }
  const std::string& reason() const noexcept { return reason_; }

 private:
  std::size_t line_;
  std::string reason_;
};

class DuplicateCharacter : public Error {
 public:
  DuplicateCharacter(std::size_t line, const std::string& ch)
      : Error(ErrorKind::duplicate_character,
              "line " + std::to_string(line) + ": duplicate character " + ch),
        character_(ch) {}
  const std::string& character() const noexcept { return character_; }

 private:
  std::string character_;
};

class InvariantViolation : public Error {
 public:
  InvariantViolation(std::size_t line, const std::string& reason)
      : Error(ErrorKind::invariant_violation, "row " + std::to_string(line) + ": " + reason),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class DimensionMismatch : public Error {
 public:
  explicit DimensionMismatch(const std::string& what)
      : Error(ErrorKind::dimension_mismatch, "dimension mismatch: " + what) {}
};

class ShapeMismatch : public Error {
 public:
  explicit ShapeMismatch(const std::string& what)
      : Error(ErrorKind::shape_mismatch, "shape mismatch: " + what) {}
};

class UnknownCharacter : public Error {
 public:
  explicit UnknownCharacter(const std::string& ch)
      : Error(ErrorKind::unknown_character, "unknown character: " + ch) {}
};

class EmptyName : public Error {
 public:
  EmptyName() : Error(ErrorKind::empty_name, "empty name") {}
};

class NameTooLong : public Error {
 public:
  NameTooLong(std::size_t length, std::size_t limit)
      : Error(ErrorKind::name_too_long, "name has " + std::to_string(length) +
                                            " characters, limit is " + std::to_string(limit)) {}
};

class UnknownVariant : public Error {
 public:
  explicit UnknownVariant(const std::string& name)
      : Error(ErrorKind::unknown_variant, "unknown variant: " + name) {}
};

class EmptyTrainingSet : public Error {
 public:
  EmptyTrainingSet() : Error(ErrorKind::empty_training_set, "empty training set") {}
};

class DivergedLoss : public Error {
 public:
  DivergedLoss(std::size_t epoch, std::size_t batch, double value)
      : Error(ErrorKind::diverged_loss, "non-finite loss " + std::to_string(value) + " at epoch " +
                                            std::to_string(epoch) + ", batch " +
                                            std::to_string(batch)) {}
};

class TrainingFailed : public Error {
 public:
  explicit TrainingFailed(const std::string& what) : Error(ErrorKind::training_failed, what) {}
};

class CheckpointError : public Error {
 public:
  explicit CheckpointError(const std::string& what)
      : Error(ErrorKind::checkpoint_error, "checkpoint: " + what) {}
};

class InvalidArgument : public Error {
 public:
  explicit InvalidArgument(const std::string& what) : Error(ErrorKind::invalid_argument, what) {}
};

}  // namespace chgat
