#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace autoformal {

enum class ErrorKind : std::uint8_t {
  UnknownCharacter,
  UnbalancedBraces,
  InvalidSymbolTable,
  DuplicatePosition,
  SizeMismatch,
  IdOutOfRange,
  LengthExceeded,
  NonFiniteActivation,
  NonFiniteLoss,
  ShapeMismatch,
  EmptyTrainSet,
  EmptyEvalSet,
  LengthMismatch,
  InvalidHyperParams,
  InvalidCheckpoint,
  InvalidVocabulary,
  Io,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Every failure raised by the library. `line`/`column` are 1-based and zero
/// when the error has no source location.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message, std::size_t line = 0,
        std::size_t column = 0);

  ErrorKind kind() const noexcept { return kind_; }
  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

  /// Copy of this error with the line number replaced (used when a per-line
  /// operation is lifted to a whole file).
  Error at_line(std::size_t line) const;

 private:
  ErrorKind kind_;
  std::size_t line_;
  std::size_t column_;
};

}  // namespace autoformal
