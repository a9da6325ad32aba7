#include "autoformal/error.hpp"

namespace autoformal {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::UnknownCharacter: return "UnknownCharacter";
    case ErrorKind::UnbalancedBraces: return "UnbalancedBraces";
    case ErrorKind::InvalidSymbolTable: return "InvalidSymbolTable";
    case ErrorKind::DuplicatePosition: return "DuplicatePosition";
    case ErrorKind::SizeMismatch: return "SizeMismatch";
    case ErrorKind::IdOutOfRange: return "IdOutOfRange";
    case ErrorKind::LengthExceeded: return "LengthExceeded";
    case ErrorKind::NonFiniteActivation: return "NonFiniteActivation";
    case ErrorKind::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::EmptyTrainSet: return "EmptyTrainSet";
    case ErrorKind::EmptyEvalSet: return "EmptyEvalSet";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::InvalidHyperParams: return "InvalidHyperParams";
    case ErrorKind::InvalidCheckpoint: return "InvalidCheckpoint";
    case ErrorKind::InvalidVocabulary: return "InvalidVocabulary";
    case ErrorKind::Io: return "Io";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& message, std::size_t line,
             std::size_t column)
    : std::runtime_error(message), kind_(kind), line_(line), column_(column) {}

Error Error::at_line(std::size_t line) const {
  return Error(kind_, what(), line, column_);
}

}  // namespace autoformal
