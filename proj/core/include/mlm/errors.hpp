#ifndef MLM_ERRORS_HPP
#define MLM_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace mlm {

enum class Err {
  // configuration (exit code 2)
  ConfigError,
  // data handling (exit code 3)
  MissingTarget,
  RaggedRows,
  UnparseableCell,
  EmptyFile,
  SingleLevelColumn,
  FractionOutOfRange,
  SchemaMismatch,
  UnknownCategory,
  // numerics and training (exit code 4)
  InvalidArgument,
  DimensionMismatch,
  DivergedLoss,
  TooFewPoints,
  DegenerateComponent,
  EmptySubset,
  IndexOutOfRange,
  EmptyCell,
  SeparableDegenerate,
  NoStderr,
  BadJ,
  FoldTooSmall,
  UnknownEpic,
  // model document (exit code 5)
  VersionMismatch,
  CorruptDocument,
};

/// Exit code associated with an error class; 0 is success, 1 is reserved
/// for unexpected internal failures.
inline int exit_code_for(Err kind) {
  switch (kind) {
    case Err::ConfigError:
      return 2;
    case Err::MissingTarget:
    case Err::RaggedRows:
    case Err::UnparseableCell:
    case Err::EmptyFile:
    case Err::SingleLevelColumn:
    case Err::FractionOutOfRange:
    case Err::SchemaMismatch:
    case Err::UnknownCategory:
      return 3;
    case Err::VersionMismatch:
    case Err::CorruptDocument:
      return 5;
    default:
      return 4;
  }
}

inline const char* err_name(Err kind) {
  switch (kind) {
    case Err::ConfigError: return "ConfigError";
    case Err::MissingTarget: return "MissingTarget";
    case Err::RaggedRows: return "RaggedRows";
    case Err::UnparseableCell: return "UnparseableCell";
    case Err::EmptyFile: return "EmptyFile";
    case Err::SingleLevelColumn: return "SingleLevelColumn";
    case Err::FractionOutOfRange: return "FractionOutOfRange";
    case Err::SchemaMismatch: return "SchemaMismatch";
    case Err::UnknownCategory: return "UnknownCategory";
    case Err::InvalidArgument: return "InvalidArgument";
    case Err::DimensionMismatch: return "DimensionMismatch";
    case Err::DivergedLoss: return "DivergedLoss";
    case Err::TooFewPoints: return "TooFewPoints";
    case Err::DegenerateComponent: return "DegenerateComponent";
    case Err::EmptySubset: return "EmptySubset";
    case Err::IndexOutOfRange: return "IndexOutOfRange";
    case Err::EmptyCell: return "EmptyCell";
    case Err::SeparableDegenerate: return "SeparableDegenerate";
    case Err::NoStderr: return "NoStderr";
    case Err::BadJ: return "BadJ";
    case Err::FoldTooSmall: return "FoldTooSmall";
    case Err::UnknownEpic: return "UnknownEpic";
    case Err::VersionMismatch: return "VersionMismatch";
    case Err::CorruptDocument: return "CorruptDocument";
  }
  return "Unknown";
}

class MlmError : public std::runtime_error {
 public:
  MlmError(Err kind, std::string message)
      : std::runtime_error(std::move(message)), kind_(kind) {}

  Err kind() const { return kind_; }
  int exit_code() const { return exit_code_for(kind_); }

 private:
  Err kind_;
};

}  // namespace mlm

#endif  // MLM_ERRORS_HPP
