#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ppc {

/// Every failure mode the engine can report. Codes are stable so callers
/// (and tests) can branch on the variant instead of parsing messages.
enum class Errc {
    // ingestion
    MissingFile,
    MalformedFile,
    RaggedRow,
    MissingValue,
    MissingTargetColumn,
    TargetNotNumeric,
    DuplicateColumn,
    EmptyColumnName,
    EmptyDataset,
    NonFiniteValue,
    UnknownColumnDescription,
    // model samples
    ReplicateLengthMismatch,
    NonFiniteSample,
    EmptySampleSet,
    AlignmentError,
    // statistic DSL
    SyntaxError,
    UnknownColumn,
    TypeMismatch,
    InvalidParameter,
    BinIndexOutOfRange,
    DepthExceeded,
    TargetInPredicate,
    EmptySlice,
    DegenerateMoment,
    DivisionByZero,
    IndeterminateForm,
    // hypothesis testing
    EmptyFamily,
    // benchmarks
    InvalidHyperparameters,
    FitNotConverged,
    EmptySuite,
    // proposer / external backend
    TransportFailure,
    MalformedBatch,
    BackendNotConfigured,
    // cli / config
    InvalidConfig,
    IoError,
};

std::string_view errc_name(Errc code);

/// Engine-wide exception: a code plus a human-readable message that names
/// the offending column/row/replicate where applicable.
class Error : public std::runtime_error {
  public:
    Error(Errc code, std::string message)
        : std::runtime_error(std::string(errc_name(code)) + ": " + message), code_(code) {}

    Errc code() const noexcept { return code_; }

  private:
    Errc code_;
};

[[noreturn]] inline void raise(Errc code, std::string message) {
    throw Error(code, std::move(message));
}

} // namespace ppc
