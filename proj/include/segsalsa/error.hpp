#pragma once

#include <stdexcept>
#include <string>

namespace segsalsa {

enum class ErrorKind {
    InvalidParameter,
    DimensionMismatch,
    DegenerateLikelihood,
    InfeasibleEvaluation,
    InvalidTrainingSet,
    MagicMismatch,
    InvalidHeader,
    TruncatedFile,
    IndexOutOfRange,
    MalformedFile,
    EmptyEvaluation,
    PaletteExhausted,
    Io,
};

const char* to_string(ErrorKind kind) noexcept;

/// Every failure raised by the library carries one of the kinds above so
/// callers (and the CLI exit-code mapping) can branch without parsing text.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

} // namespace segsalsa
