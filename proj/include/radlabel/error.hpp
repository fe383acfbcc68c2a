#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace radlabel {

/// Broad error families; the CLI maps each family to a distinct exit code.
enum class ErrorFamily { Config, Data, Divergence };

class Error : public std::runtime_error {
public:
    Error(ErrorFamily family, const std::string& what)
        : std::runtime_error(what), family_(family) {}

    ErrorFamily family() const noexcept { return family_; }

private:
    ErrorFamily family_;
};

#define RADLABEL_DATA_ERROR(Name)                                              \
    class Name : public Error {                                                \
    public:                                                                    \
        explicit Name(const std::string& what)                                 \
            : Error(ErrorFamily::Data, #Name ": " + what) {}                   \
    }

RADLABEL_DATA_ERROR(EmptyInput);
RADLABEL_DATA_ERROR(MissingFindings);
RADLABEL_DATA_ERROR(ValidationError);
RADLABEL_DATA_ERROR(DimMismatch);
RADLABEL_DATA_ERROR(ShapeError);
RADLABEL_DATA_ERROR(EmptyEval);
RADLABEL_DATA_ERROR(DegenerateClasses);
RADLABEL_DATA_ERROR(AlignmentError);

#undef RADLABEL_DATA_ERROR

/// Malformed text input; carries the 1-based line number.
class ParseError : public Error {
public:
    ParseError(std::size_t line, const std::string& what)
        : Error(ErrorFamily::Data,
                "ParseError: line " + std::to_string(line) + ": " + what),
          line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class FormatError : public Error {
public:
    FormatError(std::size_t line, const std::string& what)
        : Error(ErrorFamily::Data,
                "FormatError: line " + std::to_string(line) + ": " + what),
          line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class InconsistentSpec : public Error {
public:
    explicit InconsistentSpec(const std::string& what)
        : Error(ErrorFamily::Config, "InconsistentSpec: " + what) {}
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what)
        : Error(ErrorFamily::Config, "ConfigError: " + what) {}
};

/// Training produced a non-finite loss.
class Diverged : public Error {
public:
    Diverged(int epoch, const std::string& what)
        : Error(ErrorFamily::Divergence,
                "Diverged at epoch " + std::to_string(epoch) + ": " + what),
          epoch_(epoch) {}

    int epoch() const noexcept { return epoch_; }

private:
    int epoch_;
};

}  // namespace radlabel
