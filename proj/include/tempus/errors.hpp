#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tempus {

/// Root of every error raised by the harness. `code()` is the stable,
/// machine-readable name that ends up in audit logs and adapter replies.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message)
        : std::runtime_error(message), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

class SchemaError : public Error {
public:
    SchemaError(std::string field, const std::string& detail)
        : Error("SchemaError", "schema violation on '" + field + "': " + detail),
          field_(std::move(field)) {}
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

class InsufficientHistory : public Error {
public:
    InsufficientHistory(std::size_t length, std::size_t required)
        : Error("InsufficientHistory",
                "series length " + std::to_string(length) + " < required " +
                    std::to_string(required)),
          length_(length), required_(required) {}
    std::size_t length() const noexcept { return length_; }
    std::size_t required() const noexcept { return required_; }

private:
    std::size_t length_;
    std::size_t required_;
};

class ShapeMismatch : public Error {
public:
    explicit ShapeMismatch(const std::string& detail) : Error("ShapeMismatch", detail) {}
};

class UndefinedMetric : public Error {
public:
    explicit UndefinedMetric(const std::string& detail) : Error("UndefinedMetric", detail) {}
};

class InvalidParams : public Error {
public:
    explicit InvalidParams(const std::string& detail) : Error("InvalidParams", detail) {}
};

class InvalidPeriod : public Error {
public:
    explicit InvalidPeriod(const std::string& detail) : Error("InvalidPeriod", detail) {}
};

class NonPositiveData : public Error {
public:
    explicit NonPositiveData(const std::string& detail) : Error("NonPositiveData", detail) {}
};

class SingularFit : public Error {
public:
    explicit SingularFit(const std::string& detail) : Error("SingularFit", detail) {}
};

class NonConvergence : public Error {
public:
    explicit NonConvergence(const std::string& detail) : Error("NonConvergence", detail) {}
};

class NonFiniteForecast : public Error {
public:
    explicit NonFiniteForecast(const std::string& detail)
        : Error("NonFiniteForecast", detail) {}
};

class AllAssignmentsFailed : public Error {
public:
    explicit AllAssignmentsFailed(const std::string& detail)
        : Error("AllAssignmentsFailed", detail) {}
};

class UnknownModel : public Error {
public:
    explicit UnknownModel(const std::string& model)
        : Error("UnknownModel", "unknown model '" + model + "'") {}
};

class ParseError : public Error {
public:
    ParseError(std::size_t line, std::string column, const std::string& reason)
        : Error("ParseError", "line " + std::to_string(line) + ", column '" + column +
                                  "': " + reason),
          line_(line), column_(std::move(column)) {}
    std::size_t line() const noexcept { return line_; }
    const std::string& column() const noexcept { return column_; }

private:
    std::size_t line_;
    std::string column_;
};

class NonMonotonicTimestamps : public Error {
public:
    explicit NonMonotonicTimestamps(std::size_t line)
        : Error("NonMonotonicTimestamps",
                "timestamps not strictly increasing at line " + std::to_string(line)),
          line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class IoError : public Error {
public:
    explicit IoError(const std::string& detail) : Error("IoError", detail) {}
};

class ManifestError : public Error {
public:
    explicit ManifestError(const std::string& detail) : Error("ManifestError", detail) {}
};

}  // namespace tempus
