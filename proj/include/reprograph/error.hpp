#pragma once
// Exception hierarchy shared by every module. The CLI maps these onto exit codes.

#include <cstddef>
#include <stdexcept>
#include <string>

namespace reprograph {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed input text (graph files, wire documents). line == 0 means "not line-oriented".
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line = 0)
        : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

// A structurally valid input violates a domain invariant.
class ValidationError : public Error {
public:
    using Error::Error;
};

// Bad run configuration or out-of-range parameter.
class ConfigError : public Error {
public:
    using Error::Error;
};

// A pipeline stage failed hard; carries the stage name for resume/reporting.
class StageFailure : public Error {
public:
    StageFailure(std::string stage, const std::string& what)
        : Error("stage '" + stage + "' failed: " + what), stage_(std::move(stage)) {}
    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

// Execution backend could not run anything at all (as opposed to a failing candidate).
class ExecutorUnavailable : public Error {
public:
    using Error::Error;
};

} // namespace reprograph
