#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace uda {

// Shapes of vectors, matrices or parameter sets do not compose.
class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// A loss or function evaluated to a non-finite value.
class EvaluationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Degenerate clusters or batches: no negatives, no valid anchors, too few classes.
class DegenerateError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Enqueue attempted with a round id different from the queue's current round.
class StaleRoundError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

class ParseError : public std::runtime_error {
public:
    ParseError(std::size_t line, const std::string& what)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class SchemaError : public ParseError {
public:
    using ParseError::ParseError;
};

// Bad configuration value; carries the offending key.
class ConfigError : public std::invalid_argument {
public:
    ConfigError(std::string key, const std::string& what)
        : std::invalid_argument(key + ": " + what), key_(std::move(key)) {}
    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

}  // namespace uda
