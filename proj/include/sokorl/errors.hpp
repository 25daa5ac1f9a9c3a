#pragma once

#include <stdexcept>
#include <string>

namespace sokorl {

// Input data fails a structural requirement (bad level, bad config).
class ValidationError : public std::runtime_error {
  public:
    explicit ValidationError(const std::string &msg) : std::runtime_error(msg) {}
};

// Text could not be parsed; carries 1-based line/column.
class ParseError : public std::runtime_error {
  public:
    ParseError(const std::string &msg, int line, int column)
        : std::runtime_error(msg + " at line " + std::to_string(line) + ", column " +
                             std::to_string(column)),
          line(line),
          column(column) {}
    int line;
    int column;
};

// API precondition broken by the caller.
class ContractViolation : public std::logic_error {
  public:
    explicit ContractViolation(const std::string &msg) : std::logic_error(msg) {}
};

class GenerationError : public std::runtime_error {
  public:
    explicit GenerationError(const std::string &msg) : std::runtime_error(msg) {}
};

class TrainingAbort : public std::runtime_error {
  public:
    explicit TrainingAbort(const std::string &msg) : std::runtime_error(msg) {}
};

}    // namespace sokorl
