#pragma once

#include <stdexcept>
#include <string>

namespace eft {

// All library failures derive from Error so callers can catch one type.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
public:
    using Error::Error;
};

// Caller broke a documented precondition (missing degree, bad shapes...).
class ContractError : public Error {
public:
    using Error::Error;
};

// Malformed input text; line is 1-based, 0 when not applicable.
class ParseError : public Error {
public:
    ParseError(const std::string& what, int line = 0)
        : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
    int line() const noexcept { return line_; }

private:
    int line_;
};

// Well-formed input that violates a data invariant.
class ValidationError : public Error {
public:
    using Error::Error;
};

// Regularized solve left nothing to project onto.
class EmptySubspaceError : public Error {
public:
    using Error::Error;
};

// Bounded search (budget, parameters, bisection) did not converge.
class SearchError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace eft
