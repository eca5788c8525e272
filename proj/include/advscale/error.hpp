#ifndef ADVSCALE_ERROR_HPP
#define ADVSCALE_ERROR_HPP

#include <stdexcept>
#include <string>

namespace advscale {

// Error taxonomy. The CLI maps UsageError to exit status 1 and every other
// advscale::Error to exit status 2.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Bad arguments or inputs the caller could have checked up front.
class UsageError : public Error {
public:
  using Error::Error;
};

// A numeric precondition was violated (non-positive size, bad step count...).
class DomainError : public Error {
public:
  using Error::Error;
};

// Malformed or inconsistent input data.
class DataError : public Error {
public:
  using Error::Error;
};

class ParseError : public DataError {
public:
  ParseError(std::size_t line, const std::string& what)
      : DataError("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

private:
  std::size_t line_;
};

// A regression whose design matrix is rank deficient.
class SingularError : public DataError {
public:
  using DataError::DataError;
};

class FitError : public Error {
public:
  FitError(const std::string& what, std::string diagnostics)
      : Error(what), diagnostics_(std::move(diagnostics)) {}
  const std::string& diagnostics() const noexcept { return diagnostics_; }

private:
  std::string diagnostics_;
};

class InfeasibleError : public Error {
public:
  using Error::Error;
};

}  // namespace advscale

#endif  // ADVSCALE_ERROR_HPP
