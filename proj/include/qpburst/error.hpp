#pragma once

#include <stdexcept>
#include <string>

namespace qpburst
{
//! Base class for all library errors.
class Error : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

//! Input outside the mathematical or physical domain of an operation.
class DomainError : public Error
{
  public:
    using Error::Error;
};

//! Input that sits exactly on a removable-only-by-the-caller singularity.
class SingularInputError : public DomainError
{
  public:
    using DomainError::DomainError;
};

//! Iterative procedure stopped without meeting its tolerance.
class ConvergenceError : public Error
{
  public:
    ConvergenceError(std::string const& what, double achieved)
        : Error(what), achieved_(achieved)
    {
    }

    //! Best error estimate (or objective) reached before giving up
    double achieved() const noexcept { return achieved_; }

  private:
    double achieved_;
};

//! Inconsistent simulation or analysis configuration.
class ConfigError : public Error
{
  public:
    using Error::Error;
};

//! Malformed input file.
class ParseError : public Error
{
  public:
    ParseError(std::string const& what, int line = 0)
        : Error(line > 0 ? "line " + std::to_string(line) + ": " + what
                         : what)
        , line_(line)
    {
    }

    int line() const noexcept { return line_; }

  private:
    int line_;
};

}  // namespace qpburst
