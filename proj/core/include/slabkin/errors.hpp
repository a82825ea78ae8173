#pragma once

#include <cstdio>
#include <stdexcept>
#include <string>

namespace slabkin
{

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error
{
  public:
    using std::domain_error::domain_error;
};

/// Shape mismatch between a grid function and the grid it is used with.
class DimensionError : public std::invalid_argument
{
  public:
    using std::invalid_argument::invalid_argument;
};

/// A quadrature failed to reach its requested tolerance.
class QuadratureError : public std::runtime_error
{
  public:
    QuadratureError(std::string const& what, double estimated_error)
        : std::runtime_error(what + " (estimated error " + format(estimated_error)
                             + ")")
        , estimated_error_(estimated_error)
    {
    }

    double estimated_error() const noexcept { return estimated_error_; }

  private:
    static std::string format(double v)
    {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.3e", v);
        return buf;
    }

    double estimated_error_;
};

/// Malformed or inconsistent run configuration.
class ConfigError : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

/// File could not be read or written.
class IoError : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

}  // namespace slabkin
