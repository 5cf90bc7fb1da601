#ifndef SUPERRAD_ERRORS_HPP
#define SUPERRAD_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace superrad
{
// Argument outside the mathematical domain of an operation.
class DomainError : public std::invalid_argument
{
public:
    using std::invalid_argument::invalid_argument;
};

// A series was requested that does not converge (|r| = 1 at steady state).
class ConvergenceError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

// Histogram channel layout is inconsistent.
class LayoutError : public std::invalid_argument
{
public:
    using std::invalid_argument::invalid_argument;
};

// Decay fit could not be performed or produced a non-decaying slope.
class FitError : public std::runtime_error
{
public:
    enum class Kind
    {
        insufficient_data,
        non_decay
    };

    FitError(Kind kind, const std::string &what) : std::runtime_error(what), kind_(kind) {}
    Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

// Invalid or inconsistent experiment / parameter configuration.
class ConfigError : public std::invalid_argument
{
public:
    using std::invalid_argument::invalid_argument;
};

// Model produced a physically meaningless value (non-positive rate, empty run).
class ModelError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

} // namespace superrad

#endif // SUPERRAD_ERRORS_HPP
