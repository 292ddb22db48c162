#ifndef PL_ERROR_HPP
#define PL_ERROR_HPP

#include <stdexcept>
#include <string>

namespace pl
{

enum class ErrorKind
{
    validation,
    fit,
    io
};

// Base class of every error the library throws. `code` is a short
// machine-readable identifier (snake_case) naming the violated condition.
class Error : public std::runtime_error
{
public:
    Error(ErrorKind kind, std::string code, const std::string &message)
        : std::runtime_error(message), kind_(kind), code_(std::move(code))
    {
    }

    ErrorKind kind() const noexcept { return kind_; }
    const std::string &code() const noexcept { return code_; }

private:
    ErrorKind kind_;
    std::string code_;
};

class ValidationError : public Error
{
public:
    ValidationError(std::string code, const std::string &message)
        : Error(ErrorKind::validation, std::move(code), message)
    {
    }
};

class FitError : public Error
{
public:
    FitError(std::string code, const std::string &message)
        : Error(ErrorKind::fit, std::move(code), message)
    {
    }
};

class IoError : public Error
{
public:
    IoError(std::string code, const std::string &message)
        : Error(ErrorKind::io, std::move(code), message)
    {
    }
};

inline void require(bool condition, const char *code, const std::string &message)
{
    if (!condition)
        throw ValidationError(code, message);
}

} // namespace pl

#endif
