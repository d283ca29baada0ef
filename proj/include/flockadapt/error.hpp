#pragma once

#include <stdexcept>
#include <string>

namespace flockadapt {

enum class ErrorKind {
    topology,
    dimension,
    validation,
    parse,
    numeric,
    io,
};

/// Base exception for every failure raised by the library.
class Error : public std::runtime_error
{
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message)
        , kind_(kind)
    {
    }

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

class TopologyError : public Error
{
public:
    explicit TopologyError(const std::string& message)
        : Error(ErrorKind::topology, message)
    {
    }
};

class DimensionError : public Error
{
public:
    explicit DimensionError(const std::string& message)
        : Error(ErrorKind::dimension, message)
    {
    }
};

class ValidationError : public Error
{
public:
    explicit ValidationError(const std::string& message)
        : Error(ErrorKind::validation, message)
    {
    }
};

/// Parse failure with a 1-based source location.
class ParseError : public Error
{
public:
    ParseError(int line, int column, const std::string& message)
        : Error(ErrorKind::parse, "line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + message)
        , line_(line)
        , column_(column)
    {
    }

    int line() const noexcept { return line_; }
    int column() const noexcept { return column_; }

private:
    int line_;
    int column_;
};

class NumericError : public Error
{
public:
    explicit NumericError(const std::string& message)
        : Error(ErrorKind::numeric, message)
    {
    }
};

class IoError : public Error
{
public:
    explicit IoError(const std::string& message)
        : Error(ErrorKind::io, message)
    {
    }
};

} // namespace flockadapt
