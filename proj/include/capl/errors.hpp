#pragma once

#include <stdexcept>
#include <string>

namespace capl
{

class Error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// Malformed input text. `line()` is 1-based, 0 when not line oriented.
class ParseError : public Error
{
public:
  ParseError(std::string const &what, int line)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), _line(line)
  {
  }

  int line() const { return _line; }

private:
  int _line;
};

class ValidationError : public Error
{
public:
  using Error::Error;
};

class NumericalError : public Error
{
public:
  using Error::Error;
};

class IoError : public Error
{
public:
  using Error::Error;
};

} // namespace capl
