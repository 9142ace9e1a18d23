#pragma once

#include <stdexcept>
#include <string>

namespace recsel {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input file is missing a required column or names an unknown one.
class SchemaError : public Error {
 public:
  using Error::Error;
};

// A row or token stream could not be parsed. `line()` is 1-based, 0 if unknown.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(line ? what + " (line " + std::to_string(line) + ")" : what), message_(what), line_(line) {}
  std::size_t line() const { return line_; }
  const std::string& message() const { return message_; }

 private:
  std::string message_;
  std::size_t line_ = 0;
};

class EmptyDatasetError : public Error {
 public:
  using Error::Error;
};

class DegenerateDataError : public Error {
 public:
  using Error::Error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace recsel
