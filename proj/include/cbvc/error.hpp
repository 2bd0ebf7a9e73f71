#pragma once

#include <stdexcept>
#include <string>

namespace cbvc {

// Base for every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid configuration values (geometry, schedule, QP bounds, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Input data that does not match its declared format.
class MalformedInputError : public Error {
 public:
  using Error::Error;
};

class TruncatedFileError : public MalformedInputError {
 public:
  TruncatedFileError(const std::string& what, long frame)
      : MalformedInputError(what), frame_(frame) {}
  long frame() const { return frame_; }

 private:
  long frame_;
};

// Text parse failure carrying a 1-based line (or row) number.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, long line)
      : Error(what), line_(line) {}
  long line() const { return line_; }

 private:
  long line_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace cbvc
