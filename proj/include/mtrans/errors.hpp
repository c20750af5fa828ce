#pragma once

#include <stdexcept>
#include <string>

namespace mtrans {

// Bad configuration: empty training data, mismatched ensemble vocabularies.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed user input: empty strings, invalid UTF-8, unreadable files.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A dataset row that does not match its declared format.
class ParseError : public InputError {
 public:
  ParseError(const std::string& what, std::size_t line)
      : InputError("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// API misuse: invalid action for a state, querying a terminal state.
class UsageError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Checkpoint could not be read back.
class LoadError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace mtrans
