#pragma once

#include <stdexcept>
#include <string>

namespace qbs {

// Every failure surfaced by the library derives from Error. The CLI maps the
// three families onto distinct exit codes (parse 2, validation 3, numerical 4).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
 public:
  explicit ParseError(const std::string& what) : Error("parse error: " + what) {}
};

class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what) : Error("validation error: " + what) {}
};

class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what) : Error("numerical error: " + what) {}
};

}  // namespace qbs
