#ifndef DGP_ERRORS_HPP
#define DGP_ERRORS_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dgp {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed call arguments: dimension or length mismatches, empty inputs,
/// values outside a documented domain.
class InputError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration: bad hyperparameters, unknown names, inconsistent
/// strategy/decomposition pairs.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Factorization failures and unstable simulation steps.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Parse failure in a text input; carries the 1-based line number.
class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::size_t line)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// I/O failure on a named path.
class FileError : public Error {
 public:
  FileError(const std::string& what, std::string path)
      : Error(what + ": " + path), path_(std::move(path)) {}

  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

}  // namespace dgp

#endif  // DGP_ERRORS_HPP
