#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace dpgnn {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or out-of-range user input: files, edge lists, labels, configs.
class InputError : public Error {
 public:
  explicit InputError(const std::string& what) : Error(what) {}
  InputError(const std::string& file, std::size_t line, const std::string& what)
      : Error(file + ":" + std::to_string(line) + ": " + what), file_(file), line_(line) {}

  const std::string& file() const { return file_; }
  std::size_t line() const { return line_; }

 private:
  std::string file_;
  std::size_t line_ = 0;
};

// Incompatible operand shapes; the message starts with the operation name.
class ShapeError : public Error {
 public:
  ShapeError(const std::string& op, const std::string& what) : Error(op + ": " + what), op_(op) {}
  const std::string& op() const { return op_; }

 private:
  std::string op_;
};

// A value that must be finite (or well defined) was not.
class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what, std::optional<int> epoch = std::nullopt)
      : Error(epoch ? "epoch " + std::to_string(*epoch) + ": " + what : what), epoch_(epoch) {}
  std::optional<int> epoch() const { return epoch_; }

 private:
  std::optional<int> epoch_;
};

}  // namespace dpgnn
