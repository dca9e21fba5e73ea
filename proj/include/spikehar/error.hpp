#pragma once

#include <stdexcept>
#include <string>

namespace spikehar {

// Root of every error raised by the library. Each subclass maps to one
// failure family so callers (and the CLI) can report the right stage.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// A required column is missing or renamed; column() names it.
class SchemaError : public Error {
 public:
  explicit SchemaError(std::string column)
      : Error("schema error: missing column '" + column + "'"), column_(std::move(column)) {}
  const std::string& column() const noexcept { return column_; }

 private:
  std::string column_;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t row, const std::string& what)
      : Error("parse error at row " + std::to_string(row) + ": " + what), row_(row) {}
  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  ShapeError(int layer, const std::string& what)
      : Error("shape error at layer " + std::to_string(layer) + ": " + what), layer_(layer) {}
  int layer() const noexcept { return layer_; }

 private:
  int layer_;
};

class RangeError : public Error {
 public:
  using Error::Error;
};

// Neuron state left the signed 24-bit range.
class SaturationError : public Error {
 public:
  SaturationError(int layer, int neuron, const std::string& var)
      : Error("state overflow in layer " + std::to_string(layer) + ", neuron " +
              std::to_string(neuron) + " (" + var + " outside 24-bit range)"),
        layer_(layer),
        neuron_(neuron) {}
  int layer() const noexcept { return layer_; }
  int neuron() const noexcept { return neuron_; }

 private:
  int layer_;
  int neuron_;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class DivergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace spikehar
