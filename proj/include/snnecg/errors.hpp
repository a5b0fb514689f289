#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace snnecg {

/// Invalid topology, parameters or shapes.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input data (records, labels, empty sets).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A train or test set with no beats in it.
class EmptyData : public DataError {
 public:
  using DataError::DataError;
};

/// Non-finite membrane potential during simulation.
class NumericError : public std::runtime_error {
 public:
  NumericError(std::string layer, std::size_t neuron)
      : std::runtime_error("non-finite membrane potential in layer '" + layer +
                           "' at neuron " + std::to_string(neuron)),
        layer_(std::move(layer)),
        neuron_(neuron) {}

  const std::string& layer() const { return layer_; }
  std::size_t neuron() const { return neuron_; }

 private:
  std::string layer_;
  std::size_t neuron_;
};

/// Saved model does not match the requested topology.
class ModelMismatch : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace snnecg
