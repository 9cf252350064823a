#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "carca/numerics/matrix.hpp"

namespace carca::numerics {

struct Parameter {
  std::string name;
  Matrix value;
  // Weight matrices take part in L2 regularization; biases and layer-norm terms do not.
  bool is_weight = false;

  bool operator==(const Parameter&) const = default;
};

// Ordered, name-addressable collection of learnable tensors.
class ParameterSet {
 public:
  std::size_t add(std::string name, Matrix value, bool is_weight);

  std::size_t size() const noexcept { return params_.size(); }
  bool empty() const noexcept { return params_.empty(); }

  Parameter& operator[](std::size_t i) { return params_[i]; }
  const Parameter& operator[](std::size_t i) const { return params_[i]; }

  bool contains(std::string_view name) const;
  std::size_t index_of(std::string_view name) const;
  Matrix& at(std::string_view name) { return params_[index_of(name)].value; }
  const Matrix& at(std::string_view name) const { return params_[index_of(name)].value; }

  std::size_t scalar_count() const noexcept;
  bool all_finite() const noexcept;

  auto begin() noexcept { return params_.begin(); }
  auto end() noexcept { return params_.end(); }
  auto begin() const noexcept { return params_.begin(); }
  auto end() const noexcept { return params_.end(); }

  bool operator==(const ParameterSet& other) const { return params_ == other.params_; }

 private:
  std::vector<Parameter> params_;
  std::unordered_map<std::string, std::size_t> index_;
};

// One gradient matrix per parameter, in ParameterSet order.
using Gradients = std::vector<Matrix>;

Gradients zero_gradients(const ParameterSet& params);

}  // namespace carca::numerics
