#include "carca/numerics/parameters.hpp"

#include "carca/error.hpp"

namespace carca::numerics {

std::size_t ParameterSet::add(std::string name, Matrix value, bool is_weight) {
  if (index_.contains(name)) throw ContractError("duplicate parameter name '" + name + "'");
  const std::size_t idx = params_.size();
  index_.emplace(name, idx);
  params_.push_back(Parameter{std::move(name), std::move(value), is_weight});
  return idx;
}

bool ParameterSet::contains(std::string_view name) const {
  return index_.contains(std::string(name));
}

std::size_t ParameterSet::index_of(std::string_view name) const {
  const auto it = index_.find(std::string(name));
  if (it == index_.end()) throw ContractError("unknown parameter '" + std::string(name) + "'");
  return it->second;
}

std::size_t ParameterSet::scalar_count() const noexcept {
  std::size_t total = 0;
  for (const auto& p : params_) total += p.value.size();
  return total;
}

bool ParameterSet::all_finite() const noexcept {
  for (const auto& p : params_) {
    if (!p.value.all_finite()) return false;
  }
  return true;
}

Gradients zero_gradients(const ParameterSet& params) {
  Gradients grads;
  grads.reserve(params.size());
  for (const auto& p : params) grads.emplace_back(p.value.rows(), p.value.cols());
  return grads;
}

}  // namespace carca::numerics
