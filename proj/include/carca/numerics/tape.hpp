#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <initializer_list>
#include <span>
#include <vector>

#include "carca/numerics/matrix.hpp"
#include "carca/numerics/parameters.hpp"
#include "carca/numerics/random.hpp"

namespace carca::numerics {

class Tape;

// Handle to a value recorded on a Tape. Cheap to copy; only valid while the tape lives
// and has not been cleared.
class Var {
 public:
  Var() = default;

  const Matrix& value() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
  Tape& tape() const { return *tape_; }
  std::size_t id() const noexcept { return id_; }
  bool valid() const noexcept { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

// Linear record of primitive operations. Replaying the adjoints in reverse order
// accumulates d(loss)/d(node) for every node that depends on a parameter leaf.
//
// A non-recording tape keeps forward values only and is used for inference and
// finite-difference probes.
class Tape {
 public:
  // Pushes out_grad (the gradient w.r.t. this node's value) into the node's inputs.
  using Adjoint = std::function<void(Tape&, const Matrix& out_grad)>;

  explicit Tape(bool recording = true) : recording_(recording) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const noexcept { return recording_; }
  std::size_t size() const noexcept { return nodes_.size(); }
  void clear() { nodes_.clear(); }

  Var constant(Matrix value);
  // Constant leaf referencing an external matrix that must outlive the tape.
  Var reference(const Matrix& value);
  // Leaf bound to parameter slot `index`. The matrix is referenced, not copied, and
  // must outlive the tape.
  Var parameter(std::size_t index, const Matrix& value);
  std::vector<Var> bind(const ParameterSet& params);

  // Records the result of an operation. `adjoint` is dropped when the tape is not
  // recording or none of the inputs needs a gradient.
  Var record(Matrix value, std::initializer_list<Var> inputs, Adjoint adjoint);
  Var record(Matrix value, std::span<const Var> inputs, Adjoint adjoint);

  const Matrix& value(Var v) const;
  bool requires_grad(Var v) const { return nodes_[v.id()].requires_grad; }

  // Adds `grad` into v's gradient buffer; no-op when v does not need a gradient.
  void accumulate(Var v, const Matrix& grad);
  // Gradient buffer for v, zero-initialized on first use; nullptr if v needs none.
  Matrix* grad_buffer(Var v);

  // Reverse sweep from a 1x1 loss. Returns one gradient per parameter; parameters
  // the loss does not depend on get zeros.
  Gradients backward(Var loss, const ParameterSet& params);

 private:
  struct Node {
    Matrix value;
    const Matrix* external = nullptr;
    Matrix grad;
    Adjoint adjoint;
    std::ptrdiff_t param = -1;
    bool requires_grad = false;
  };

  void check_owned(Var v) const;

  std::deque<Node> nodes_;
  bool recording_;
};

// ---- differentiable primitives -------------------------------------------------

Var matmul(Var a, Var b);
Var matmul_nt(Var a, Var b);  // a * b^T
Var add(Var a, Var b);
Var add_row(Var m, Var row);
Var mul(Var a, Var b);  // elementwise
Var scale(Var a, double factor);
Var leaky_relu(Var a, double slope);
Var sigmoid(Var a);
Var softmax_rows(Var a);
Var masked_softmax_rows(Var a, std::span<const std::uint8_t> key_mask);
Var layer_norm_rows(Var m, Var gain, Var bias, double eps);
Var sum(Var a);

// Row lookup: out.row(r) = table.row(indices[r]); a negative index yields a zero row.
Var gather_rows(Var table, std::span<const std::ptrdiff_t> indices);
Var concat_cols(std::span<const Var> parts);
Var slice_cols(Var a, std::size_t start, std::size_t width);
// Zeroes rows whose flag is 0.
Var mask_rows(Var a, std::span<const std::uint8_t> row_mask);
// Inverted dropout: kept entries are scaled by 1/(1-p). Identity when p == 0 or rng is null.
Var dropout(Var a, double p, Rng* rng);

}  // namespace carca::numerics
