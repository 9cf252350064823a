#include "carca/numerics/tape.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>

#include "carca/error.hpp"
#include "carca/numerics/kernels.hpp"

namespace carca::numerics {

const Matrix& Var::value() const {
  if (tape_ == nullptr) throw ContractError("value() on an unbound Var");
  return tape_->value(*this);
}

void Tape::check_owned(Var v) const {
  if (&v.tape() != this || v.id() >= nodes_.size()) {
    throw ContractError("Var does not belong to this tape");
  }
}

Var Tape::constant(Matrix value) {
  nodes_.push_back(Node{std::move(value), nullptr, {}, {}, -1, false});
  return Var(this, nodes_.size() - 1);
}

Var Tape::reference(const Matrix& value) {
  Node node;
  node.external = &value;
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Tape::parameter(std::size_t index, const Matrix& value) {
  Node node;
  node.external = &value;
  node.param = static_cast<std::ptrdiff_t>(index);
  node.requires_grad = recording_;
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

std::vector<Var> Tape::bind(const ParameterSet& params) {
  std::vector<Var> vars;
  vars.reserve(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) vars.push_back(parameter(i, params[i].value));
  return vars;
}

Var Tape::record(Matrix value, std::initializer_list<Var> inputs, Adjoint adjoint) {
  return record(std::move(value), std::span<const Var>(inputs.begin(), inputs.size()),
                std::move(adjoint));
}

Var Tape::record(Matrix value, std::span<const Var> inputs, Adjoint adjoint) {
  bool needs = false;
  if (recording_) {
    for (const Var& in : inputs) {
      check_owned(in);
      needs = needs || nodes_[in.id()].requires_grad;
    }
  }
  Node node;
  node.value = std::move(value);
  node.requires_grad = needs;
  if (needs) node.adjoint = std::move(adjoint);
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

const Matrix& Tape::value(Var v) const {
  const Node& node = nodes_[v.id()];
  return node.external != nullptr ? *node.external : node.value;
}

Matrix* Tape::grad_buffer(Var v) {
  Node& node = nodes_[v.id()];
  if (!node.requires_grad) return nullptr;
  if (node.grad.empty()) {
    const Matrix& val = value(v);
    node.grad = Matrix(val.rows(), val.cols());
  }
  return &node.grad;
}

void Tape::accumulate(Var v, const Matrix& grad) {
  Matrix* buf = grad_buffer(v);
  if (buf == nullptr) return;
  if (!buf->same_shape(grad)) {
    throw ShapeError("gradient " + grad.shape_string() + " for value " + buf->shape_string());
  }
  auto dst = buf->data();
  auto src = grad.data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

Gradients Tape::backward(Var loss, const ParameterSet& params) {
  check_owned(loss);
  if (!recording_) throw ContractError("backward() on a non-recording tape");
  const Matrix& lv = value(loss);
  if (lv.rows() != 1 || lv.cols() != 1) {
    throw ContractError("backward() needs a scalar loss, got " + lv.shape_string());
  }
  Gradients grads = zero_gradients(params);
  if (!nodes_[loss.id()].requires_grad) return grads;

  nodes_[loss.id()].grad = Matrix(1, 1, 1.0);
  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    Node& node = nodes_[i];
    if (node.grad.empty()) continue;
    if (node.adjoint) node.adjoint(*this, node.grad);
    if (node.param >= 0) {
      const auto p = static_cast<std::size_t>(node.param);
      if (p >= grads.size() || !grads[p].same_shape(node.grad)) {
        throw ContractError("parameter leaf " + std::to_string(p) +
                            " does not match the parameter set");
      }
      auto dst = grads[p].data();
      auto src = node.grad.data();
      for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
    }
  }
  return grads;
}

// ---- primitives -----------------------------------------------------------------

Var matmul(Var a, Var b) {
  Tape& t = a.tape();
  return t.record(matmul(a.value(), b.value()), {a, b}, [a, b](Tape& tape, const Matrix& g) {
    if (tape.requires_grad(a)) tape.accumulate(a, matmul_nt(g, tape.value(b)));
    if (tape.requires_grad(b)) tape.accumulate(b, matmul_tn(tape.value(a), g));
  });
}

Var matmul_nt(Var a, Var b) {
  Tape& t = a.tape();
  return t.record(matmul_nt(a.value(), b.value()), {a, b}, [a, b](Tape& tape, const Matrix& g) {
    if (tape.requires_grad(a)) tape.accumulate(a, matmul(g, tape.value(b)));
    if (tape.requires_grad(b)) tape.accumulate(b, matmul_tn(g, tape.value(a)));
  });
}

Var add(Var a, Var b) {
  Tape& t = a.tape();
  return t.record(add(a.value(), b.value()), {a, b}, [a, b](Tape& tape, const Matrix& g) {
    tape.accumulate(a, g);
    tape.accumulate(b, g);
  });
}

Var add_row(Var m, Var row) {
  Tape& t = m.tape();
  return t.record(add_row(m.value(), row.value()), {m, row}, [m, row](Tape& tape, const Matrix& g) {
    tape.accumulate(m, g);
    if (Matrix* gr = tape.grad_buffer(row)) {
      for (std::size_t i = 0; i < g.rows(); ++i) {
        for (std::size_t j = 0; j < g.cols(); ++j) (*gr)(0, j) += g(i, j);
      }
    }
  });
}

Var mul(Var a, Var b) {
  Tape& t = a.tape();
  return t.record(hadamard(a.value(), b.value()), {a, b}, [a, b](Tape& tape, const Matrix& g) {
    if (tape.requires_grad(a)) tape.accumulate(a, hadamard(g, tape.value(b)));
    if (tape.requires_grad(b)) tape.accumulate(b, hadamard(g, tape.value(a)));
  });
}

Var scale(Var a, double factor) {
  Tape& t = a.tape();
  return t.record(scale(a.value(), factor), {a}, [a, factor](Tape& tape, const Matrix& g) {
    tape.accumulate(a, scale(g, factor));
  });
}

Var leaky_relu(Var a, double slope) {
  Tape& t = a.tape();
  return t.record(leaky_relu(a.value(), slope), {a}, [a, slope](Tape& tape, const Matrix& g) {
    Matrix* ga = tape.grad_buffer(a);
    const auto x = tape.value(a).data();
    const auto gd = g.data();
    auto dst = ga->data();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += x[i] >= 0.0 ? gd[i] : slope * gd[i];
  });
}

Var sigmoid(Var a) {
  Tape& t = a.tape();
  Matrix y = sigmoid(a.value());
  auto y_shared = std::make_shared<Matrix>(y);
  return t.record(std::move(y), {a}, [a, y_shared](Tape& tape, const Matrix& g) {
    Matrix* ga = tape.grad_buffer(a);
    const auto yd = y_shared->data();
    const auto gd = g.data();
    auto dst = ga->data();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += gd[i] * yd[i] * (1.0 - yd[i]);
  });
}

namespace {

Var softmax_impl(Var a, Matrix y) {
  Tape& t = a.tape();
  auto y_shared = std::make_shared<Matrix>(y);
  return t.record(std::move(y), {a}, [a, y_shared](Tape& tape, const Matrix& g) {
    Matrix* ga = tape.grad_buffer(a);
    const Matrix& ym = *y_shared;
    for (std::size_t i = 0; i < ym.rows(); ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < ym.cols(); ++j) dot += g(i, j) * ym(i, j);
      for (std::size_t j = 0; j < ym.cols(); ++j) (*ga)(i, j) += ym(i, j) * (g(i, j) - dot);
    }
  });
}

}  // namespace

Var softmax_rows(Var a) { return softmax_impl(a, softmax_rows(a.value())); }

Var masked_softmax_rows(Var a, std::span<const std::uint8_t> key_mask) {
  return softmax_impl(a, masked_softmax_rows(a.value(), key_mask));
}

Var layer_norm_rows(Var m, Var gain, Var bias, double eps) {
  Tape& t = m.tape();
  const Matrix& x = m.value();
  Matrix out = layer_norm_rows(x, gain.value(), bias.value(), eps);

  // Cache the standardized rows and inverse std-devs for the adjoint.
  auto xhat = std::make_shared<Matrix>(x.rows(), x.cols());
  auto inv_std = std::make_shared<std::vector<double>>(x.rows());
  const auto cols = static_cast<double>(x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const auto in = x.row(i);
    double mean = 0.0;
    for (double v : in) mean += v;
    mean /= cols;
    double var = 0.0;
    for (double v : in) var += (v - mean) * (v - mean);
    var /= cols;
    (*inv_std)[i] = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < in.size(); ++j) (*xhat)(i, j) = (in[j] - mean) * (*inv_std)[i];
  }

  return t.record(std::move(out), {m, gain, bias},
                  [m, gain, bias, xhat, inv_std](Tape& tape, const Matrix& g) {
    const Matrix& xh = *xhat;
    const std::size_t rows = xh.rows();
    const std::size_t cols = xh.cols();
    if (Matrix* gg = tape.grad_buffer(gain)) {
      for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < cols; ++j) (*gg)(0, j) += g(i, j) * xh(i, j);
      }
    }
    if (Matrix* gb = tape.grad_buffer(bias)) {
      for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < cols; ++j) (*gb)(0, j) += g(i, j);
      }
    }
    if (Matrix* gm = tape.grad_buffer(m)) {
      const Matrix& gamma = tape.value(gain);
      std::vector<double> dxhat(cols);
      for (std::size_t i = 0; i < rows; ++i) {
        double mean_d = 0.0;
        double mean_dx = 0.0;
        for (std::size_t j = 0; j < cols; ++j) {
          dxhat[j] = g(i, j) * gamma(0, j);
          mean_d += dxhat[j];
          mean_dx += dxhat[j] * xh(i, j);
        }
        mean_d /= static_cast<double>(cols);
        mean_dx /= static_cast<double>(cols);
        for (std::size_t j = 0; j < cols; ++j) {
          (*gm)(i, j) += (*inv_std)[i] * (dxhat[j] - mean_d - xh(i, j) * mean_dx);
        }
      }
    }
  });
}

Var sum(Var a) {
  Tape& t = a.tape();
  double total = 0.0;
  for (double v : a.value().data()) total += v;
  return t.record(Matrix(1, 1, total), {a}, [a](Tape& tape, const Matrix& g) {
    Matrix* ga = tape.grad_buffer(a);
    for (double& v : ga->data()) v += g(0, 0);
  });
}

Var gather_rows(Var table, std::span<const std::ptrdiff_t> indices) {
  Tape& t = table.tape();
  const Matrix& tab = table.value();
  Matrix out(indices.size(), tab.cols());
  for (std::size_t r = 0; r < indices.size(); ++r) {
    const std::ptrdiff_t idx = indices[r];
    if (idx < 0) continue;
    if (static_cast<std::size_t>(idx) >= tab.rows()) {
      throw ShapeError("gather_rows: index " + std::to_string(idx) + " outside " +
                       tab.shape_string());
    }
    std::copy_n(tab.row(static_cast<std::size_t>(idx)).begin(), tab.cols(), out.row(r).begin());
  }
  std::vector<std::ptrdiff_t> idx_copy(indices.begin(), indices.end());
  return t.record(std::move(out), {table}, [table, idx_copy](Tape& tape, const Matrix& g) {
    Matrix* gt = tape.grad_buffer(table);
    for (std::size_t r = 0; r < idx_copy.size(); ++r) {
      if (idx_copy[r] < 0) continue;
      auto dst = gt->row(static_cast<std::size_t>(idx_copy[r]));
      const auto src = g.row(r);
      for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += src[j];
    }
  });
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw ContractError("concat_cols of nothing");
  Tape& t = parts.front().tape();
  const std::size_t rows = parts.front().rows();
  std::size_t cols = 0;
  for (const Var& p : parts) {
    if (p.rows() != rows) {
      throw ShapeError("concat_cols: row mismatch " + parts.front().value().shape_string() +
                       " vs " + p.value().shape_string());
    }
    cols += p.cols();
  }
  Matrix out(rows, cols);
  std::size_t offset = 0;
  for (const Var& p : parts) {
    const Matrix& v = p.value();
    for (std::size_t i = 0; i < rows; ++i) {
      std::copy_n(v.row(i).begin(), v.cols(), out.row(i).begin() + static_cast<std::ptrdiff_t>(offset));
    }
    offset += v.cols();
  }
  std::vector<Var> inputs(parts.begin(), parts.end());
  return t.record(std::move(out), parts, [inputs](Tape& tape, const Matrix& g) {
    std::size_t off = 0;
    for (const Var& p : inputs) {
      const std::size_t w = tape.value(p).cols();
      if (Matrix* gp = tape.grad_buffer(p)) {
        for (std::size_t i = 0; i < g.rows(); ++i) {
          for (std::size_t j = 0; j < w; ++j) (*gp)(i, j) += g(i, off + j);
        }
      }
      off += w;
    }
  });
}

Var slice_cols(Var a, std::size_t start, std::size_t width) {
  Tape& t = a.tape();
  const Matrix& v = a.value();
  if (start + width > v.cols()) {
    throw ShapeError("slice_cols: [" + std::to_string(start) + ", " +
                     std::to_string(start + width) + ") outside " + v.shape_string());
  }
  Matrix out(v.rows(), width);
  for (std::size_t i = 0; i < v.rows(); ++i) {
    for (std::size_t j = 0; j < width; ++j) out(i, j) = v(i, start + j);
  }
  return t.record(std::move(out), {a}, [a, start, width](Tape& tape, const Matrix& g) {
    Matrix* ga = tape.grad_buffer(a);
    for (std::size_t i = 0; i < g.rows(); ++i) {
      for (std::size_t j = 0; j < width; ++j) (*ga)(i, start + j) += g(i, j);
    }
  });
}

Var mask_rows(Var a, std::span<const std::uint8_t> row_mask) {
  Tape& t = a.tape();
  const Matrix& v = a.value();
  if (row_mask.size() != v.rows()) {
    throw ShapeError("mask_rows: mask length " + std::to_string(row_mask.size()) + " for " +
                     v.shape_string());
  }
  Matrix out = v;
  for (std::size_t i = 0; i < out.rows(); ++i) {
    if (!row_mask[i]) std::fill(out.row(i).begin(), out.row(i).end(), 0.0);
  }
  std::vector<std::uint8_t> mask(row_mask.begin(), row_mask.end());
  return t.record(std::move(out), {a}, [a, mask](Tape& tape, const Matrix& g) {
    Matrix* ga = tape.grad_buffer(a);
    for (std::size_t i = 0; i < g.rows(); ++i) {
      if (!mask[i]) continue;
      auto dst = ga->row(i);
      const auto src = g.row(i);
      for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += src[j];
    }
  });
}

Var dropout(Var a, double p, Rng* rng) {
  if (rng == nullptr || p <= 0.0) return a;
  if (p >= 1.0) throw ContractError("dropout rate must be below 1");
  Tape& t = a.tape();
  const Matrix& v = a.value();
  auto keep = std::make_shared<Matrix>(v.rows(), v.cols());
  const double kept_scale = 1.0 / (1.0 - p);
  for (double& k : keep->data()) k = uniform01(*rng) >= p ? kept_scale : 0.0;
  return t.record(hadamard(v, *keep), {a}, [a, keep](Tape& tape, const Matrix& g) {
    tape.accumulate(a, hadamard(g, *keep));
  });
}

}  // namespace carca::numerics
