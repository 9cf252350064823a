#pragma once

#include <cstdint>
#include <span>

#include "carca/numerics/matrix.hpp"

// Plain forward kernels on Matrix values. The differentiable wrappers in tape.hpp
// call these for their forward pass.
namespace carca::numerics {

inline constexpr double kLayerNormEps = 1e-8;

Matrix matmul(const Matrix& a, const Matrix& b);
// a * b^T
Matrix matmul_nt(const Matrix& a, const Matrix& b);
// a^T * b
Matrix matmul_tn(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& m);

Matrix add(const Matrix& a, const Matrix& b);
Matrix hadamard(const Matrix& a, const Matrix& b);
Matrix scale(const Matrix& m, double factor);
// Adds the 1 x cols row vector to every row of m.
Matrix add_row(const Matrix& m, const Matrix& row);

Matrix softmax_rows(const Matrix& m);
// Row softmax where columns with key_mask[c] == 0 get probability 0 (logit -inf).
// A row whose keys are all masked comes out as zeros.
Matrix masked_softmax_rows(const Matrix& m, std::span<const std::uint8_t> key_mask);

Matrix leaky_relu(const Matrix& m, double slope);
Matrix sigmoid(const Matrix& m);

// Per-row standardization followed by gain/bias (both 1 x cols).
Matrix layer_norm_rows(const Matrix& m, const Matrix& gain, const Matrix& bias,
                       double eps = kLayerNormEps);

}  // namespace carca::numerics
