#pragma once

#include <functional>

#include "gpe/matrix.hpp"

namespace gpe {

Matrix matmul(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& a);

// Row-wise softmax with per-row max subtraction. -inf entries map to exactly
// 0; a row with no finite entry is a degenerate-row error.
Matrix softmax_rows(const Matrix& x);

// Per-row standardization with biased variance, then affine with gain/bias
// (each 1 x cols).
Matrix layer_norm(const Matrix& x, const Matrix& gain, const Matrix& bias, double eps = 1e-5);

// softmax_rows(q k^T scale + mask) v. Masked columns carry exactly zero
// weight: the mask's -inf entries are replaced by the most negative finite
// double before the softmax and the corresponding weights are re-zeroed
// afterwards, so 0*inf never appears and maskedness is exact.
Matrix masked_attention(const Matrix& q, const Matrix& k, const Matrix& v,
                        const Matrix& mask, double scale);

double cosine_similarity(const Matrix& a, const Matrix& b);

// Central differences, entrywise: (f(x+he) - f(x-he)) / 2h.
Matrix finite_diff_grad(const std::function<double(const Matrix&)>& f, const Matrix& x,
                        double step = 1e-5);

}  // namespace gpe
