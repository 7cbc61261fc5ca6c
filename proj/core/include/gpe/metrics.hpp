#pragma once

#include <vector>

#include "gpe/matrix.hpp"

namespace gpe {

double accuracy(const std::vector<std::size_t>& predictions,
                const std::vector<std::size_t>& labels);

// 2ab/(a+b); inputs must be positive.
double harmonic_mean(double base, double novel);

// Eigenvalues of a symmetric matrix via cyclic Jacobi rotations, descending.
// Converges when the off-diagonal Frobenius norm drops below 1e-12.
std::vector<double> jacobi_eigenvalues(Matrix a);

// Cosine-kernel pairwise similarities (n x n, unit diagonal for unit rows).
Matrix similarity_kernel(const Matrix& embeddings);

// exp of the Shannon entropy of the eigenvalues of K/n. Eigenvalues are
// clamped at 0 before the entropy (cosine kernels can go -1e-15 numerically).
double vendi_score(const Matrix& embeddings);

}  // namespace gpe
