#include "gpe/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "gpe/numeric.hpp"

namespace gpe {

double accuracy(const std::vector<std::size_t>& predictions,
                const std::vector<std::size_t>& labels) {
    if (predictions.empty() || predictions.size() != labels.size())
        throw DomainError("accuracy: empty or mismatched inputs");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < predictions.size(); ++i)
        if (predictions[i] == labels[i]) ++hits;
    return static_cast<double>(hits) / static_cast<double>(predictions.size());
}

double harmonic_mean(double base, double novel) {
    if (base <= 0.0 || novel <= 0.0) throw DomainError("harmonic_mean: inputs must be positive");
    return 2.0 * base * novel / (base + novel);
}

std::vector<double> jacobi_eigenvalues(Matrix a) {
    if (a.rows != a.cols) throw ShapeError("jacobi_eigenvalues: square matrix required");
    const std::size_t n = a.rows;
    auto offdiag_norm = [&]() {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                if (i != j) s += a(i, j) * a(i, j);
        return std::sqrt(s);
    };
    const int max_sweeps = 100;
    for (int sweep = 0; sweep < max_sweeps && offdiag_norm() >= 1e-12; ++sweep) {
        for (std::size_t p = 0; p + 1 < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t i = 0; i < n; ++i) {
                    const double aip = a(i, p), aiq = a(i, q);
                    a(i, p) = c * aip - s * aiq;
                    a(i, q) = s * aip + c * aiq;
                }
                for (std::size_t j = 0; j < n; ++j) {
                    const double apj = a(p, j), aqj = a(q, j);
                    a(p, j) = c * apj - s * aqj;
                    a(q, j) = s * apj + c * aqj;
                }
            }
    }
    std::vector<double> eig(n);
    for (std::size_t i = 0; i < n; ++i) eig[i] = a(i, i);
    std::sort(eig.rbegin(), eig.rend());
    return eig;
}

Matrix similarity_kernel(const Matrix& embeddings) {
    const std::size_t n = embeddings.rows;
    Matrix k(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        k(i, i) = 1.0;
        for (std::size_t j = i + 1; j < n; ++j) {
            const double s = cosine_similarity(embeddings.row(i), embeddings.row(j));
            k(i, j) = s;
            k(j, i) = s;
        }
    }
    return k;
}

double vendi_score(const Matrix& embeddings) {
    if (embeddings.rows < 1) throw DomainError("vendi_score: need at least one row");
    Matrix k = similarity_kernel(embeddings);
    const double inv_n = 1.0 / static_cast<double>(k.rows);
    for (double& v : k.data) v *= inv_n;
    const std::vector<double> eig = jacobi_eigenvalues(std::move(k));
    double entropy = 0.0;
    for (double lam : eig) {
        if (lam <= 0.0) continue;  // clamp: PSD up to roundoff
        entropy -= lam * std::log(lam);
    }
    return std::exp(entropy);
}

}  // namespace gpe
