#include "gpe/numeric.hpp"

#include <cmath>
#include <limits>

namespace gpe {

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols != b.rows)
        throw ShapeError("matmul: " + shape_str(a) + " * " + shape_str(b));
    Matrix out(a.rows, b.cols);
    for (std::size_t i = 0; i < a.rows; ++i) {
        const double* ar = a.row_ptr(i);
        double* orow = out.row_ptr(i);
        for (std::size_t kk = 0; kk < a.cols; ++kk) {
            const double av = ar[kk];
            if (av == 0.0) continue;
            const double* br = b.row_ptr(kk);
            for (std::size_t j = 0; j < b.cols; ++j) orow[j] += av * br[j];
        }
    }
    return out;
}

Matrix transpose(const Matrix& a) {
    Matrix out(a.cols, a.rows);
    for (std::size_t i = 0; i < a.rows; ++i)
        for (std::size_t j = 0; j < a.cols; ++j) out(j, i) = a(i, j);
    return out;
}

Matrix softmax_rows(const Matrix& x) {
    Matrix out(x.rows, x.cols);
    for (std::size_t i = 0; i < x.rows; ++i) {
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < x.cols; ++j) {
            const double v = x(i, j);
            if (std::isfinite(v) && v > mx) mx = v;
        }
        if (!std::isfinite(mx))
            throw DomainError("softmax_rows: degenerate row " + std::to_string(i));
        double sum = 0.0;
        for (std::size_t j = 0; j < x.cols; ++j) {
            const double v = x(i, j);
            const double e = std::isfinite(v) ? std::exp(v - mx) : 0.0;
            out(i, j) = e;
            sum += e;
        }
        for (std::size_t j = 0; j < x.cols; ++j) out(i, j) /= sum;
    }
    return out;
}

Matrix layer_norm(const Matrix& x, const Matrix& gain, const Matrix& bias, double eps) {
    if (gain.size() != x.cols || bias.size() != x.cols)
        throw ShapeError("layer_norm: gain/bias length must equal cols");
    if (eps <= 0.0) throw DomainError("layer_norm: eps must be positive");
    Matrix out(x.rows, x.cols);
    for (std::size_t i = 0; i < x.rows; ++i) {
        double mean = 0.0;
        for (std::size_t j = 0; j < x.cols; ++j) mean += x(i, j);
        mean /= static_cast<double>(x.cols);
        double var = 0.0;
        for (std::size_t j = 0; j < x.cols; ++j) {
            const double d = x(i, j) - mean;
            var += d * d;
        }
        var /= static_cast<double>(x.cols);
        const double inv = 1.0 / std::sqrt(var + eps);
        for (std::size_t j = 0; j < x.cols; ++j)
            out(i, j) = (x(i, j) - mean) * inv * gain.data[j] + bias.data[j];
    }
    return out;
}

Matrix masked_attention(const Matrix& q, const Matrix& k, const Matrix& v,
                        const Matrix& mask, double scale) {
    if (q.rows != mask.rows || k.rows != mask.cols)
        throw ShapeError("masked_attention: mask dimension mismatch");
    if (k.rows != v.rows) throw ShapeError("masked_attention: k/v row mismatch");
    constexpr double kFloor = -std::numeric_limits<double>::max();
    Matrix scores = matmul(q, transpose(k));
    for (std::size_t i = 0; i < scores.rows; ++i)
        for (std::size_t j = 0; j < scores.cols; ++j) {
            const double m = mask(i, j);
            scores(i, j) = std::isfinite(m) ? scores(i, j) * scale + m : kFloor;
        }
    Matrix weights(scores.rows, scores.cols);
    for (std::size_t i = 0; i < scores.rows; ++i) {
        double mx = kFloor;
        bool any = false;
        for (std::size_t j = 0; j < scores.cols; ++j) {
            if (std::isfinite(mask(i, j))) {
                any = true;
                if (scores(i, j) > mx) mx = scores(i, j);
            }
        }
        if (!any) throw DomainError("masked_attention: fully masked row " + std::to_string(i));
        double sum = 0.0;
        for (std::size_t j = 0; j < scores.cols; ++j) {
            const double e = std::isfinite(mask(i, j)) ? std::exp(scores(i, j) - mx) : 0.0;
            weights(i, j) = e;
            sum += e;
        }
        for (std::size_t j = 0; j < scores.cols; ++j) {
            weights(i, j) /= sum;
            if (!std::isfinite(mask(i, j))) weights(i, j) = 0.0;  // exact maskedness
        }
    }
    return matmul(weights, v);
}

double cosine_similarity(const Matrix& a, const Matrix& b) {
    if (a.size() != b.size()) throw ShapeError("cosine_similarity: length mismatch");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a.data[i] * b.data[i];
        na += a.data[i] * a.data[i];
        nb += b.data[i] * b.data[i];
    }
    if (na == 0.0 || nb == 0.0) throw DomainError("cosine_similarity: zero-norm input");
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

Matrix finite_diff_grad(const std::function<double(const Matrix&)>& f, const Matrix& x,
                        double step) {
    Matrix g(x.rows, x.cols);
    Matrix xp = x;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double orig = xp.data[i];
        xp.data[i] = orig + step;
        const double fp = f(xp);
        xp.data[i] = orig - step;
        const double fm = f(xp);
        xp.data[i] = orig;
        if (!std::isfinite(fp) || !std::isfinite(fm))
            throw DomainError("finite_diff_grad: non-finite evaluation");
        g.data[i] = (fp - fm) / (2.0 * step);
    }
    return g;
}

}  // namespace gpe
