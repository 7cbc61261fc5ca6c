#pragma once

#include <cstddef>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <vector>

namespace gpe {

// Shape violations (dimension mismatches, band overruns).
class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Value-domain violations (zero norms, degenerate softmax rows, ...).
class DomainError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Dense row-major matrix of doubles. The only value carrier in the library.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}
    Matrix(std::size_t r, std::size_t c, std::vector<double> d)
        : rows(r), cols(c), data(std::move(d)) {
        if (data.size() != rows * cols) throw ShapeError("Matrix: data length != rows*cols");
    }

    static Matrix from_rows(std::initializer_list<std::initializer_list<double>> vals) {
        Matrix m(vals.size(), vals.size() ? vals.begin()->size() : 0);
        std::size_t i = 0;
        for (const auto& row : vals) {
            if (row.size() != m.cols) throw ShapeError("Matrix::from_rows: ragged rows");
            std::size_t j = 0;
            for (double v : row) m(i, j++) = v;
            ++i;
        }
        return m;
    }

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

    const double* row_ptr(std::size_t i) const { return data.data() + i * cols; }
    double* row_ptr(std::size_t i) { return data.data() + i * cols; }

    bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }
    std::size_t size() const { return data.size(); }

    Matrix row(std::size_t i) const {
        Matrix r(1, cols);
        for (std::size_t j = 0; j < cols; ++j) r(0, j) = (*this)(i, j);
        return r;
    }

    // Rows [r0, r1) as a new matrix.
    Matrix slice_rows(std::size_t r0, std::size_t r1) const {
        if (r1 < r0 || r1 > rows) throw ShapeError("slice_rows: bad range");
        Matrix r(r1 - r0, cols);
        for (std::size_t i = r0; i < r1; ++i)
            for (std::size_t j = 0; j < cols; ++j) r(i - r0, j) = (*this)(i, j);
        return r;
    }
};

inline std::string shape_str(const Matrix& m) {
    return std::to_string(m.rows) + "x" + std::to_string(m.cols);
}

}  // namespace gpe
