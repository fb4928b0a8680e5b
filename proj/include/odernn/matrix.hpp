#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

#include "odernn/errors.hpp"

namespace odernn {

/// Dense row-major matrix of doubles. The single value type of the library:
/// hidden states, inputs, weights and gradients are all Matrix instances.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}
    Matrix(std::size_t r, std::size_t c, std::vector<double> values)
        : rows(r), cols(c), data(std::move(values)) {
        if (data.size() != rows * cols) {
            throw DimensionError("matrix: data length " + std::to_string(data.size()) +
                                 " does not match shape " + shape_str());
        }
    }

    static Matrix zeros(std::size_t r, std::size_t c) { return Matrix(r, c); }

    static Matrix full(std::size_t r, std::size_t c, double v) {
        Matrix m(r, c);
        for (double& x : m.data) x = v;
        return m;
    }

    static Matrix row_vector(std::initializer_list<double> values) {
        return Matrix(1, values.size(), std::vector<double>(values));
    }

    static Matrix column_vector(const std::vector<double>& values) {
        return Matrix(values.size(), 1, values);
    }

    double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

    std::size_t size() const { return data.size(); }
    bool empty() const { return data.empty(); }
    bool same_shape(const Matrix& other) const { return rows == other.rows && cols == other.cols; }

    std::string shape_str() const { return std::to_string(rows) + "x" + std::to_string(cols); }

    bool all_finite() const {
        for (double v : data) {
            if (!std::isfinite(v)) return false;
        }
        return true;
    }

    void fill(double v) {
        for (double& x : data) x = v;
    }

    Matrix& operator+=(const Matrix& other) {
        if (!same_shape(other)) {
            throw DimensionError("matrix +=: shape mismatch (" + shape_str() + " vs " +
                                 other.shape_str() + ")");
        }
        for (std::size_t i = 0; i < data.size(); ++i) data[i] += other.data[i];
        return *this;
    }
};

/// c = a * b
inline Matrix matmul_values(const Matrix& a, const Matrix& b) {
    if (a.cols != b.rows) {
        throw DimensionError("matmul: inner dimensions mismatch (" + a.shape_str() + " vs " +
                             b.shape_str() + ")");
    }
    Matrix c(a.rows, b.cols);
    for (std::size_t i = 0; i < a.rows; ++i) {
        const double* arow = &a.data[i * a.cols];
        double* crow = &c.data[i * b.cols];
        for (std::size_t k = 0; k < a.cols; ++k) {
            const double aik = arow[k];
            if (aik == 0.0) continue;
            const double* brow = &b.data[k * b.cols];
            for (std::size_t j = 0; j < b.cols; ++j) crow[j] += aik * brow[j];
        }
    }
    return c;
}

/// dest += g * b^T   (dest: m x k, g: m x n, b: k x n)
inline void add_matmul_nt(Matrix& dest, const Matrix& g, const Matrix& b) {
    for (std::size_t i = 0; i < g.rows; ++i) {
        const double* grow = &g.data[i * g.cols];
        double* drow = &dest.data[i * dest.cols];
        for (std::size_t k = 0; k < b.rows; ++k) {
            const double* brow = &b.data[k * b.cols];
            double acc = 0.0;
            for (std::size_t j = 0; j < g.cols; ++j) acc += grow[j] * brow[j];
            drow[k] += acc;
        }
    }
}

/// dest += a^T * g   (dest: k x n, a: m x k, g: m x n)
inline void add_matmul_tn(Matrix& dest, const Matrix& a, const Matrix& g) {
    for (std::size_t i = 0; i < a.rows; ++i) {
        const double* arow = &a.data[i * a.cols];
        const double* grow = &g.data[i * g.cols];
        for (std::size_t k = 0; k < a.cols; ++k) {
            const double aik = arow[k];
            if (aik == 0.0) continue;
            double* drow = &dest.data[k * dest.cols];
            for (std::size_t j = 0; j < g.cols; ++j) drow[j] += aik * grow[j];
        }
    }
}

}  // namespace odernn
