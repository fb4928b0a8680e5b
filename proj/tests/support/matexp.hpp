#pragma once

#include <cmath>

#include "odernn/matrix.hpp"

namespace testsupport {

// exp(M) for small matrices via scaling-and-squaring with a Taylor series.
// Independent reference for the forward-Euler convergence checks.
inline odernn::Matrix matrix_exponential(const odernn::Matrix& m) {
    using odernn::Matrix;
    const std::size_t n = m.rows;
    double norm = 0.0;
    for (double v : m.data) norm = std::max(norm, std::abs(v));
    norm *= static_cast<double>(n);
    int squarings = 0;
    double scale = 1.0;
    while (norm * scale > 0.5) {
        scale *= 0.5;
        ++squarings;
    }

    Matrix scaled = m;
    for (double& v : scaled.data) v *= scale;

    Matrix result(n, n);
    for (std::size_t i = 0; i < n; ++i) result(i, i) = 1.0;
    Matrix term = result;
    for (int k = 1; k <= 24; ++k) {
        term = odernn::matmul_values(term, scaled);
        for (double& v : term.data) v /= static_cast<double>(k);
        result += term;
    }
    for (int k = 0; k < squarings; ++k) {
        result = odernn::matmul_values(result, result);
    }
    return result;
}

}  // namespace testsupport
