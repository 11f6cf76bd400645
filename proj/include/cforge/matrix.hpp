#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

namespace cforge {

// Dense row-major matrix of doubles. All numeric state in the engine is f64.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    std::size_t size() const { return data.size(); }

    bool same_shape(const Matrix& other) const { return rows == other.rows && cols == other.cols; }

    bool all_finite() const {
        return std::all_of(data.begin(), data.end(), [](double v) { return std::isfinite(v); });
    }

    friend bool operator==(const Matrix&, const Matrix&) = default;
};

inline double max_entry(const Matrix& m) {
    return *std::max_element(m.data.begin(), m.data.end());
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Binary cross entropy on a raw logit with a soft target in [0, 1],
// evaluated in the overflow-safe form max(x,0) - x*y + log(1 + exp(-|x|)).
inline double bce_with_logits(double logit, double target) {
    return std::max(logit, 0.0) - logit * target + std::log1p(std::exp(-std::abs(logit)));
}

}  // namespace cforge
