#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace hmr {

struct ShapeError : std::runtime_error {
    explicit ShapeError(const std::string& msg) : std::runtime_error(msg) {}
};

struct DomainError : std::runtime_error {
    explicit DomainError(const std::string& msg) : std::runtime_error(msg) {}
};

// Dense row-major matrix of doubles. All heavier numerics in the project are
// built on this one type.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}
    Matrix(std::size_t r, std::size_t c, std::vector<double> d)
        : rows(r), cols(c), data(std::move(d)) {
        if (data.size() != rows * cols)
            throw ShapeError("Matrix: data length does not match rows*cols");
    }

    double& at(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double at(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

    double* row(std::size_t i) { return data.data() + i * cols; }
    const double* row(std::size_t i) const { return data.data() + i * cols; }

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m.at(i, i) = 1.0;
        return m;
    }

    bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }
};

// Boolean attention mask; allowed(i,j) marks a scorable position.
struct AttnMask {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<std::uint8_t> allowed;

    AttnMask() = default;
    AttnMask(std::size_t r, std::size_t c, bool allow_all = false)
        : rows(r), cols(c), allowed(r * c, allow_all ? 1 : 0) {}

    bool at(std::size_t i, std::size_t j) const { return allowed[i * cols + j] != 0; }
    void set(std::size_t i, std::size_t j, bool v) { allowed[i * cols + j] = v ? 1 : 0; }
};

inline Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols != b.rows)
        throw ShapeError("matmul: inner dimensions disagree (" +
                         std::to_string(a.cols) + " vs " + std::to_string(b.rows) + ")");
    Matrix out(a.rows, b.cols);
    // i,k,j loop order: contributions for each (i,j) still accumulate in
    // ascending k, matching the naive i,j,k triple loop bit-for-bit.
    for (std::size_t i = 0; i < a.rows; ++i) {
        const double* arow = a.row(i);
        double* orow = out.row(i);
        for (std::size_t k = 0; k < a.cols; ++k) {
            const double aik = arow[k];
            const double* brow = b.row(k);
            for (std::size_t j = 0; j < b.cols; ++j)
                orow[j] += aik * brow[j];
        }
    }
    return out;
}

inline Matrix transpose(const Matrix& a) {
    Matrix out(a.cols, a.rows);
    for (std::size_t i = 0; i < a.rows; ++i)
        for (std::size_t j = 0; j < a.cols; ++j)
            out.at(j, i) = a.at(i, j);
    return out;
}

// Row softmax with boolean mask. Disallowed entries get weight exactly 0 and
// never enter the max or the sum, so perturbing a masked-out column cannot
// change the output row at all.
inline Matrix masked_softmax(const Matrix& scores, const AttnMask& mask) {
    if (scores.rows != mask.rows || scores.cols != mask.cols)
        throw ShapeError("masked_softmax: mask shape does not match scores");
    Matrix out(scores.rows, scores.cols);
    for (std::size_t i = 0; i < scores.rows; ++i) {
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < scores.cols; ++j)
            if (mask.at(i, j) && scores.at(i, j) > mx) mx = scores.at(i, j);
        if (mx == -std::numeric_limits<double>::infinity())
            throw DomainError("masked_softmax: fully masked row " + std::to_string(i));
        double sum = 0.0;
        for (std::size_t j = 0; j < scores.cols; ++j) {
            if (!mask.at(i, j)) continue;
            const double e = std::exp(scores.at(i, j) - mx);
            out.at(i, j) = e;
            sum += e;
        }
        for (std::size_t j = 0; j < scores.cols; ++j)
            if (mask.at(i, j)) out.at(i, j) /= sum;
    }
    return out;
}

inline Matrix softmax_rows(const Matrix& scores) {
    return masked_softmax(scores, AttnMask(scores.rows, scores.cols, true));
}

struct LayerNormParams {
    std::vector<double> gain;
    std::vector<double> bias;
    double eps = 1e-5;

    LayerNormParams() = default;
    explicit LayerNormParams(std::size_t dim, double e = 1e-5)
        : gain(dim, 1.0), bias(dim, 0.0), eps(e) {}
};

inline Matrix layer_norm(const Matrix& x, const std::vector<double>& gain,
                         const std::vector<double>& bias, double eps) {
    if (gain.size() != x.cols || bias.size() != x.cols)
        throw ShapeError("layer_norm: gain/bias length must equal x.cols");
    Matrix out(x.rows, x.cols);
    for (std::size_t i = 0; i < x.rows; ++i) {
        double mean = 0.0;
        for (std::size_t j = 0; j < x.cols; ++j) mean += x.at(i, j);
        mean /= static_cast<double>(x.cols);
        double var = 0.0;
        for (std::size_t j = 0; j < x.cols; ++j) {
            const double d = x.at(i, j) - mean;
            var += d * d;
        }
        var /= static_cast<double>(x.cols);
        const double inv = 1.0 / std::sqrt(var + eps);
        for (std::size_t j = 0; j < x.cols; ++j)
            out.at(i, j) = (x.at(i, j) - mean) * inv * gain[j] + bias[j];
    }
    return out;
}

inline Matrix layer_norm(const Matrix& x, const LayerNormParams& p) {
    return layer_norm(x, p.gain, p.bias, p.eps);
}

inline double sigmoid(double x) {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

inline double inv_sigmoid(double p, double eps = 1e-6) {
    if (p < eps) p = eps;
    if (p > 1.0 - eps) p = 1.0 - eps;
    return std::log(p / (1.0 - p));
}

// Affine map y = x W + b, with W stored as in_dim x out_dim.
struct Linear {
    Matrix weight;
    std::vector<double> bias;

    Linear() = default;
    Linear(std::size_t in_dim, std::size_t out_dim)
        : weight(in_dim, out_dim), bias(out_dim, 0.0) {}

    std::size_t in_dim() const { return weight.rows; }
    std::size_t out_dim() const { return weight.cols; }

    Matrix apply(const Matrix& x) const {
        Matrix out = matmul(x, weight);
        for (std::size_t i = 0; i < out.rows; ++i)
            for (std::size_t j = 0; j < out.cols; ++j)
                out.at(i, j) += bias[j];
        return out;
    }
};

inline Matrix relu(Matrix x) {
    for (double& v : x.data)
        if (v < 0.0) v = 0.0;
    return x;
}

inline Matrix add(const Matrix& a, const Matrix& b) {
    if (!a.same_shape(b)) throw ShapeError("add: shape mismatch");
    Matrix out = a;
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += b.data[i];
    return out;
}

} // namespace hmr
