#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace sfag::ad {

/// Dense row-major matrix of doubles. Row vectors are [1 x n], scalars [1 x 1].
struct Tensor {
    int rows = 0;
    int cols = 0;
    std::vector<double> data;

    Tensor() = default;

    Tensor(int r, int c) : rows(r), cols(c), data(check_dims(r, c), 0.0) {}

    Tensor(int r, int c, std::vector<double> d) : rows(r), cols(c), data(std::move(d)) {
        if (static_cast<std::size_t>(check_dims(r, c)) != data.size())
            throw std::invalid_argument("tensor data size " + std::to_string(data.size()) +
                                        " does not match shape " + shape_str());
    }

    static Tensor scalar(double v) { return Tensor(1, 1, {v}); }

    static Tensor row(std::vector<double> v) {
        const int n = static_cast<int>(v.size());
        return Tensor(1, n, std::move(v));
    }

    static Tensor zeros(int r, int c) { return Tensor(r, c); }

    static Tensor full(int r, int c, double v) {
        Tensor t(r, c);
        for (double& x : t.data) x = v;
        return t;
    }

    int numel() const { return rows * cols; }

    double& at(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
    double at(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }

    double scalar_value() const {
        if (rows != 1 || cols != 1)
            throw std::invalid_argument("expected scalar tensor, got " + shape_str());
        return data[0];
    }

    bool same_shape(const Tensor& o) const { return rows == o.rows && cols == o.cols; }

    std::string shape_str() const {
        return "[" + std::to_string(rows) + "x" + std::to_string(cols) + "]";
    }

    bool all_finite() const {
        for (double x : data)
            if (!std::isfinite(x)) return false;
        return true;
    }

private:
    static std::size_t check_dims(int r, int c) {
        if (r <= 0 || c <= 0)
            throw std::invalid_argument("tensor dimensions must be positive, got [" +
                                        std::to_string(r) + "x" + std::to_string(c) + "]");
        return static_cast<std::size_t>(r) * static_cast<std::size_t>(c);
    }
};

} // namespace sfag::ad
