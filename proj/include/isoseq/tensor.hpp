#pragma once

#include "isoseq/errors.hpp"

#include <algorithm>
#include <cstddef>
#include <string>
#include <vector>

namespace isoseq::nn {

/// Dense row-major tensor of 64-bit floats.
struct Tensor {
    std::vector<int> shape;
    std::vector<double> v;

    Tensor() = default;

    explicit Tensor(std::vector<int> shp) : shape(std::move(shp)) {
        v.assign(checked_numel(shape), 0.0);
    }

    Tensor(std::vector<int> shp, std::vector<double> values)
        : shape(std::move(shp)), v(std::move(values)) {
        if (v.size() != checked_numel(shape))
            throw ShapeMismatch("tensor value count does not match shape");
    }

    static std::size_t checked_numel(const std::vector<int>& shape) {
        std::size_t n = 1;
        for (int d : shape) {
            if (d <= 0) throw ShapeMismatch("tensor dimensions must be positive");
            n *= static_cast<std::size_t>(d);
        }
        return n;
    }

    std::size_t numel() const { return v.size(); }
    double& operator[](std::size_t i) { return v[i]; }
    double operator[](std::size_t i) const { return v[i]; }

    int dim(std::size_t i) const { return shape[i]; }

    void fill(double value) { std::fill(v.begin(), v.end(), value); }

    bool same_shape(const Tensor& other) const { return shape == other.shape; }
};

inline void require_shape(const Tensor& t, const std::vector<int>& shape, const char* what) {
    if (t.shape != shape) throw ShapeMismatch(std::string(what) + ": unexpected tensor shape");
}

} // namespace isoseq::nn
