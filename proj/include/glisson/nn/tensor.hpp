#pragma once

#include <cstdint>
#include <numeric>
#include <vector>

namespace glisson::nn {

/// Dense row-major tensor of doubles. All network math runs in 64-bit so the
/// finite-difference gradient checks have headroom.
struct Tensor {
    std::vector<int> shape;
    std::vector<double> data;

    Tensor() = default;
    explicit Tensor(std::vector<int> s) : shape(std::move(s)) {
        data.assign(std::size_t(numel_of(shape)), 0.0);
    }

    static std::int64_t numel_of(const std::vector<int>& s) {
        std::int64_t n = 1;
        for (int d : s) n *= d;
        return s.empty() ? 0 : n;
    }

    std::int64_t numel() const { return std::int64_t(data.size()); }
    int dim(std::size_t i) const { return shape[i]; }
    bool empty() const { return data.empty(); }

    double* ptr() { return data.data(); }
    const double* ptr() const { return data.data(); }
};

} // namespace glisson::nn
