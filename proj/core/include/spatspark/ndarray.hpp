#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "spatspark/error.hpp"

namespace spatspark {

// Dense n-dimensional array of doubles, row-major. The one value type every
// numeric operation in the engine speaks.
struct NdArray {
    std::vector<std::size_t> shape;
    std::vector<double> data;

    NdArray() = default;

    explicit NdArray(std::vector<std::size_t> s, double fill = 0.0)
        : shape(std::move(s)), data(numel_of(shape), fill) {}

    static NdArray from(std::vector<std::size_t> s, std::vector<double> d) {
        NdArray a;
        a.shape = std::move(s);
        a.data = std::move(d);
        if (numel_of(a.shape) != a.data.size())
            throw_dim("NdArray: data length " + std::to_string(a.data.size()) +
                      " does not match shape product " + std::to_string(numel_of(a.shape)));
        return a;
    }

    static NdArray scalar(double v) { return from({1}, {v}); }

    std::size_t rank() const { return shape.size(); }
    std::size_t numel() const { return data.size(); }
    bool same_shape(const NdArray& o) const { return shape == o.shape; }

    double& operator[](std::size_t i) { return data[i]; }
    double operator[](std::size_t i) const { return data[i]; }

    // flat index helpers for the common layouts
    std::size_t idx3(std::size_t a, std::size_t b, std::size_t c) const {
        return (a * shape[1] + b) * shape[2] + c;
    }
    std::size_t idx4(std::size_t a, std::size_t b, std::size_t c, std::size_t d) const {
        return ((a * shape[1] + b) * shape[2] + c) * shape[3] + d;
    }
    double& at3(std::size_t a, std::size_t b, std::size_t c) { return data[idx3(a, b, c)]; }
    double at3(std::size_t a, std::size_t b, std::size_t c) const { return data[idx3(a, b, c)]; }
    double& at4(std::size_t a, std::size_t b, std::size_t c, std::size_t d) { return data[idx4(a, b, c, d)]; }
    double at4(std::size_t a, std::size_t b, std::size_t c, std::size_t d) const { return data[idx4(a, b, c, d)]; }

    std::string shape_str() const {
        std::string s = "[";
        for (std::size_t i = 0; i < shape.size(); ++i) {
            if (i) s += ",";
            s += std::to_string(shape[i]);
        }
        return s + "]";
    }

    static std::size_t numel_of(const std::vector<std::size_t>& s) {
        std::size_t n = 1;
        for (auto e : s) n *= e;
        return s.empty() ? 0 : n;
    }
};

// Order-independent reduction: pairwise (tree) summation over a span.
double pairwise_sum(std::span<const double> xs);

inline double pairwise_sum(const NdArray& a) { return pairwise_sum(std::span<const double>(a.data)); }

// Throws ErrKind::numeric naming `who` if any entry is NaN or Inf.
void check_finite(const NdArray& a, const char* who);

bool all_finite(const NdArray& a);

}  // namespace spatspark
