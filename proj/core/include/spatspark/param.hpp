#pragma once

#include <string>

#include "spatspark/ndarray.hpp"

namespace spatspark {

// Learnable weight: value plus an accumulated gradient slot. The gradient
// array is materialized on first touch so huge models can be built for
// counting/inspection without doubling memory.
struct Param {
    NdArray value;
    std::string name;
    bool trainable = true;

    Param() = default;
    Param(std::string n, NdArray v, bool train = true)
        : value(std::move(v)), name(std::move(n)), trainable(train) {}

    NdArray& grad() {
        if (grad_.data.size() != value.numel()) grad_ = NdArray(value.shape);
        return grad_;
    }
    const NdArray& grad() const { return const_cast<Param*>(this)->grad(); }

    void zero_grad() {
        auto& g = grad();
        std::fill(g.data.begin(), g.data.end(), 0.0);
    }

    void accumulate_grad(const NdArray& g) {
        if (!g.same_shape(value))
            throw_dim("Param " + name + ": gradient shape " + g.shape_str() +
                      " != value shape " + value.shape_str());
        auto& dst = grad();
        for (std::size_t i = 0; i < dst.numel(); ++i) dst[i] += g[i];
    }

private:
    NdArray grad_;
};

}  // namespace spatspark
