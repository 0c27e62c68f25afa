#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "spatspark/kernels.hpp"
#include "spatspark/ndarray.hpp"
#include "spatspark/param.hpp"

namespace spatspark::num {

// Eager reverse-mode tape. Every op computes its value immediately and, when
// gradients are enabled, records a closure that scatters its output gradient
// to its parents. Params enter the graph through leaf(); backward() flushes
// their accumulated gradients into Param::grad.
struct Node;
using Var = std::shared_ptr<Node>;

struct Node {
    NdArray value;
    NdArray grad;  // sized during backward
    std::vector<Var> parents;
    std::function<void(Node&)> backprop;  // may be empty (constants)
    const char* op = "";
};

bool grad_enabled();

// RAII switch: inside the scope ops compute values only (no graph is built).
struct NoGrad {
    NoGrad();
    ~NoGrad();
    NoGrad(const NoGrad&) = delete;
    NoGrad& operator=(const NoGrad&) = delete;

private:
    bool prev_;
};

Var constant(NdArray v, const char* op = "constant");
Var leaf(Param& p);

// Generic hook for fused ops defined outside this module (losses).
Var make_op(NdArray value, std::vector<Var> parents, std::function<void(Node&)> backprop,
            const char* op);

// Populates Param gradients for every Param reachable from `loss`.
// Caller zeroes grads beforehand; loss must be scalar.
void backward(const Var& loss);

// Differentiable wrappers over the kernels.
Var conv2d(const Var& x, const Var& w, const Var& b, std::size_t stride, std::size_t padding);
Var transposed_conv2d(const Var& x, const Var& w, const Var& b, std::size_t stride,
                      std::size_t padding = 0);
Var batchnorm_masked(const Var& x, const ActiveMask& active, const Var& gamma, const Var& beta,
                     double eps, NdArray* running_mean, NdArray* running_var, double momentum,
                     bool train);
Var relu(const Var& x);
Var tanh_act(const Var& x);
Var maxpool2x2(const Var& x);
Var add(const Var& a, const Var& b);
Var zero_inactive(const Var& x, const ActiveMask& active);

// Densify primitives: m is one learnable [C] vector broadcast over space.
Var densify_fill(const Var& s, const Var& m, const ActiveMask& active);  // m only at inactive
Var densify_add(const Var& s, const Var& m);                             // s + broadcast(m)

Var sum(const Var& x);
Var mse_loss(const Var& pred, const NdArray& target);

}  // namespace spatspark::num
