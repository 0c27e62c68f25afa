#pragma once

#include <cstdint>
#include <vector>

#include "spatspark/ndarray.hpp"

namespace spatspark::num {

// Batched boolean position map for masked batch normalization / re-zeroing.
// v[(n*h + y)*w + x] != 0 means position (n,y,x) is active (visible).
struct ActiveMask {
    std::size_t n = 0, h = 0, w = 0;
    std::vector<std::uint8_t> v;

    ActiveMask() = default;
    ActiveMask(std::size_t n_, std::size_t h_, std::size_t w_, std::uint8_t fill = 1)
        : n(n_), h(h_), w(w_), v(n_ * h_ * w_, fill) {}

    bool at(std::size_t ni, std::size_t y, std::size_t x) const { return v[(ni * h + y) * w + x] != 0; }
    std::uint8_t& at(std::size_t ni, std::size_t y, std::size_t x) { return v[(ni * h + y) * w + x]; }
    std::size_t count_active() const {
        std::size_t c = 0;
        for (auto b : v) c += (b != 0);
        return c;
    }
};

// ---------------------------------------------------------------------------
// Convolution kernels. Weight layouts:
//   conv2d:            [C_out, C_in, k, k], input [C_in,H,W] or [N,C_in,H,W]
//   transposed_conv2d: [C_in, C_out, k, k], input likewise
// conv2d output extent: H' = floor((H + 2p - k)/stride) + 1
// transposed output extent: H' = (H - 1)*stride - 2p + k
// transposed_conv2d is the adjoint of conv2d under the same (weight, stride,
// padding); the gradient kernels below reuse that identity.
// ---------------------------------------------------------------------------

NdArray conv2d(const NdArray& input, const NdArray& weight, const NdArray& bias,
               std::size_t stride, std::size_t padding);

NdArray transposed_conv2d(const NdArray& input, const NdArray& weight, const NdArray& bias,
                          std::size_t stride, std::size_t padding = 0);

NdArray conv2d_grad_input(const NdArray& gout, const NdArray& weight,
                          std::size_t stride, std::size_t padding,
                          std::size_t in_h, std::size_t in_w);
NdArray conv2d_grad_weight(const NdArray& input, const NdArray& gout,
                           std::size_t stride, std::size_t padding, std::size_t k);
NdArray grad_bias(const NdArray& gout);

NdArray tconv_grad_input(const NdArray& gout, const NdArray& weight,
                         std::size_t stride, std::size_t padding);
NdArray tconv_grad_weight(const NdArray& input, const NdArray& gout,
                          std::size_t stride, std::size_t padding, std::size_t k);

// ---------------------------------------------------------------------------
// Masked batch normalization. Statistics are computed per channel over active
// positions only; inactive output positions are exactly 0. In eval mode the
// running statistics are used and nothing is updated.
// ---------------------------------------------------------------------------

struct BnSaved {
    NdArray mean;     // [C] statistics actually used (batch stats in train, running in eval)
    NdArray inv_std;  // [C] 1/sqrt(var + eps)
    double active_count = 0;
};

NdArray batchnorm_masked(const NdArray& input, const ActiveMask& active,
                         const NdArray& gamma, const NdArray& beta, double eps,
                         NdArray* running_mean, NdArray* running_var, double momentum,
                         bool train, BnSaved* saved = nullptr);

// Backward for the train-mode path (statistics depend on the input).
void batchnorm_masked_backward(const NdArray& input, const ActiveMask& active,
                               const NdArray& gamma, const BnSaved& saved,
                               const NdArray& gout, bool train,
                               NdArray& gin, NdArray& ggamma, NdArray& gbeta);

// ---------------------------------------------------------------------------
// Pointwise and pooling
// ---------------------------------------------------------------------------

NdArray relu(const NdArray& x);
NdArray tanh_act(const NdArray& x);

// 2x2/stride-2 max pool on [N,C,H,W] or [C,H,W]; ties resolved to the first
// element in scan order. argmax (flat input indices) is filled when non-null.
NdArray maxpool2x2(const NdArray& x, std::vector<std::size_t>* argmax = nullptr);

// Zeroes every channel value at inactive positions; map resolution must match
// the array's spatial extent.
NdArray zero_inactive(const NdArray& x, const ActiveMask& active);

}  // namespace spatspark::num
