#include "spatspark/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace spatspark::num {

namespace {

// Views a rank-3 [C,H,W] array as rank-4 [1,C,H,W] without copying the data.
struct Batched {
    const NdArray* a;
    std::size_t n, c, h, w;
    bool was_rank3;
};

Batched as_batched(const NdArray& a, const char* who) {
    if (a.rank() == 3) return {&a, 1, a.shape[0], a.shape[1], a.shape[2], true};
    if (a.rank() == 4) return {&a, a.shape[0], a.shape[1], a.shape[2], a.shape[3], false};
    throw_dim(std::string(who) + ": expected rank 3 or 4 input, got " + a.shape_str());
}

NdArray make_out(bool was_rank3, std::size_t n, std::size_t c, std::size_t h, std::size_t w) {
    if (was_rank3) return NdArray({c, h, w});
    return NdArray({n, c, h, w});
}

inline std::int64_t floor_div(std::int64_t a, std::int64_t b) {
    std::int64_t q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
    return q;
}

inline std::int64_t ceil_div(std::int64_t a, std::int64_t b) { return -floor_div(-a, b); }

void check_conv_args(const Batched& in, const NdArray& weight, const NdArray& bias,
                     std::size_t in_ch_axis, const char* who) {
    if (weight.rank() != 4)
        throw_dim(std::string(who) + ": weight must be rank 4, got " + weight.shape_str());
    if (weight.shape[2] != weight.shape[3])
        throw_dim(std::string(who) + ": kernel must be square, got " + weight.shape_str());
    if (in.c != weight.shape[in_ch_axis])
        throw_dim(std::string(who) + ": input channels " + std::to_string(in.c) +
                  " != weight axis-" + std::to_string(in_ch_axis) + " extent " +
                  std::to_string(weight.shape[in_ch_axis]) + " (input " + in.a->shape_str() +
                  ", weight " + weight.shape_str() + ")");
    const std::size_t out_ch = weight.shape[in_ch_axis == 1 ? 0 : 1];
    if (bias.rank() != 1 || bias.shape[0] != out_ch)
        throw_dim(std::string(who) + ": bias shape " + bias.shape_str() + " != [C_out=" +
                  std::to_string(out_ch) + "]");
}

}  // namespace

NdArray conv2d(const NdArray& input, const NdArray& weight, const NdArray& bias,
               std::size_t stride, std::size_t padding) {
    const Batched in = as_batched(input, "conv2d");
    check_conv_args(in, weight, bias, 1, "conv2d");
    if (stride < 1) throw_contract("conv2d: stride must be >= 1");
    const std::size_t co = weight.shape[0], ci = weight.shape[1], k = weight.shape[2];
    if (k > in.h + 2 * padding || k > in.w + 2 * padding)
        throw_dim("conv2d: kernel " + std::to_string(k) + " exceeds padded input " +
                  input.shape_str() + " with padding " + std::to_string(padding));
    const std::size_t oh = (in.h + 2 * padding - k) / stride + 1;
    const std::size_t ow = (in.w + 2 * padding - k) / stride + 1;

    NdArray out = make_out(in.was_rank3, in.n, co, oh, ow);
    const double* xp = input.data.data();
    const double* wp = weight.data.data();
    double* op = out.data.data();
    const std::int64_t s = static_cast<std::int64_t>(stride), p = static_cast<std::int64_t>(padding);
    const std::int64_t H = in.h, W = in.w, OH = oh, OW = ow, K = k;

    for (std::size_t n = 0; n < in.n; ++n) {
        for (std::size_t c = 0; c < co; ++c) {
            double* oplane = op + (n * co + c) * oh * ow;
            const double b = bias[c];
            for (std::size_t i = 0; i < oh * ow; ++i) oplane[i] = b;
            for (std::size_t cc = 0; cc < ci; ++cc) {
                const double* iplane = xp + (n * ci + cc) * in.h * in.w;
                const double* wblock = wp + (c * ci + cc) * k * k;
                for (std::int64_t kh = 0; kh < K; ++kh) {
                    const std::int64_t y_lo = std::max<std::int64_t>(0, ceil_div(p - kh, s));
                    const std::int64_t y_hi = std::min<std::int64_t>(OH - 1, floor_div(H - 1 + p - kh, s));
                    for (std::int64_t kw = 0; kw < K; ++kw) {
                        const double wv = wblock[kh * K + kw];
                        if (wv == 0.0) continue;
                        const std::int64_t x_lo = std::max<std::int64_t>(0, ceil_div(p - kw, s));
                        const std::int64_t x_hi = std::min<std::int64_t>(OW - 1, floor_div(W - 1 + p - kw, s));
                        for (std::int64_t y = y_lo; y <= y_hi; ++y) {
                            const double* irow = iplane + (y * s - p + kh) * W + (kw - p);
                            double* orow = oplane + y * OW;
                            if (s == 1) {
                                for (std::int64_t x = x_lo; x <= x_hi; ++x) orow[x] += wv * irow[x];
                            } else {
                                for (std::int64_t x = x_lo; x <= x_hi; ++x) orow[x] += wv * irow[x * s];
                            }
                        }
                    }
                }
            }
        }
    }
    return out;
}

namespace {

// Shared scatter: out[n, b_ch, y*s-p+kh, x*s-p+kw] += in[n, a_ch, y, x] * w[a_ch, b_ch, kh, kw].
// Realizes both transposed_conv2d forward and conv2d's input gradient.
void scatter_accumulate(const Batched& in, const NdArray& weight, std::size_t stride,
                        std::size_t padding, NdArray& out, std::size_t out_h, std::size_t out_w,
                        std::size_t out_ch) {
    const std::size_t k = weight.shape[2];
    const double* xp = in.a->data.data();
    const double* wp = weight.data.data();
    double* op = out.data.data();
    const std::int64_t s = static_cast<std::int64_t>(stride), p = static_cast<std::int64_t>(padding);
    const std::int64_t OH = out_h, OW = out_w, K = k;
    const std::size_t a_ch = weight.shape[0];

    for (std::size_t n = 0; n < in.n; ++n) {
        for (std::size_t bc = 0; bc < out_ch; ++bc) {
            double* oplane = op + (n * out_ch + bc) * out_h * out_w;
            for (std::size_t ac = 0; ac < a_ch; ++ac) {
                const double* iplane = xp + (n * a_ch + ac) * in.h * in.w;
                const double* wblock = wp + (ac * out_ch + bc) * k * k;
                for (std::int64_t kh = 0; kh < K; ++kh) {
                    const std::int64_t y_lo = std::max<std::int64_t>(0, ceil_div(p - kh, s));
                    const std::int64_t y_hi =
                        std::min<std::int64_t>(static_cast<std::int64_t>(in.h) - 1, floor_div(OH - 1 + p - kh, s));
                    for (std::int64_t kw = 0; kw < K; ++kw) {
                        const double wv = wblock[kh * K + kw];
                        if (wv == 0.0) continue;
                        const std::int64_t x_lo = std::max<std::int64_t>(0, ceil_div(p - kw, s));
                        const std::int64_t x_hi =
                            std::min<std::int64_t>(static_cast<std::int64_t>(in.w) - 1, floor_div(OW - 1 + p - kw, s));
                        for (std::int64_t y = y_lo; y <= y_hi; ++y) {
                            const double* irow = iplane + y * in.w;
                            double* orow = oplane + (y * s - p + kh) * OW + (kw - p);
                            if (s == 1) {
                                for (std::int64_t x = x_lo; x <= x_hi; ++x) orow[x] += wv * irow[x];
                            } else {
                                for (std::int64_t x = x_lo; x <= x_hi; ++x) orow[x * s] += wv * irow[x];
                            }
                        }
                    }
                }
            }
        }
    }
}

}  // namespace

NdArray transposed_conv2d(const NdArray& input, const NdArray& weight, const NdArray& bias,
                          std::size_t stride, std::size_t padding) {
    const Batched in = as_batched(input, "transposed_conv2d");
    check_conv_args(in, weight, bias, 0, "transposed_conv2d");
    if (stride < 1 || stride > 2) throw_contract("transposed_conv2d: stride must be 1 or 2");
    const std::size_t co = weight.shape[1], k = weight.shape[2];
    const std::int64_t oh = (static_cast<std::int64_t>(in.h) - 1) * stride - 2 * padding + k;
    const std::int64_t ow = (static_cast<std::int64_t>(in.w) - 1) * stride - 2 * padding + k;
    if (oh < 1 || ow < 1)
        throw_dim("transposed_conv2d: non-positive output extent for input " + input.shape_str());

    NdArray out = make_out(in.was_rank3, in.n, co, oh, ow);
    scatter_accumulate(in, weight, stride, padding, out, oh, ow, co);
    for (std::size_t n = 0; n < in.n; ++n)
        for (std::size_t c = 0; c < co; ++c) {
            double* plane = out.data.data() + (n * co + c) * oh * ow;
            const double b = bias[c];
            if (b != 0.0)
                for (std::int64_t i = 0; i < oh * ow; ++i) plane[i] += b;
        }
    return out;
}

NdArray conv2d_grad_input(const NdArray& gout, const NdArray& weight, std::size_t stride,
                          std::size_t padding, std::size_t in_h, std::size_t in_w) {
    const Batched g = as_batched(gout, "conv2d_grad_input");
    NdArray gin = make_out(g.was_rank3, g.n, weight.shape[1], in_h, in_w);
    scatter_accumulate(g, weight, stride, padding, gin, in_h, in_w, weight.shape[1]);
    return gin;
}

NdArray tconv_grad_input(const NdArray& gout, const NdArray& weight, std::size_t stride,
                         std::size_t padding) {
    // adjoint of the scatter is the plain gather with the same weight
    const Batched g = as_batched(gout, "tconv_grad_input");
    const std::size_t k = weight.shape[2];
    NdArray zero_bias({weight.shape[0]});
    // gather maps gout channels (= weight axis 1) back to input channels (= weight axis 0)
    const std::size_t ih = (g.h + 2 * padding - k) / stride + 1;
    const std::size_t iw = (g.w + 2 * padding - k) / stride + 1;
    (void)ih;
    (void)iw;
    return conv2d(gout, weight, zero_bias, stride, padding);
}

NdArray conv2d_grad_weight(const NdArray& input, const NdArray& gout, std::size_t stride,
                           std::size_t padding, std::size_t k) {
    const Batched in = as_batched(input, "conv2d_grad_weight");
    const Batched g = as_batched(gout, "conv2d_grad_weight");
    NdArray gw({g.c, in.c, k, k});
    double* gwp = gw.data.data();
    const std::int64_t s = static_cast<std::int64_t>(stride), p = static_cast<std::int64_t>(padding);
    const std::int64_t OH = g.h, OW = g.w, K = k;

    for (std::size_t n = 0; n < in.n; ++n) {
        for (std::size_t c = 0; c < g.c; ++c) {
            const double* gplane = g.a->data.data() + (n * g.c + c) * g.h * g.w;
            for (std::size_t cc = 0; cc < in.c; ++cc) {
                const double* iplane = in.a->data.data() + (n * in.c + cc) * in.h * in.w;
                double* gwblock = gwp + (c * in.c + cc) * k * k;
                for (std::int64_t kh = 0; kh < K; ++kh) {
                    const std::int64_t y_lo = std::max<std::int64_t>(0, ceil_div(p - kh, s));
                    const std::int64_t y_hi = std::min<std::int64_t>(
                        OH - 1, floor_div(static_cast<std::int64_t>(in.h) - 1 + p - kh, s));
                    for (std::int64_t kw = 0; kw < K; ++kw) {
                        const std::int64_t x_lo = std::max<std::int64_t>(0, ceil_div(p - kw, s));
                        const std::int64_t x_hi = std::min<std::int64_t>(
                            OW - 1, floor_div(static_cast<std::int64_t>(in.w) - 1 + p - kw, s));
                        double acc = 0.0;
                        for (std::int64_t y = y_lo; y <= y_hi; ++y) {
                            const double* irow = iplane + (y * s - p + kh) * in.w + (kw - p);
                            const double* grow = gplane + y * OW;
                            if (s == 1) {
                                for (std::int64_t x = x_lo; x <= x_hi; ++x) acc += grow[x] * irow[x];
                            } else {
                                for (std::int64_t x = x_lo; x <= x_hi; ++x) acc += grow[x] * irow[x * s];
                            }
                        }
                        gwblock[kh * K + kw] += acc;
                    }
                }
            }
        }
    }
    return gw;
}

NdArray tconv_grad_weight(const NdArray& input, const NdArray& gout, std::size_t stride,
                          std::size_t padding, std::size_t k) {
    // same contraction with the roles of input and gradient exchanged
    return conv2d_grad_weight(gout, input, stride, padding, k);
}

NdArray grad_bias(const NdArray& gout) {
    const Batched g = as_batched(gout, "grad_bias");
    NdArray gb({g.c});
    for (std::size_t n = 0; n < g.n; ++n)
        for (std::size_t c = 0; c < g.c; ++c) {
            const double* plane = g.a->data.data() + (n * g.c + c) * g.h * g.w;
            double acc = 0.0;
            for (std::size_t i = 0; i < g.h * g.w; ++i) acc += plane[i];
            gb[c] += acc;
        }
    return gb;
}

// ---------------------------------------------------------------------------
// Masked batch normalization
// ---------------------------------------------------------------------------

NdArray batchnorm_masked(const NdArray& input, const ActiveMask& active, const NdArray& gamma,
                         const NdArray& beta, double eps, NdArray* running_mean,
                         NdArray* running_var, double momentum, bool train, BnSaved* saved) {
    const Batched in = as_batched(input, "batchnorm_masked");
    if (active.n != in.n || active.h != in.h || active.w != in.w)
        throw_dim("batchnorm_masked: active map [" + std::to_string(active.n) + "," +
                  std::to_string(active.h) + "," + std::to_string(active.w) +
                  "] does not match input " + input.shape_str());
    if (gamma.numel() != in.c || beta.numel() != in.c)
        throw_dim("batchnorm_masked: gamma/beta must have C=" + std::to_string(in.c) + " entries");

    const std::size_t plane = in.h * in.w;
    const double n_active = static_cast<double>(active.count_active());
    if (train && n_active == 0)
        throw_contract("batchnorm_masked: degenerate batch, zero active positions in train mode");

    NdArray mean({in.c});
    NdArray var({in.c});
    if (train) {
        for (std::size_t c = 0; c < in.c; ++c) {
            double acc = 0.0;
            for (std::size_t n = 0; n < in.n; ++n) {
                const double* ip = input.data.data() + (n * in.c + c) * plane;
                const std::uint8_t* ap = active.v.data() + n * plane;
                for (std::size_t i = 0; i < plane; ++i)
                    if (ap[i]) acc += ip[i];
            }
            mean[c] = acc / n_active;
            double accv = 0.0;
            for (std::size_t n = 0; n < in.n; ++n) {
                const double* ip = input.data.data() + (n * in.c + c) * plane;
                const std::uint8_t* ap = active.v.data() + n * plane;
                for (std::size_t i = 0; i < plane; ++i)
                    if (ap[i]) {
                        const double d = ip[i] - mean[c];
                        accv += d * d;
                    }
            }
            var[c] = accv / n_active;
        }
        if (running_mean && running_var) {
            for (std::size_t c = 0; c < in.c; ++c) {
                (*running_mean)[c] = (1.0 - momentum) * (*running_mean)[c] + momentum * mean[c];
                (*running_var)[c] = (1.0 - momentum) * (*running_var)[c] + momentum * var[c];
            }
        }
    } else {
        if (!running_mean || !running_var)
            throw_contract("batchnorm_masked: eval mode requires running statistics");
        mean = *running_mean;
        var = *running_var;
    }

    NdArray out = make_out(in.was_rank3, in.n, in.c, in.h, in.w);
    NdArray inv_std({in.c});
    for (std::size_t c = 0; c < in.c; ++c) inv_std[c] = 1.0 / std::sqrt(var[c] + eps);
    for (std::size_t n = 0; n < in.n; ++n) {
        const std::uint8_t* ap = active.v.data() + n * plane;
        for (std::size_t c = 0; c < in.c; ++c) {
            const double* ip = input.data.data() + (n * in.c + c) * plane;
            double* op = out.data.data() + (n * in.c + c) * plane;
            const double m = mean[c], is = inv_std[c], g = gamma[c], b = beta[c];
            for (std::size_t i = 0; i < plane; ++i) op[i] = ap[i] ? (ip[i] - m) * is * g + b : 0.0;
        }
    }
    if (saved) {
        saved->mean = std::move(mean);
        saved->inv_std = std::move(inv_std);
        saved->active_count = n_active;
    }
    return out;
}

void batchnorm_masked_backward(const NdArray& input, const ActiveMask& active,
                               const NdArray& gamma, const BnSaved& saved, const NdArray& gout,
                               bool train, NdArray& gin, NdArray& ggamma, NdArray& gbeta) {
    const Batched in = as_batched(input, "batchnorm_masked_backward");
    const std::size_t plane = in.h * in.w;
    const double na = saved.active_count;

    for (std::size_t c = 0; c < in.c; ++c) {
        const double m = saved.mean[c], is = saved.inv_std[c], g = gamma[c];
        double sum_dy = 0.0, sum_dy_xhat = 0.0;
        for (std::size_t n = 0; n < in.n; ++n) {
            const double* ip = input.data.data() + (n * in.c + c) * plane;
            const double* gp = gout.data.data() + (n * in.c + c) * plane;
            const std::uint8_t* ap = active.v.data() + n * plane;
            for (std::size_t i = 0; i < plane; ++i)
                if (ap[i]) {
                    const double xh = (ip[i] - m) * is;
                    sum_dy += gp[i];
                    sum_dy_xhat += gp[i] * xh;
                }
        }
        ggamma[c] += sum_dy_xhat;
        gbeta[c] += sum_dy;
        const double mean_dy = train ? sum_dy / na : 0.0;
        const double mean_dy_xhat = train ? sum_dy_xhat / na : 0.0;
        for (std::size_t n = 0; n < in.n; ++n) {
            const double* ip = input.data.data() + (n * in.c + c) * plane;
            const double* gp = gout.data.data() + (n * in.c + c) * plane;
            double* gi = gin.data.data() + (n * in.c + c) * plane;
            const std::uint8_t* ap = active.v.data() + n * plane;
            for (std::size_t i = 0; i < plane; ++i) {
                if (!ap[i]) continue;
                if (train) {
                    const double xh = (ip[i] - m) * is;
                    gi[i] += g * is * (gp[i] - mean_dy - xh * mean_dy_xhat);
                } else {
                    gi[i] += g * is * gp[i];
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Pointwise and pooling
// ---------------------------------------------------------------------------

NdArray relu(const NdArray& x) {
    NdArray out = x;
    for (double& v : out.data) v = v > 0.0 ? v : 0.0;
    return out;
}

NdArray tanh_act(const NdArray& x) {
    NdArray out = x;
    for (double& v : out.data) v = std::tanh(v);
    return out;
}

NdArray maxpool2x2(const NdArray& x, std::vector<std::size_t>* argmax) {
    const Batched in = as_batched(x, "maxpool2x2");
    if (in.h % 2 != 0 || in.w % 2 != 0)
        throw_dim("maxpool2x2: spatial extent must be even, got " + x.shape_str());
    const std::size_t oh = in.h / 2, ow = in.w / 2;
    NdArray out = make_out(in.was_rank3, in.n, in.c, oh, ow);
    if (argmax) argmax->assign(out.numel(), 0);
    const double* xp = x.data.data();
    double* op = out.data.data();
    std::size_t oi = 0;
    for (std::size_t nc = 0; nc < in.n * in.c; ++nc) {
        const double* plane = xp + nc * in.h * in.w;
        for (std::size_t y = 0; y < oh; ++y)
            for (std::size_t z = 0; z < ow; ++z) {
                const std::size_t base = (2 * y) * in.w + 2 * z;
                const std::size_t cand[4] = {base, base + 1, base + in.w, base + in.w + 1};
                std::size_t best = cand[0];
                for (int j = 1; j < 4; ++j)
                    if (plane[cand[j]] > plane[best]) best = cand[j];
                op[oi] = plane[best];
                if (argmax) (*argmax)[oi] = nc * in.h * in.w + best;
                ++oi;
            }
    }
    return out;
}

NdArray zero_inactive(const NdArray& x, const ActiveMask& active) {
    const Batched in = as_batched(x, "zero_inactive");
    if (active.n != in.n || active.h != in.h || active.w != in.w)
        throw_dim("zero_inactive: active map does not match input " + x.shape_str());
    NdArray out = x;
    const std::size_t plane = in.h * in.w;
    for (std::size_t n = 0; n < in.n; ++n) {
        const std::uint8_t* ap = active.v.data() + n * plane;
        for (std::size_t c = 0; c < in.c; ++c) {
            double* op = out.data.data() + (n * in.c + c) * plane;
            for (std::size_t i = 0; i < plane; ++i)
                if (!ap[i]) op[i] = 0.0;
        }
    }
    return out;
}

}  // namespace spatspark::num
