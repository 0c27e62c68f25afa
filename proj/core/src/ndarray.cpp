#include "spatspark/ndarray.hpp"

#include <cmath>

namespace spatspark {

double pairwise_sum(std::span<const double> xs) {
    const std::size_t n = xs.size();
    if (n == 0) return 0.0;
    if (n <= 8) {
        double s = 0.0;
        for (double x : xs) s += x;
        return s;
    }
    const std::size_t half = n / 2;
    return pairwise_sum(xs.first(half)) + pairwise_sum(xs.subspan(half));
}

bool all_finite(const NdArray& a) {
    for (double x : a.data)
        if (!std::isfinite(x)) return false;
    return true;
}

void check_finite(const NdArray& a, const char* who) {
    if (!all_finite(a)) throw_numeric(std::string("non-finite value produced by ") + who);
}

}  // namespace spatspark
