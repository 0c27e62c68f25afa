#include "spatspark/rng.hpp"

#include <cmath>

namespace spatspark {

double Xoshiro256ss::normal() {
    // u1 in (0,1] so log never sees 0
    const double u1 = 1.0 - next_double();
    const double u2 = next_double();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

double Xoshiro256ss::truncated_normal(double sigma, double clip) {
    for (;;) {
        const double z = normal() * sigma;
        if (z >= -clip && z <= clip) return z;
    }
}

}  // namespace spatspark
