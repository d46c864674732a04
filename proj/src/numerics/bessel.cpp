#include <cmath>
#include <string>

#include "eft/errors.hpp"
#include "eft/numerics.hpp"

namespace eft::numerics {

namespace {

void check_argument(int j, double beta) {
    if (!std::isfinite(beta) || beta <= 0.0)
        throw DomainError("scaled Bessel argument must be positive and finite, got " + std::to_string(beta));
    if (j < 0) throw DomainError("Bessel order must be non-negative");
}

}  // namespace

int bessel_cutoff_order(double beta) {
    // Past ~10 sqrt(beta) the Gaussian-like tail is below 1e-20 of the peak.
    return 40 + static_cast<int>(std::ceil(10.0 * std::sqrt(beta)));
}

std::vector<double> scaled_bessel_i_table(int max_order, double beta) {
    check_argument(max_order, beta);

    // Backward ratio recurrence r_k = I_k / I_{k-1}, started far enough out that
    // the error of the r_start = 0 guess is damped below double precision.
    const double reach = std::max<double>(max_order, bessel_cutoff_order(beta));
    const long start = static_cast<long>(std::ceil(std::sqrt(reach * reach + 80.0 * beta))) + 30;

    std::vector<double> ratio(static_cast<std::size_t>(start) + 1, 0.0);
    double r = 0.0;
    for (long k = start; k >= 1; --k) {
        r = 1.0 / (2.0 * static_cast<double>(k) / beta + r);
        ratio[static_cast<std::size_t>(k)] = r;
    }

    // Normalize with I_0 + 2 sum_{k>=1} I_k = e^beta.
    double prod = 1.0, tail = 0.0;
    for (long k = 1; k <= start; ++k) {
        prod *= ratio[static_cast<std::size_t>(k)];
        if (prod == 0.0) break;
        tail += prod;
    }
    std::vector<double> out(static_cast<std::size_t>(max_order) + 1);
    out[0] = 1.0 / (1.0 + 2.0 * tail);
    for (int k = 1; k <= max_order; ++k) out[k] = out[k - 1] * ratio[static_cast<std::size_t>(k)];
    return out;
}

double scaled_bessel_i(int j, double beta) {
    check_argument(j, beta);
    return scaled_bessel_i_table(j, beta)[static_cast<std::size_t>(j)];
}

}  // namespace eft::numerics
