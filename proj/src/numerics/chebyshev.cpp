#include <cmath>
#include <string>

#include "eft/errors.hpp"
#include "eft/numerics.hpp"

namespace eft::numerics {

double chebyshev_t(long long k, double x) {
    if (k < 0) throw DomainError("Chebyshev degree must be non-negative");
    if (!(std::abs(x) <= 1.0 + 1e-12))
        throw DomainError("Chebyshev argument outside [-1, 1]: " + std::to_string(x));
    if (x >= 1.0) return 1.0;
    if (x <= -1.0) return (k % 2 == 0) ? 1.0 : -1.0;
    return std::cos(static_cast<double>(k) * std::acos(x));
}

}  // namespace eft::numerics
