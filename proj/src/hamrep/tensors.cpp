#include <cmath>

#include "eft/errors.hpp"
#include "eft/hamrep.hpp"
#include "eft/numerics.hpp"

namespace eft::hamrep {

IntegralTensors::IntegralTensors(int n_orb, int electrons)
    : n(n_orb), n_electrons(electrons), h(n_orb, n_orb), g(static_cast<std::size_t>(n_orb) * n_orb * n_orb * n_orb, 0.0) {
    if (n_orb < 1) throw ContractError("orbital count must be positive");
}

void check_symmetry(const IntegralTensors& t) {
    const int n = t.n;
    if (t.h.rows() != static_cast<std::size_t>(n) || t.h.cols() != static_cast<std::size_t>(n) ||
        t.g.size() != static_cast<std::size_t>(n) * n * n * n)
        throw ValidationError("integral tensor shapes do not match the orbital count");
    constexpr double tol = 1e-10;
    for (int p = 0; p < n; ++p)
        for (int q = 0; q < n; ++q) {
            if (std::abs(t.h(p, q) - t.h(q, p)) > tol) throw ValidationError("one-electron integrals are not symmetric");
            for (int r = 0; r < n; ++r)
                for (int s = 0; s < n; ++s) {
                    const double v = t.at(p, q, r, s);
                    if (std::abs(v - t.at(q, p, r, s)) > tol || std::abs(v - t.at(p, q, s, r)) > tol ||
                        std::abs(v - t.at(r, s, p, q)) > tol)
                        throw ValidationError("two-electron integrals lack 8-fold symmetry");
                }
        }
}

Matrix effective_one_body(const IntegralTensors& t) {
    Matrix out(t.n, t.n);
    for (int p = 0; p < t.n; ++p)
        for (int q = 0; q < t.n; ++q) {
            double v = t.h(p, q);
            for (int r = 0; r < t.n; ++r) v -= 0.5 * t.at(p, r, r, q);
            out(p, q) = v;
        }
    // Symmetric up to rounding; make it exact.
    for (int p = 0; p < t.n; ++p)
        for (int q = 0; q < p; ++q) out(p, q) = out(q, p) = 0.5 * (out(p, q) + out(q, p));
    return out;
}

Matrix fock_like_one_body(const IntegralTensors& t) {
    Matrix f = effective_one_body(t);
    for (int p = 0; p < t.n; ++p)
        for (int q = 0; q < t.n; ++q)
            for (int r = 0; r < t.n; ++r) f(p, q) += t.at(p, q, r, r);
    for (int p = 0; p < t.n; ++p)
        for (int q = 0; q < p; ++q) f(p, q) = f(q, p) = 0.5 * (f(p, q) + f(q, p));
    return f;
}

std::vector<double> one_body_spectrum(const IntegralTensors& t) {
    return numerics::sym_eig(fock_like_one_body(t)).eigenvalues;
}

}  // namespace eft::hamrep
