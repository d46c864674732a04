#include <algorithm>
#include <cmath>

#include "eft/errors.hpp"
#include "eft/hamrep.hpp"

namespace eft::hamrep {

IntegralTensors bliss_transform(const IntegralTensors& t, const BlissParams& p) {
    const int n = t.n;
    if (p.beta_mat.rows() != static_cast<std::size_t>(n) || p.beta_mat.cols() != static_cast<std::size_t>(n))
        throw ContractError("BLISS beta matrix must be n x n");
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (std::abs(p.beta_mat(i, j) - p.beta_mat(j, i)) > 1e-10) throw ValidationError("BLISS beta matrix is not symmetric");

    const double eta = p.eta_particles;
    Matrix t_new = effective_one_body(t);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) t_new(i, j) += (i == j ? -p.alpha1 : 0.0) + 0.5 * p.beta_mat(i, j) * eta;

    IntegralTensors out(n, t.n_electrons);
    out.g = t.g;
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
            for (int c = 0; c < n; ++c)
                for (int d = 0; d < n; ++d) {
                    const double dab = a == b ? 1.0 : 0.0, dcd = c == d ? 1.0 : 0.0;
                    out.at(a, b, c, d) -= p.alpha2 * dab * dcd + 0.5 * (p.beta_mat(a, b) * dcd + dab * p.beta_mat(c, d));
                }
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
            double v = t_new(a, b);
            for (int r = 0; r < n; ++r) v += 0.5 * out.at(a, r, r, b);
            out.h(a, b) = v;
        }
    out.e_nuc = t.e_nuc + p.alpha1 * eta + 0.5 * p.alpha2 * eta * eta;
    return out;
}

BlissParams bliss_center_one_body(const IntegralTensors& t) {
    auto f_o = one_body_spectrum(t);
    std::sort(f_o.begin(), f_o.end());
    const std::size_t m = f_o.size();
    BlissParams p;
    p.alpha1 = m % 2 ? f_o[m / 2] : 0.5 * (f_o[m / 2 - 1] + f_o[m / 2]);
    p.beta_mat = Matrix(t.n, t.n);
    p.eta_particles = t.n_electrons;
    return p;
}

}  // namespace eft::hamrep
