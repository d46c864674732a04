#include <algorithm>
#include <cmath>
#include <numeric>

#include "eft/errors.hpp"
#include "eft/hamrep.hpp"
#include "eft/numerics.hpp"

namespace eft::hamrep {

DfFactors double_factorize(const IntegralTensors& t, int n_df) {
    if (n_df < 1) throw ContractError("DF leaf count must be at least 1");
    const int n = t.n;
    const std::size_t n2 = static_cast<std::size_t>(n) * n;

    Matrix reshaped(n2, n2);
    for (std::size_t i = 0; i < n2; ++i)
        for (std::size_t j = 0; j < n2; ++j) reshaped(i, j) = t.g[i * n2 + j];
    const auto eig = numerics::sym_eig(reshaped);

    std::vector<std::size_t> order(n2);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return std::abs(eig.eigenvalues[a]) > std::abs(eig.eigenvalues[b]); });

    DfFactors out;
    const std::size_t keep = std::min<std::size_t>(static_cast<std::size_t>(n_df), n2);
    for (std::size_t idx = 0; idx < keep; ++idx) {
        const std::size_t col = order[idx];
        const double e = eig.eigenvalues[col];
        Matrix leaf_matrix(n, n);
        for (int p = 0; p < n; ++p)
            for (int q = 0; q < n; ++q)
                leaf_matrix(p, q) = 0.5 * (eig.eigenvectors(p * n + q, col) + eig.eigenvectors(q * n + p, col));
        const auto inner = numerics::sym_eig(leaf_matrix);
        DfLeaf leaf;
        leaf.u = inner.eigenvectors;
        leaf.eigenvalue = e;
        leaf.sign = e < 0.0 ? -1 : 1;
        leaf.w.resize(n);
        const double amp = std::sqrt(std::abs(e));
        for (int k = 0; k < n; ++k) leaf.w[k] = amp * inner.eigenvalues[k];
        out.leaves.push_back(std::move(leaf));
    }

    const auto approx = df_reconstruct(out, n);
    double res = 0.0;
    for (std::size_t i = 0; i < approx.size(); ++i) res += (t.g[i] - approx[i]) * (t.g[i] - approx[i]);
    out.residual = std::sqrt(res);
    return out;
}

std::vector<double> df_reconstruct(const DfFactors& f, int n) {
    const std::size_t n2 = static_cast<std::size_t>(n) * n;
    std::vector<double> g(n2 * n2, 0.0);
    for (const auto& leaf : f.leaves) {
        // B = U diag(W) U^T, then g += sign * B (x) B.
        std::vector<double> b(n2, 0.0);
        for (int p = 0; p < n; ++p)
            for (int q = 0; q < n; ++q) {
                double v = 0.0;
                for (int k = 0; k < n; ++k) v += leaf.u(p, k) * leaf.w[k] * leaf.u(q, k);
                b[p * n + q] = v;
            }
        for (std::size_t i = 0; i < n2; ++i)
            for (std::size_t j = 0; j < n2; ++j) g[i * n2 + j] += leaf.sign * b[i] * b[j];
    }
    return g;
}

void check_thc(const ThcFactors& f) {
    const std::size_t m = f.zeta.rows();
    if (f.zeta.cols() != m || f.chi.cols() != m) throw ValidationError("THC factor shapes disagree");
    for (std::size_t mu = 0; mu < m; ++mu) {
        double norm = 0.0;
        for (std::size_t p = 0; p < f.chi.rows(); ++p) norm += f.chi(p, mu) * f.chi(p, mu);
        if (std::abs(norm - 1.0) > 1e-10) throw ValidationError("THC column " + std::to_string(mu) + " is not normalized");
        for (std::size_t nu = 0; nu < m; ++nu)
            if (std::abs(f.zeta(mu, nu) - f.zeta(nu, mu)) > 1e-10) throw ValidationError("THC core is not symmetric");
    }
}

std::vector<double> thc_reconstruct(const ThcFactors& f) {
    const std::size_t n = f.chi.rows(), m = f.rank();
    Matrix pair(n * n, m);
    for (std::size_t p = 0; p < n; ++p)
        for (std::size_t q = 0; q < n; ++q)
            for (std::size_t mu = 0; mu < m; ++mu) pair(p * n + q, mu) = f.chi(p, mu) * f.chi(q, mu);
    const Matrix g = pair * f.zeta * pair.transpose();
    return std::vector<double>(g.data(), g.data() + g.rows() * g.cols());
}

ThcFactors thc_from_df(const DfFactors& f) {
    if (f.leaves.empty()) throw ContractError("no DF leaves to convert");
    const std::size_t n = f.leaves.front().w.size();
    const std::size_t m = n * f.leaves.size();
    ThcFactors out{Matrix(n, m), Matrix(m, m)};
    for (std::size_t t = 0; t < f.leaves.size(); ++t) {
        const auto& leaf = f.leaves[t];
        for (std::size_t k = 0; k < n; ++k) {
            for (std::size_t p = 0; p < n; ++p) out.chi(p, t * n + k) = leaf.u(p, k);
            for (std::size_t l = 0; l < n; ++l) out.zeta(t * n + k, t * n + l) = leaf.sign * leaf.w[k] * leaf.w[l];
        }
    }
    return out;
}

}  // namespace eft::hamrep
