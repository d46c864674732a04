#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <sstream>

#include "eft/errors.hpp"
#include "eft/numerics.hpp"
#include "eft/qksd.hpp"

namespace eft::qksd {

Policy Policy::parse(const std::string& text) {
    auto colon = text.find(':');
    std::string kind = text.substr(0, colon);
    std::string arg = colon == std::string::npos ? "" : text.substr(colon + 1);
    try {
        if (kind == "threshold") {
            double tau = arg.empty() ? 1e-8 : std::stod(arg);
            if (!(tau >= 0.0) || !std::isfinite(tau)) throw ConfigError("threshold must be a finite value >= 0");
            return threshold(tau);
        }
        if (kind == "top" || kind == "top_m") {
            std::size_t used = 0;
            int m = std::stoi(arg, &used);
            if (used != arg.size() || m < 1) throw ConfigError("top_m needs an integer >= 1");
            return top(m);
        }
    } catch (const std::logic_error&) {
        throw ConfigError("bad regularization policy '" + text + "'");
    }
    throw ConfigError("unknown regularization policy '" + text + "' (use threshold[:tau] or top:m)");
}

std::string Policy::name() const {
    std::ostringstream os;
    if (kind == Kind::Threshold)
        os << "threshold:" << tau;
    else
        os << "top:" << m;
    return os.str();
}

KrylovMatrices build_matrices(const spectrum::MomentTable& moments, int k_dim, int dk) {
    if (k_dim < 1 || dk < 1) throw ContractError("Krylov dimension and step must be positive");
    const std::size_t n = static_cast<std::size_t>(k_dim);
    KrylovMatrices out{Matrix(n, n), Matrix(n, n)};
    auto t = [&](long long d) { return moments.value(std::llabs(d)); };
    for (long long k = 0; k < k_dim; ++k) {
        for (long long j = 0; j <= k; ++j) {
            const long long sum = (k + j) * dk;
            const long long diff = (k - j) * dk;
            const double s = 0.5 * (t(sum) + t(diff));
            const double h = 0.25 * (t(sum + 1) + t(sum - 1) + t(diff + 1) + t(diff - 1));
            out.s(k, j) = out.s(j, k) = s;
            out.h(k, j) = out.h(j, k) = h;
        }
    }
    return out;
}

KrylovSolution solve_regularized(const Matrix& h, const Matrix& s, const Policy& policy,
                                 const spectrum::EnergyTransform& meta) {
    if (!h.square() || !s.square() || h.rows() != s.rows() || h.rows() == 0)
        throw ContractError("Krylov matrices must be square and of equal size");
    const std::size_t n = s.rows();

    auto eig = numerics::sym_eig(s);
    std::size_t keep = 0;
    if (policy.kind == Policy::Kind::Threshold) {
        while (keep < n && eig.eigenvalues[keep] > policy.tau) ++keep;
        if (keep == 0) throw EmptySubspaceError("no overlap eigenvalue above the threshold");
    } else {
        if (policy.m < 1 || static_cast<std::size_t>(policy.m) > n)
            throw ContractError("top_m = " + std::to_string(policy.m) + " exceeds matrix dimension " +
                                std::to_string(n));
        keep = static_cast<std::size_t>(policy.m);
        if (!(eig.eigenvalues[keep - 1] > 0.0))
            throw EmptySubspaceError("retained overlap eigenvalue is not positive");
    }

    // X = V D^{-1/2}, H_eff = X^T H X
    Matrix x(n, keep);
    for (std::size_t c = 0; c < keep; ++c) {
        const double f = 1.0 / std::sqrt(eig.eigenvalues[c]);
        for (std::size_t r = 0; r < n; ++r) x(r, c) = eig.eigenvectors(r, c) * f;
    }
    Matrix heff = x.transpose() * (h * x);
    for (std::size_t i = 0; i < keep; ++i)
        for (std::size_t j = 0; j < i; ++j) heff(i, j) = heff(j, i) = 0.5 * (heff(i, j) + heff(j, i));
    if (!heff.all_finite()) throw DomainError("projected Hamiltonian is not finite");
    auto ritz = numerics::sym_eig(heff);

    KrylovSolution out;
    out.h_mat = h;
    out.s_mat = s;
    out.overlap_eigs = eig.eigenvalues;
    out.kept_eigs.assign(eig.eigenvalues.begin(), eig.eigenvalues.begin() + static_cast<std::ptrdiff_t>(keep));
    out.ritz_values.assign(ritz.eigenvalues.rbegin(), ritz.eigenvalues.rend());
    out.e0_norm = out.ritz_values.front();
    out.e0_phys = meta.to_energy(out.e0_norm);
    return out;
}

KrylovSolution solve(const spectrum::MomentTable& moments, const KrylovConfig& cfg,
                     const spectrum::EnergyTransform& meta) {
    auto m = build_matrices(moments, cfg.k_dim, cfg.dk);
    return solve_regularized(m.h, m.s, cfg.policy, meta);
}

}  // namespace eft::qksd
