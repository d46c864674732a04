#include <cmath>
#include <algorithm>

#include "eft/errors.hpp"
#include "eft/numerics.hpp"
#include "eft/qksd.hpp"

namespace eft::qksd {

namespace {

bool is_sampled(long long degree) { return degree >= 2; }

}  // namespace

Gradient energy_gradient(const spectrum::MomentTable& moments, const KrylovConfig& cfg,
                         const spectrum::EnergyTransform& meta, double step) {
    if (!(step > 0.0)) throw ContractError("finite-difference step must be positive");
    auto base = solve(moments, cfg, meta);
    Gradient out;
    out.kept = static_cast<int>(base.kept_eigs.size());
    KrylovConfig frozen = cfg;
    frozen.policy = Policy::top(out.kept);

    auto perturbed = [&](long long degree, double delta, bool& unstable) {
        spectrum::MomentTable t = moments;
        t.entries.at(degree).value += delta;
        auto m = build_matrices(t, cfg.k_dim, cfg.dk);
        try {
            auto free = solve_regularized(m.h, m.s, cfg.policy, meta);
            if (free.kept_eigs.size() != base.kept_eigs.size()) unstable = true;
        } catch (const EmptySubspaceError&) {
            unstable = true;
        }
        return solve_regularized(m.h, m.s, frozen.policy, meta).e0_phys;
    };

    for (long long degree : spectrum::krylov_degrees(cfg.k_dim, cfg.dk)) {
        if (!moments.contains(degree)) throw ContractError("moment table lacks degree " + std::to_string(degree));
        bool unstable = false;
        double g = 0.0;
        try {
            g = (perturbed(degree, step, unstable) - perturbed(degree, -step, unstable)) / (2.0 * step);
        } catch (const Error&) {
            unstable = true;
        }
        out.g[degree] = g;
        if (unstable) out.unstable.insert(degree);
    }
    return out;
}

std::int64_t sampled_degree_count(const KrylovConfig& cfg) {
    std::int64_t n = 0;
    for (long long d : spectrum::krylov_degrees(cfg.k_dim, cfg.dk)) n += is_sampled(d);
    return n;
}

Allocation allocate_shots(const std::map<long long, double>& g, std::int64_t m_total) {
    std::int64_t count = 0;
    double total = 0.0;
    for (auto [k, v] : g) {
        if (!is_sampled(k)) continue;
        ++count;
        total += std::abs(v);
    }
    if (m_total < count)
        throw ContractError("shot budget " + std::to_string(m_total) + " is below the " + std::to_string(count) +
                            " sampled degrees");
    Allocation out;
    for (auto [k, v] : g) {
        if (!is_sampled(k)) {
            out[k] = 0;
            continue;
        }
        double share = total > 0.0 && std::isfinite(total) ? std::abs(v) * static_cast<double>(m_total) / total
                                                           : static_cast<double>(m_total) / static_cast<double>(count);
        auto shots = static_cast<std::int64_t>(std::floor(share * (1.0 + 1e-12)));
        out[k] = std::max<std::int64_t>(shots, 1);
    }
    return out;
}

spectrum::MomentTable inject_noise(const spectrum::MomentTable& moments, const Allocation& alloc,
                                   numerics::RngStream& stream) {
    spectrum::MomentTable out = moments;
    for (auto& [k, e] : out.entries) {
        if (e.is_exact) continue;
        auto it = alloc.find(k);
        if (it == alloc.end() || it->second <= 0)
            throw ContractError("no shots allocated to sampled degree " + std::to_string(k));
        const double v = moments.entries.at(k).value;
        const double sigma = std::sqrt(std::max(0.0, 1.0 - v * v) / static_cast<double>(it->second));
        e.value = numerics::rng_normal(stream, v, sigma);
        e.shots = it->second;
    }
    return out;
}

}  // namespace eft::qksd
