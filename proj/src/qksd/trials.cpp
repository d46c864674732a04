#include <cmath>
#include <limits>
#include <map>

#include "eft/errors.hpp"
#include "eft/numerics.hpp"
#include "eft/qksd.hpp"

namespace eft::qksd {

namespace {

// Everything about a trial batch that does not depend on the shot budget.
struct TrialSetup {
    const spectrum::Spectrum* s = nullptr;
    KrylovConfig cfg;
    spectrum::MomentTable exact;
    KrylovSolution noiseless;
    Gradient gradient;
    std::int64_t sampled = 0;
};

TrialSetup prepare(const spectrum::Spectrum& s, const KrylovConfig& cfg) {
    TrialSetup t;
    t.s = &s;
    t.cfg = cfg;
    t.exact = spectrum::moment_table(s, spectrum::krylov_degrees(cfg.k_dim, cfg.dk));
    t.noiseless = solve(t.exact, cfg, s.transform);
    t.sampled = sampled_degree_count(cfg);
    if (t.sampled > 0) t.gradient = energy_gradient(t.exact, cfg, s.transform);
    return t;
}

TrialStats execute(const TrialSetup& t, std::int64_t m_total, int n_trials, std::uint64_t seed, unsigned jobs) {
    if (n_trials < 1) throw ContractError("n_trials must be >= 1");
    TrialStats st;
    st.m_total = m_total;
    st.n_trials = n_trials;
    st.seed = seed;
    st.noiseless_energy = t.noiseless.e0_phys;
    st.true_energy = t.s->ground_energy();
    st.gradient = t.gradient;
    if (t.sampled > 0) {
        st.allocation = allocate_shots(t.gradient.g, m_total);
    } else {
        for (long long d : t.exact.degrees()) st.allocation[d] = 0;
    }

    st.energies.assign(static_cast<std::size_t>(n_trials), std::numeric_limits<double>::quiet_NaN());
    numerics::parallel_for(static_cast<std::size_t>(n_trials), jobs, [&](std::size_t i) {
        numerics::RngStream stream(seed, i);
        auto noisy = inject_noise(t.exact, st.allocation, stream);
        try {
            st.energies[i] = solve(noisy, t.cfg, t.s->transform).e0_phys;
        } catch (const EmptySubspaceError&) {
        } catch (const DomainError&) {
        }
    });

    double abs_sum = 0.0, sq_sum = 0.0;
    int ok = 0;
    for (double e : st.energies) {
        if (std::isnan(e)) {
            ++st.failed_trials;
            continue;
        }
        ++ok;
        abs_sum += std::abs(e - st.noiseless_energy);
        sq_sum += (e - st.true_energy) * (e - st.true_energy);
    }
    const double nan = std::numeric_limits<double>::quiet_NaN();
    st.mean_abs_err = ok > 0 ? abs_sum / ok : nan;
    st.rmse = ok > 0 ? std::sqrt(sq_sum / ok) : nan;
    return st;
}

}  // namespace

TrialStats run_trials(const spectrum::Spectrum& s, const KrylovConfig& cfg, std::int64_t m_total, int n_trials,
                      std::uint64_t seed, unsigned jobs) {
    return execute(prepare(s, cfg), m_total, n_trials, seed, jobs);
}

BudgetResult find_shot_budget(const spectrum::Spectrum& s, const KrylovConfig& cfg, double target_err,
                              const BudgetOptions& opts) {
    if (!(target_err > 0.0)) throw ContractError("target error must be positive");
    auto setup = prepare(s, cfg);
    BudgetResult out;
    out.smallest_kept_eig = setup.noiseless.kept_eigs.back();
    const std::int64_t m_min = setup.sampled;
    const auto cap = static_cast<std::int64_t>(opts.cap);

    std::map<std::int64_t, TrialStats> seen;
    // Same seed at every M, so the predicate compares like with like.
    auto passes = [&](std::int64_t m) {
        auto it = seen.find(m);
        if (it == seen.end()) {
            it = seen.emplace(m, execute(setup, m, opts.n_trials, opts.seed, opts.jobs)).first;
            out.probes.emplace_back(m, it->second.mean_abs_err);
        }
        const auto& st = it->second;
        return st.failed_trials == 0 && st.mean_abs_err <= target_err;
    };
    auto finish = [&](std::int64_t m) {
        passes(m);
        out.m_total = m;
        out.stats = seen.at(m);
        return out;
    };

    if (m_min == 0 || std::isinf(target_err)) {
        out.m_guess = m_min;
        return finish(m_min);
    }

    const double eps_norm = target_err / std::abs(s.transform.scale);
    double guess = 1.0 / std::pow(out.smallest_kept_eig * eps_norm, 2);
    guess = std::clamp(guess, static_cast<double>(m_min), opts.cap);
    out.m_guess = static_cast<std::int64_t>(std::llround(guess));
    out.m_guess = std::clamp(out.m_guess, m_min, cap);

    std::int64_t hi = 0;        // smallest passing M found so far
    std::int64_t lo = m_min - 1;  // largest failing M below hi
    if (passes(out.m_guess)) {
        hi = out.m_guess;
        while (hi > m_min) {
            auto next = std::max(m_min, hi / 10);
            if (!passes(next)) {
                lo = next;
                break;
            }
            hi = next;
        }
    } else {
        lo = out.m_guess;
        while (true) {
            if (lo >= cap)
                throw SearchError("target " + std::to_string(target_err) + " Ha not reached below the cap of " +
                                  std::to_string(cap) + " shots");
            auto next = lo > cap / 10 ? cap : lo * 10;
            if (passes(next)) {
                hi = next;
                break;
            }
            lo = next;
        }
    }

    const double step = std::pow(10.0, 0.25);
    double cand = static_cast<double>(hi) / step;
    while (true) {
        auto m = static_cast<std::int64_t>(std::llround(cand));
        if (m <= lo || m >= hi || m < m_min) break;
        if (!passes(m)) break;
        hi = m;
        cand /= step;
    }
    return finish(hi);
}

}  // namespace eft::qksd
