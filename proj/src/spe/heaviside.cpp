#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "eft/errors.hpp"
#include "eft/numerics.hpp"
#include "eft/spe.hpp"

namespace eft::spe {

namespace {

void check_beta_k(double beta, int K, int k_min) {
    if (!(beta > 0.0) || !std::isfinite(beta)) throw DomainError("erf sharpness must be positive and finite");
    if (K < k_min) throw DomainError("truncation order must be >= " + std::to_string(k_min));
}

double prefactor(double beta) { return std::sqrt(2.0 * beta / std::numbers::pi); }

// tail[K] = sum_{j>K} e^{-beta} I_j(beta), summed from the far end.
std::vector<double> bessel_tails(double beta, int max_k) {
    const int top = std::max(max_k + 1, numerics::bessel_cutoff_order(beta));
    auto a = numerics::scaled_bessel_i_table(top, beta);
    std::vector<double> tail(static_cast<std::size_t>(top) + 1, 0.0);
    for (int j = top - 1; j >= 0; --j) tail[j] = tail[j + 1] + a[j + 1];
    return tail;
}

double bound_from_tail(double beta, int K, const std::vector<double>& tail) {
    const double t = static_cast<std::size_t>(K) < tail.size() ? tail[K] : 0.0;
    return prefactor(beta) / K * 2.0 * t;
}

// Smallest K in [1, k_cap] with bound(K) <= target, for a non-increasing bound.
template <typename F>
int smallest_k(F&& bound, double target, int k_cap) {
    int hi = 1;
    while (bound(hi) > target) {
        if (hi >= k_cap) throw SearchError("no truncation order up to " + std::to_string(k_cap) + " meets the bound");
        hi = std::min(k_cap, 2 * hi);
    }
    int lo = hi / 2;  // bound(lo) > target, or lo == 0
    while (hi - lo > 1) {
        int mid = lo + (hi - lo) / 2;
        (bound(mid) <= target ? hi : lo) = mid;
    }
    return hi;
}

}  // namespace

double HeavisideModel::heaviside(double x) const {
    double sum = 0.0;
    for (std::size_t j = 0; j < sine.size(); ++j) sum += sine[j] * std::sin((2.0 * j + 1.0) * x);
    return f0 + 0.5 * sum;
}

double truncation_bound_new(double beta_erf, int K) {
    check_beta_k(beta_erf, K, 1);
    return bound_from_tail(beta_erf, K, bessel_tails(beta_erf, K));
}

double truncation_bound_old(double beta_erf, int K, double t) {
    check_beta_k(beta_erf, K, 1);
    if (!(t >= beta_erf)) throw DomainError("free parameter t must be >= beta");
    const double k1 = K + 1.0;
    const double gauss = 2.0 * std::exp(-k1 * k1 / (2.0 * t));
    const double poisson = std::exp(t * (1.0 + std::log(beta_erf) - std::log(t)) - beta_erf);
    return prefactor(beta_erf) / K * (gauss + poisson);
}

double truncation_bound_old(double beta_erf, int K) {
    check_beta_k(beta_erf, K, 1);
    auto f = [&](double log_t) { return truncation_bound_old(beta_erf, K, std::max(beta_erf, std::exp(log_t))); };
    const double lo = std::log(beta_erf);
    const double hi = lo + std::max(std::log(10.0), 2.0 * std::log(K + 1.0));
    const int n = 400;
    int best = 0;
    double best_val = f(lo);
    for (int i = 1; i <= n; ++i) {
        double v = f(lo + (hi - lo) * i / n);
        if (v < best_val) best_val = v, best = i;
    }
    // Golden-section refinement in the bracketing cells.
    double a = lo + (hi - lo) * std::max(0, best - 1) / n;
    double b = lo + (hi - lo) * std::min(n, best + 1) / n;
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - g * (b - a), d = a + g * (b - a);
    double fc = f(c), fd = f(d);
    for (int it = 0; it < 80; ++it) {
        if (fc < fd) {
            b = d, d = c, fd = fc;
            c = b - g * (b - a), fc = f(c);
        } else {
            a = c, c = d, fc = fd;
            d = a + g * (b - a), fd = f(d);
        }
    }
    return std::min({best_val, fc, fd});
}

HeavisideModel fourier_coefficients(double beta_erf, int K) {
    check_beta_k(beta_erf, K, 0);
    HeavisideModel m;
    m.beta_erf = beta_erf;
    m.K = K;
    m.f0 = 0.5;
    auto tail = bessel_tails(beta_erf, K + 1);
    auto a = numerics::scaled_bessel_i_table(K + 1, beta_erf);
    const double pre = 2.0 * prefactor(beta_erf);
    m.sine.resize(static_cast<std::size_t>(K) + 1);
    m.f_odd.resize(m.sine.size());
    m.one_norm = 0.5;
    for (int j = 0; j <= K; ++j) {
        // sin((2j+1)x) collects I_j and I_{j+1}.
        const double c = pre * (a[j] + (j < K ? a[j + 1] : 0.0)) / (2.0 * j + 1.0);
        m.sine[j] = c;
        m.f_odd[j] = {0.0, -c / 4.0};
        m.one_norm += c / 4.0;
    }
    if (K >= 1) {
        m.bound_new = bound_from_tail(beta_erf, K, tail);
        m.bound_old = truncation_bound_old(beta_erf, K);
    } else {
        m.bound_new = m.bound_old = std::numeric_limits<double>::infinity();
    }
    return m;
}

Parameters select_parameters(double delta, double epsilon, BoundKind kind) {
    if (!(delta > 0.0 && delta < std::numbers::pi / 4)) throw ContractError("delta must lie in (0, pi/4)");
    if (!(epsilon > 0.0 && epsilon < 0.5)) throw ContractError("epsilon must lie in (0, 1/2)");
    const double half = 0.5 * epsilon;
    const double s = std::sin(0.5 * delta);
    auto erf_err = [&](double beta) { return std::erfc(std::sqrt(2.0 * beta) * s); };

    const double beta_cap = 1e11;
    Parameters p;
    if (erf_err(beta_cap) > half)
        throw SearchError("no erf sharpness up to 1e11 reaches the requested delta and epsilon");
    if (erf_err(1.0) <= half) {
        p.beta_erf = 1.0;
    } else {
        double lo = 1.0, hi = beta_cap;
        while (hi - lo > 1e-10 * hi) {
            double mid = 0.5 * (lo + hi);
            (erf_err(mid) <= half ? hi : lo) = mid;
        }
        p.beta_erf = hi;
    }

    const int k_cap = 1 << 28;
    if (kind == BoundKind::Tight) {
        auto tail = bessel_tails(p.beta_erf, 1);
        p.K = smallest_k([&](int K) { return bound_from_tail(p.beta_erf, K, tail); }, half, k_cap);
    } else {
        p.K = smallest_k([&](int K) { return truncation_bound_old(p.beta_erf, K); }, half, k_cap);
    }
    return p;
}

}  // namespace eft::spe
