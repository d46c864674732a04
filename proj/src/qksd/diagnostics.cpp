#include <algorithm>
#include <cmath>
#include <numbers>

#include "eft/errors.hpp"
#include "eft/numerics.hpp"
#include "eft/qksd.hpp"

namespace eft::qksd {

namespace {

double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    if (n < 2) return 0.0;
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    return sxx > 0.0 ? sxy / sxx : 0.0;
}

}  // namespace

OverlapReport overlap_analysis(const spectrum::Spectrum& s, const std::vector<int>& k_list,
                               const std::vector<int>& dk_list) {
    OverlapReport out;
    std::vector<int> ks = k_list;
    std::sort(ks.begin(), ks.end());
    for (int dk : dk_list) {
        if (dk < 1) throw ContractError("dk must be >= 1");
        const std::size_t start = out.rows.size();
        for (int K : ks) {
            if (K < 1) throw ContractError("K must be >= 1");
            OverlapRow row;
            row.K = K;
            row.dk = dk;
            row.k_dim = std::max(1, K / dk);
            const std::size_t n = static_cast<std::size_t>(row.k_dim);

            std::vector<double> m(2 * n - 1);
            for (std::size_t i = 0; i < m.size(); ++i)
                m[i] = i == 0 ? 1.0 : spectrum::chebyshev_moment(s, static_cast<long long>(i) * dk);
            Matrix ov(n, n);
            for (std::size_t k = 0; k < n; ++k)
                for (std::size_t j = 0; j <= k; ++j) ov(k, j) = ov(j, k) = 0.5 * (m[k + j] + m[k - j]);

            auto eig = numerics::sym_eig(ov);
            for (std::size_t i = 0; i < 3 && i < n; ++i) row.s[i] = eig.eigenvalues[i];
            out.rows.push_back(row);
        }

        OverlapSlope sl;
        sl.dk = dk;
        const std::size_t first = ks.size() / 2;
        for (int r = 0; r < 3; ++r) {
            std::vector<double> x, y;
            for (std::size_t i = start + first; i < out.rows.size(); ++i) {
                x.push_back(out.rows[i].K);
                y.push_back(out.rows[i].s[r]);
            }
            sl.slope[r] = fit_slope(x, y);
        }
        out.slopes.push_back(sl);
    }
    return out;
}

double optimal_dk(double scale, double lambda0_norm) {
    if (std::abs(lambda0_norm) > 1.0 + 1e-12) throw DomainError("normalized energy must lie in [-1, 1]");
    const double c = std::clamp(lambda0_norm, -1.0, 1.0);
    return scale * std::sqrt(std::max(0.0, 1.0 - c * c));
}

WindowOverlap window_overlap(long long k, int dk, double theta_a, double theta_b, double scale) {
    if (k < 0 || dk < 1) throw ContractError("window overlap needs k >= 0 and dk >= 1");
    if (!(theta_b >= 0.0 && theta_b < theta_a && theta_a <= std::numbers::pi))
        throw ContractError("window needs 0 <= theta_b < theta_a <= pi");
    const double mid = 0.5 * (theta_a + theta_b);
    const double envelope = scale * std::sin(mid) / dk;
    WindowOverlap w;
    w.value = envelope * std::cos(dk * mid) * std::sin(0.5 * dk * (theta_a - theta_b));
    w.bound = std::abs(envelope);
    return w;
}

}  // namespace eft::qksd
