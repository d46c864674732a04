#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include "eft/errors.hpp"
#include "eft/spe.hpp"
#include "eft/spectrum.hpp"

using namespace eft;
using namespace eft::spe;
using spectrum::Spectrum;

namespace {

const double kPi = std::numbers::pi;

// e^{-beta} I_j(beta) = (1/pi) int_0^pi e^{beta (cos t - 1)} cos(j t) dt, trapezoid on
// the periodic integrand.
std::vector<double> bessel_by_quadrature(int max_order, double beta) {
    const int n = 1 << 14;
    std::vector<double> out(static_cast<std::size_t>(max_order) + 1, 0.0);
    for (int i = 0; i <= n; ++i) {
        const double t = kPi * i / n;
        const double w = (i == 0 || i == n) ? 0.5 : 1.0;
        const double e = std::exp(beta * (std::cos(t) - 1.0)) * w;
        for (int j = 0; j <= max_order; ++j) out[j] += e * std::cos(j * t);
    }
    for (double& v : out) v /= n;
    return out;
}

// Chebyshev coefficients of Q_{beta,K}: odd degrees only.
std::vector<double> q_coefficients(double beta, int K) {
    auto a = bessel_by_quadrature(K, beta);
    std::vector<double> c(2 * static_cast<std::size_t>(K) + 2, 0.0);
    const double pre = 2.0 * std::sqrt(2.0 * beta / kPi);
    c[1] += pre * a[0];
    for (int j = 1; j <= K; ++j) {
        const double sgn = (j % 2 == 0) ? 1.0 : -1.0;
        c[2 * j + 1] += pre * a[j] * sgn / (2.0 * j + 1.0);
        c[2 * j - 1] -= pre * a[j] * sgn / (2.0 * j - 1.0);
    }
    return c;
}

double clenshaw(const std::vector<double>& c, double y) {
    double b1 = 0.0, b2 = 0.0;
    for (std::size_t k = c.size(); k-- > 1;) {
        double b0 = 2.0 * y * b1 - b2 + c[k];
        b2 = b1;
        b1 = b0;
    }
    return y * b1 - b2 + c[0];
}

Spectrum flipped(std::vector<double> v, std::vector<double> w, double shift = 0.0, double scale = 1.0) {
    return spectrum::make_spectrum(std::move(v), std::move(w), {shift, scale, true});
}

spectrum::MomentTable sampled_moments(const Spectrum& s, const HeavisideModel& m) {
    auto t = spectrum::moment_table(s, spe_degrees(m));
    for (auto& [d, e] : t.entries) e.is_exact = d == 0;
    return t;
}

}  // namespace

TEST(Bounds, NewBoundShapeAndLimit) {
    for (double beta : {10.0, 100.0, 1000.0}) {
        double prev = truncation_bound_new(beta, 1);
        EXPECT_GE(prev, 0.0);
        for (int K = 2; K < 400; K += 7) {
            double b = truncation_bound_new(beta, K);
            EXPECT_GE(b, 0.0);
            EXPECT_LE(b, prev);
            prev = b;
        }
        EXPECT_LE(truncation_bound_new(beta, 100000), 1e-15);
    }
}

TEST(Bounds, NewBoundMatchesIdentity) {
    // 2 sum_{j>K} a_j = 1 - a_0 - 2 sum_{j=1}^K a_j, evaluated from quadrature values.
    for (auto [beta, K] : {std::pair{10.0, 3}, std::pair{50.0, 8}, std::pair{200.0, 20}}) {
        auto a = bessel_by_quadrature(K, beta);
        double rest = 1.0 - a[0];
        for (int j = 1; j <= K; ++j) rest -= 2.0 * a[j];
        double oracle = std::sqrt(2.0 * beta / kPi) / K * rest;
        EXPECT_NEAR(truncation_bound_new(beta, K), oracle, 1e-10 * std::max(1.0, oracle));
    }
}

TEST(Bounds, OldBoundFormula) {
    const double beta = 40.0, t = 55.0;
    const int K = 30;
    double pre = std::sqrt(2.0 * beta / kPi) / K;
    double g = 2.0 * std::exp(-std::pow(K + 1.0, 2) / (2.0 * t));
    double p = std::pow(std::exp(1.0) * beta / t, t) * std::exp(-beta);
    EXPECT_NEAR(truncation_bound_old(beta, K, t), pre * (g + p), 1e-12 * pre * (g + p));
    EXPECT_THROW(truncation_bound_old(beta, K, beta - 1.0), DomainError);
}

TEST(Bounds, OptimizedOldBoundBeatsFixedT) {
    for (double beta : {10.0, 100.0}) {
        for (int K : {20, 60, 200}) {
            double best = truncation_bound_old(beta, K);
            for (double t = beta; t < 50.0 * beta; t *= 1.13) EXPECT_LE(best, truncation_bound_old(beta, K, t) * (1 + 1e-12));
        }
    }
}

TEST(Bounds, NewNeverAboveOld) {
    int points = 0;
    for (double beta : {10.0, 100.0, 1000.0}) {
        for (double k = 10; k <= 1e5; k *= 1.3) {
            int K = static_cast<int>(k);
            EXPECT_LE(truncation_bound_new(beta, K), truncation_bound_old(beta, K)) << beta << " " << K;
            ++points;
        }
    }
    EXPECT_GE(points, 100);
}

TEST(Bounds, NewBoundIsValid) {
    for (auto [beta, K] : {std::pair{100.0, 200}, std::pair{100.0, 400}, std::pair{1000.0, 2000}}) {
        auto c = q_coefficients(beta, K);
        const int n = 100000;
        double sup = 0.0;
        for (int i = 0; i <= n; ++i) {
            double y = -1.0 + 2.0 * i / n;
            sup = std::max(sup, std::abs(std::erf(std::sqrt(2.0 * beta) * y) - clenshaw(c, y)));
        }
        // Rounding floor for bounds below double resolution.
        EXPECT_LE(sup, truncation_bound_new(beta, K) + 1e-13) << beta << " " << K;
    }
}

TEST(Fourier, StructuralProperties) {
    auto m = fourier_coefficients(30.0, 40);
    EXPECT_EQ(m.f0, 0.5);
    ASSERT_EQ(m.f_odd.size(), 41u);
    double norm = 0.5;
    for (auto f : m.f_odd) {
        EXPECT_EQ(f.real(), 0.0);
        norm += std::abs(f);
    }
    EXPECT_NEAR(m.one_norm, norm, 1e-14);
    EXPECT_EQ(m.heaviside(0.0), 0.5);
    EXPECT_LE(m.bound_new, m.bound_old);
}

TEST(Fourier, ReconstructionMatchesQ) {
    const double beta = 50.0;
    const int K = 120;
    auto m = fourier_coefficients(beta, K);
    auto c = q_coefficients(beta, K);
    for (int i = 0; i <= 2000; ++i) {
        double x = -kPi + 2.0 * kPi * i / 2000;
        std::complex<double> h = m.f0;
        for (int j = 0; j <= K; ++j) {
            double w = 2.0 * j + 1.0;
            h += m.f_odd[j] * (std::polar(1.0, w * x) - std::polar(1.0, -w * x));
        }
        EXPECT_NEAR(h.real(), 0.5 * (clenshaw(c, std::sin(x)) + 1.0), 1e-12);
        EXPECT_LT(std::abs(h.imag()), 1e-12);
    }
}

TEST(Fourier, CoefficientsMatchFourierIntegral) {
    const double beta = 50.0;
    const int K = 120;
    auto m = fourier_coefficients(beta, K);
    auto c = q_coefficients(beta, K);
    const int n = 1 << 16;
    std::vector<double> h(n);
    for (int i = 0; i < n; ++i) h[i] = 0.5 * (clenshaw(c, std::sin(-kPi + 2.0 * kPi * i / n)) + 1.0);
    for (int j : {0, 1, 5, 17, 60, 119, 120}) {
        std::complex<double> f = 0.0;
        const double w = 2.0 * j + 1.0;
        for (int i = 0; i < n; ++i) f += h[i] * std::polar(1.0, -w * (-kPi + 2.0 * kPi * i / n));
        f /= double(n);
        EXPECT_NEAR(f.real(), m.f_odd[j].real(), 1e-8);
        EXPECT_NEAR(f.imag(), m.f_odd[j].imag(), 1e-8);
    }
    std::complex<double> f0 = 0.0;
    for (int i = 0; i < n; ++i) f0 += h[i];
    EXPECT_NEAR(f0.real() / n, 0.5, 1e-8);
}

TEST(Fourier, OneNormGrowsSlowly) {
    for (int K = 32; K <= 1024; K *= 2) {
        double a = fourier_coefficients(0.5 * K, K).one_norm;
        double b = fourier_coefficients(1.0 * K, 2 * K).one_norm;
        EXPECT_LE(b / a, 1.5) << K;
    }
}

TEST(Select, ContractsAndScaling) {
    const double eps = 0.01;
    auto p1 = select_parameters(0.02, eps);
    auto p2 = select_parameters(0.01, eps);
    EXPECT_NEAR(double(p2.K) / p1.K, 2.0, 0.3);
    auto p3 = select_parameters(0.02, eps / 10);
    EXPECT_LE(double(p3.K) / p1.K, 1.6);
    EXPECT_GE(p3.K, p1.K);

    // Both halves of the error budget are met and beta is minimal.
    EXPECT_LE(std::erfc(std::sqrt(2.0 * p1.beta_erf) * std::sin(0.01)), eps / 2 * (1 + 1e-9));
    EXPECT_GT(std::erfc(std::sqrt(2.0 * p1.beta_erf * (1 - 1e-6)) * std::sin(0.01)), eps / 2);
    EXPECT_LE(truncation_bound_new(p1.beta_erf, p1.K), eps / 2);
    EXPECT_GT(truncation_bound_new(p1.beta_erf, p1.K - 1), eps / 2);

    EXPECT_THROW(select_parameters(1.0, eps), ContractError);
    EXPECT_THROW(select_parameters(0.01, 0.6), ContractError);
    EXPECT_THROW(select_parameters(1e-6, 0.01), SearchError);
}

TEST(Select, TightBoundSavesDepth) {
    for (double delta : {0.05, 0.01, 0.002}) {
        auto tight = select_parameters(delta, 0.03, BoundKind::Tight);
        auto legacy = select_parameters(delta, 0.03, BoundKind::Legacy);
        EXPECT_LE(double(tight.K), 2.0 / 3.0 * 1.15 * legacy.K) << delta;
    }
}

TEST(Acdf, SinglePointStep) {
    const double delta = 0.05, eps = 0.02;
    auto p = select_parameters(delta, eps);
    auto m = fourier_coefficients(p.beta_erf, p.K);
    auto s = flipped({1.0}, {1.0});
    auto t = sampled_moments(s, m);
    EXPECT_LE(acdf_value(m, t, -3 * delta), eps);
    EXPECT_GE(acdf_value(m, t, 3 * delta), 2.0 - eps);
    for (double x : {-1.0, -0.3, 0.2, 0.9})
        EXPECT_NEAR(acdf_value(m, t, x), acdf_value(m, t, x + 2 * kPi), 1e-12);
}

TEST(Acdf, ThreePointSandwich) {
    const double delta = 0.04, eps = 0.02;
    auto p = select_parameters(delta, eps);
    auto m = fourier_coefficients(p.beta_erf, p.K);
    auto s = flipped({0.2, 0.55, 0.9}, {0.2, 0.3, 0.5});
    ASSERT_TRUE(certify_spe_range(s, delta));
    auto t = sampled_moments(s, m);
    const double edge = 0.5 * (kPi - delta);
    for (int i = 0; i <= 2000; ++i) {
        double x = -edge + 2.0 * edge * i / 2000;
        double v = acdf_value(m, t, x);
        EXPECT_GE(v, exact_acdf(s, x - delta) - eps) << x;
        EXPECT_LE(v, exact_acdf(s, x + delta) + eps) << x;
    }
}

TEST(Acdf, MatchesComplexSumWithRealResult) {
    auto m = fourier_coefficients(20.0, 30);
    auto s = flipped({0.3, 0.8}, {0.4, 0.6});
    auto t = sampled_moments(s, m);
    for (double x : {-1.2, -0.4, 0.1, 0.7}) {
        std::complex<double> sum = 2.0 * m.f0;
        for (int j = 0; j <= m.K; ++j) {
            double w = 2.0 * j + 1.0;
            sum += 2.0 * m.f_odd[j] * (std::polar(1.0, w * x) - std::polar(1.0, -w * x)) * t.value(2 * j + 1);
        }
        EXPECT_NEAR(acdf_value(m, t, x), sum.real(), 1e-12);
        EXPECT_LE(std::abs(sum.imag()), 1e-10 * m.one_norm);
    }
    auto missing = spectrum::moment_table(s, {0, 1, 3});
    EXPECT_THROW(acdf_value(m, missing, 0.1), ContractError);
}

TEST(Acdf, NoisyCurveIsSmooth) {
    const double delta = 0.03;
    auto p = select_parameters(delta, 0.03);
    auto m = fourier_coefficients(p.beta_erf, p.K);
    auto s = flipped({0.3, 0.85}, {0.5, 0.5});
    auto t = sampled_moments(s, m);
    numerics::RngStream r(4, 0);
    auto noisy = inject_spe_noise(m, t, spe_shot_count(m.one_norm, 0.25), r);
    const double limit = m.one_norm * (2.0 * m.K + 1.0) * delta / 10.0;
    for (double x = -1.5; x < 1.5; x += 0.0137)
        EXPECT_LE(std::abs(acdf_value(m, noisy, x + delta / 10) - acdf_value(m, noisy, x)), limit);
}

TEST(Allocate, Examples) {
    HeavisideModel m;
    m.K = 1;
    m.f_odd = {{0.0, -0.75}, {0.0, -0.25}};
    auto a = spe_allocate(m, 8);
    EXPECT_EQ(a.at(0), 0);
    EXPECT_EQ(a.at(1), 6);
    EXPECT_EQ(a.at(3), 2);
    EXPECT_EQ(spe_shot_count(2.0, 0.25), 128);
    EXPECT_THROW(spe_allocate(m, 2), ContractError);

    auto model = fourier_coefficients(200.0, 80);
    auto b = spe_allocate(model, 100000);
    for (int j = 1; j <= 80; ++j) EXPECT_LE(b.at(2 * j + 1), b.at(2 * j - 1) + 1);
    std::int64_t total = 0;
    for (auto [d, n] : b) total += n;
    EXPECT_LE(total, 100000 + 82);
    EXPECT_GE(total, 100000 - 82);
}

TEST(Allocate, EstimatorVariance) {
    const double delta = 0.05;
    auto p = select_parameters(delta, 0.03);
    auto m = fourier_coefficients(p.beta_erf, p.K);
    auto s = flipped({0.3, 0.85}, {0.5, 0.5});
    auto t = sampled_moments(s, m);
    const std::int64_t total = spe_shot_count(m.one_norm, 0.25);
    for (double x : {-0.6, -0.2, 0.4}) {
        const int n = 10000;
        double sum = 0.0, sq = 0.0;
        for (int i = 0; i < n; ++i) {
            numerics::RngStream r(77, i);
            double v = acdf_value(m, inject_spe_noise(m, t, double(total), r), x);
            sum += v;
            sq += v * v;
        }
        double var = sq / n - (sum / n) * (sum / n);
        EXPECT_LE(var, m.one_norm * m.one_norm * 2.0 / total * 1.5) << x;
    }
}

TEST(Search, NoiselessStep) {
    const double x0 = -0.4321, delta = 1e-3;
    SearchConfig cfg;
    cfg.eta = 0.5;
    cfg.level = 0.5;
    cfg.delta = delta;
    cfg.x_left = -kPi;
    cfg.x_right = 0.0;
    auto r = binary_search([&](double x) { return x >= x0 ? 1.0 : 0.0; }, cfg);
    EXPECT_LE(std::abs(r.x_star - x0), delta);
    EXPECT_LE(r.queries, int(std::ceil(std::log2(kPi / delta))) + 2);
    cfg.x_left = 1.0;
    EXPECT_THROW(binary_search([](double) { return 0.0; }, cfg), ContractError);
}

TEST(Search, Presets) {
    auto a = SearchConfig::preset(Orientation::FirstJump, 0.2, 0.01);
    EXPECT_DOUBLE_EQ(a.level, 0.15);
    auto b = SearchConfig::preset(Orientation::LastJump, 0.2, 0.01);
    EXPECT_DOUBLE_EQ(b.level, 0.85);
    EXPECT_DOUBLE_EQ(b.x_right, 0.5 * (kPi - 0.01));
    EXPECT_DOUBLE_EQ(b.x_left, -b.x_right);
}

// Budget of 40 x spe_shot_count.
TEST(Search, NoisyMomentsSucceedOnceNoiseIsResolved) {
    const double delta = 0.01, eta = 0.25;
    auto p = select_parameters(delta, eta / 8);
    auto m = fourier_coefficients(p.beta_erf, p.K);
    auto s = flipped({0.3, 0.9}, {0.5, 0.5});
    auto t = sampled_moments(s, m);
    const double total = 40.0 * spe_shot_count(m.one_norm, eta);
    auto cfg = SearchConfig::preset(Orientation::LastJump, eta, delta);
    const double x0 = -std::acos(0.9);
    int ok = 0;
    for (int run = 0; run < 200; ++run) {
        numerics::RngStream r(1000 + run, 0);
        auto res = binary_search(m, inject_spe_noise(m, t, total, r), cfg);
        ok += std::abs(res.x_star - x0) <= delta;
    }
    EXPECT_GE(ok, 190);
}

TEST(Range, Certification) {
    EXPECT_TRUE(certify_spe_range(flipped({0.1, 0.9}, {0.5, 0.5}), 0.01));
    EXPECT_FALSE(certify_spe_range(flipped({0.001, 0.9}, {0.5, 0.5}), 0.01));
    EXPECT_TRUE(certify_spe_range(flipped({std::sin(0.005), 0.9}, {0.5, 0.5}), 0.01));
}

TEST(Invert, Examples) {
    const double lambda = 3.0;
    auto e = invert_energy(0.0, {-7.0, 2.0 * lambda, true});
    EXPECT_DOUBLE_EQ(e.energy, -7.0 - lambda);
    EXPECT_EQ(e.amplification, 0.0);
    auto u = invert_energy(0.7, {1.5, 2.0, false});
    EXPECT_DOUBLE_EQ(u.energy, 1.5 + 2.0 * std::cos(0.7));
    EXPECT_NEAR(u.amplification, std::sin(0.7), 1e-15);

    auto s = spectrum::make_spectrum({-0.8, 0.1, 0.6}, {0.5, 0.3, 0.2}, {-100.0, 4.0, false});
    auto f = spectrum::flip_for_spe(s);
    for (std::size_t i = 0; i < f.size(); ++i) {
        double x = -std::acos(f.values[i]);
        EXPECT_NEAR(invert_energy(x, f.transform).energy, f.energy(i), 1e-12);
    }
}

TEST(Run, ReportAndDeterminism) {
    auto s = spectrum::make_spectrum({-0.9, 0.4}, {0.5, 0.5}, {-10.0, 0.5, false});
    SpeOptions o;
    o.seed = 5;
    auto a = spe_run(s, 0.01, o);
    auto b = spe_run(s, 0.01, o);
    EXPECT_EQ(a.x_star, b.x_star);
    EXPECT_EQ(a.M, spe_shot_count(a.one_norm, 0.25) * 5);
    EXPECT_DOUBLE_EQ(a.eta, 0.25);
    EXPECT_DOUBLE_EQ(a.epsilon, 0.25 / 8);
    EXPECT_NEAR(a.true_energy, -10.0 - 0.45, 1e-12);
    EXPECT_NEAR(a.delta_radians, 0.01 / (0.5 * 2.0 * 1.001), 1e-12);
    EXPECT_EQ(a.success, a.error <= 0.01);
    auto plan = plan_spe(s, 0.01, o);
    EXPECT_EQ(plan.M, a.M);
    EXPECT_EQ(plan.params.K, a.K);
}

TEST(Run, RangeViolationRejected) {
    auto bad = flipped({0.0001, 0.9}, {0.5, 0.5});
    EXPECT_THROW(spe_run(bad, 0.01, {}), DomainError);
}
