#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "eft/errors.hpp"
#include "eft/numerics.hpp"
#include "eft/qksd.hpp"
#include "eft/spectrum.hpp"

using namespace eft;
using namespace eft::qksd;
using spectrum::Spectrum;

namespace {

Spectrum random_spectrum(int r, std::uint64_t seed) {
    numerics::RngStream rng(seed, 7);
    std::vector<double> v, w;
    double total = 0.0;
    for (int i = 0; i < r; ++i) {
        v.push_back(2.0 * rng.next_uniform() - 1.0);
        w.push_back(0.05 + rng.next_uniform());
        total += w.back();
    }
    for (double& x : w) x /= total;
    return spectrum::make_spectrum(v, w, {0.0, 1.0, false});
}

Spectrum two_point() { return spectrum::make_spectrum({-0.5, 0.5}, {0.3, 0.7}, {0.0, 1.0, false}); }

spectrum::MomentTable exact_moments(const Spectrum& s, const KrylovConfig& cfg) {
    return spectrum::moment_table(s, spectrum::krylov_degrees(cfg.k_dim, cfg.dk));
}

// Direct spectral sums: S_kj = sum p T_k T_j, H_kj = sum p lambda T_k T_j.
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> gram_oracle(const Spectrum& s, int k_dim, int dk) {
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(k_dim, k_dim), g = Eigen::MatrixXd::Zero(k_dim, k_dim);
    for (std::size_t r = 0; r < s.size(); ++r) {
        double theta = std::acos(s.values[r]);
        for (int k = 0; k < k_dim; ++k)
            for (int j = 0; j < k_dim; ++j) {
                double tt = std::cos(k * dk * theta) * std::cos(j * dk * theta) * s.weights[r];
                g(k, j) += tt;
                h(k, j) += tt * s.values[r];
            }
    }
    return {h, g};
}

double max_diff(const Matrix& a, const Eigen::MatrixXd& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) m = std::max(m, std::abs(a(i, j) - b(i, j)));
    return m;
}

}  // namespace

TEST(Policy, ParseAndName) {
    auto p = Policy::parse("threshold:1e-6");
    EXPECT_EQ(p.kind, Policy::Kind::Threshold);
    EXPECT_DOUBLE_EQ(p.tau, 1e-6);
    EXPECT_DOUBLE_EQ(Policy::parse("threshold").tau, 1e-8);
    auto t = Policy::parse("top:2");
    EXPECT_EQ(t.kind, Policy::Kind::TopM);
    EXPECT_EQ(t.m, 2);
    EXPECT_EQ(Policy::parse(t.name()).m, 2);
    EXPECT_THROW(Policy::parse("top:0"), ConfigError);
    EXPECT_THROW(Policy::parse("lowest"), ConfigError);
    EXPECT_THROW(Policy::parse("threshold:-1"), ConfigError);
}

TEST(BuildMatrices, SingleDimension) {
    auto s = two_point();
    KrylovConfig cfg{1, 5, {}};
    auto m = build_matrices(exact_moments(s, cfg), 1, 5);
    EXPECT_EQ(m.s(0, 0), 1.0);
    EXPECT_DOUBLE_EQ(m.h(0, 0), spectrum::chebyshev_moment(s, 1));
}

TEST(BuildMatrices, OverlapDiagonal) {
    auto s = random_spectrum(6, 3);
    KrylovConfig cfg{5, 3, {}};
    auto t = exact_moments(s, cfg);
    auto m = build_matrices(t, 5, 3);
    for (int k = 0; k < 5; ++k) EXPECT_DOUBLE_EQ(m.s(k, k), 0.5 * (t.value(2 * k * 3) + 1.0));
}

TEST(BuildMatrices, MatchesGramOracle) {
    for (int trial = 0; trial < 12; ++trial) {
        auto s = random_spectrum(5 + 4 * trial, 100 + trial);
        for (int dk : {1, 3, 10}) {
            int k_dim = 2 + (trial * 7) % 19;
            auto m = build_matrices(exact_moments(s, {k_dim, dk, {}}), k_dim, dk);
            auto [h, g] = gram_oracle(s, k_dim, dk);
            EXPECT_LT(max_diff(m.s, g), 1e-12);
            EXPECT_LT(max_diff(m.h, h), 1e-12);
            EXPECT_LT((m.s - m.s.transpose()).max_abs(), 1e-15);
            EXPECT_LT((m.h - m.h.transpose()).max_abs(), 1e-15);
        }
    }
}

TEST(BuildMatrices, MissingDegreeNamed) {
    auto s = two_point();
    auto t = spectrum::moment_table(s, {0, 1, 2});
    try {
        build_matrices(t, 2, 1);
        FAIL();
    } catch (const ContractError& e) {
        EXPECT_NE(std::string(e.what()).find("3"), std::string::npos);
    }
}

TEST(Solve, SingleEigenstate) {
    auto s = spectrum::make_spectrum({0.3}, {1.0}, {0.0, 1.0, false});
    for (int k_dim : {1, 2, 5}) {
        KrylovConfig cfg{k_dim, 1, Policy::threshold()};
        auto sol = solve(exact_moments(s, cfg), cfg, s.transform);
        EXPECT_EQ(sol.kept_eigs.size(), 1u);
        EXPECT_NEAR(sol.e0_norm, 0.3, 1e-12);
    }
}

TEST(Solve, TwoPointRecovery) {
    auto s = two_point();
    KrylovConfig cfg{2, 1, Policy::threshold()};
    auto sol = solve(exact_moments(s, cfg), cfg, s.transform);
    auto [h, g] = gram_oracle(s, 2, 1);
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges(h, g);
    ASSERT_EQ(sol.ritz_values.size(), 2u);
    EXPECT_NEAR(sol.ritz_values[0], ges.eigenvalues()(0), 1e-10);
    EXPECT_NEAR(sol.ritz_values[1], ges.eigenvalues()(1), 1e-10);
    EXPECT_NEAR(sol.ritz_values[0], -0.5, 1e-10);
    EXPECT_NEAR(sol.ritz_values[1], 0.5, 1e-10);
}

TEST(Solve, TopOneIsRayleighQuotientOfDominantDirection) {
    auto s = two_point();
    KrylovConfig cfg{2, 1, Policy::top(1)};
    auto sol = solve(exact_moments(s, cfg), cfg, s.transform);
    auto [h, g] = gram_oracle(s, 2, 1);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g);
    Eigen::VectorXd v = es.eigenvectors().col(1);
    double rq = v.dot(h * v) / v.dot(g * v);
    ASSERT_EQ(sol.ritz_values.size(), 1u);
    EXPECT_NEAR(sol.e0_norm, rq, 1e-12);
    EXPECT_GE(sol.e0_norm, -0.5);
}

TEST(Solve, PhysicalEnergyUsesTransform) {
    auto s = spectrum::make_spectrum({-0.5, 0.5}, {0.3, 0.7}, {-10.0, 4.0, false});
    KrylovConfig cfg{2, 1, Policy::threshold()};
    auto sol = solve(exact_moments(s, cfg), cfg, s.transform);
    EXPECT_NEAR(sol.e0_phys, -10.0 + 4.0 * sol.e0_norm, 1e-12);
    EXPECT_NEAR(sol.e0_phys, s.ground_energy(), 1e-9);
}

TEST(Solve, Errors) {
    Matrix s{{1.0, 0.0}, {0.0, 1.0}};
    Matrix h{{0.1, 0.0}, {0.0, 0.2}};
    EXPECT_THROW(solve_regularized(h, s, Policy::top(3), {}), ContractError);
    Matrix zero(2, 2, 0.0);
    EXPECT_THROW(solve_regularized(h, zero, Policy::threshold(), {}), EmptySubspaceError);
    Matrix indefinite{{1.0, 0.0}, {0.0, -1.0}};
    EXPECT_THROW(solve_regularized(h, indefinite, Policy::top(2), {}), EmptySubspaceError);
    EXPECT_THROW(solve_regularized(Matrix(3, 3, 0.0), s, Policy::threshold(), {}), ContractError);
}

TEST(Solve, RitzContainment) {
    for (int trial = 0; trial < 10; ++trial) {
        auto s = random_spectrum(3 + 3 * trial, 500 + trial);
        double lo = s.values.front(), hi = s.values.back();
        for (int dk : {1, 3}) {
            for (auto pol : {Policy::threshold(), Policy::top(1), Policy::top(2)}) {
                KrylovConfig cfg{2 + trial, dk, pol};
                auto sol = solve(exact_moments(s, cfg), cfg, s.transform);
                for (double r : sol.ritz_values) {
                    EXPECT_GE(r, lo - 1e-9);
                    EXPECT_LE(r, hi + 1e-9);
                }
                EXPECT_TRUE(std::is_sorted(sol.ritz_values.begin(), sol.ritz_values.end()));
                for (double e : sol.kept_eigs) EXPECT_GT(e, 0.0);
            }
        }
    }
}

TEST(Solve, ExactRecoveryOfSmallSpectra) {
    for (int r = 1; r <= 8; ++r) {
        // Well-spread values keep the Krylov basis conditioned.
        std::vector<double> v, w;
        for (int i = 0; i < r; ++i) {
            v.push_back(std::cos(std::numbers::pi * (i + 0.5) / r));
            w.push_back(1.0 / r);
        }
        auto s = spectrum::make_spectrum(v, w, {0.0, 1.0, false});
        KrylovConfig cfg{r, 1, Policy::threshold()};
        auto sol = solve(exact_moments(s, cfg), cfg, s.transform);
        ASSERT_EQ(sol.ritz_values.size(), static_cast<std::size_t>(r));
        for (int i = 0; i < r; ++i) EXPECT_NEAR(sol.ritz_values[i], s.values[i], 1e-9);
    }
}

TEST(Gradient, SingleDimensionIsScale) {
    auto s = spectrum::make_spectrum({0.3}, {1.0}, {-2.0, 7.5, false});
    KrylovConfig cfg{1, 1, Policy::threshold()};
    auto g = energy_gradient(exact_moments(s, cfg), cfg, s.transform);
    EXPECT_NEAR(g.g.at(1), 7.5, 1e-6);
    // E = <T_1> / <T_0>
    EXPECT_NEAR(g.g.at(0), -7.5 * 0.3, 1e-6);
    EXPECT_TRUE(g.unstable.empty());
}

TEST(Gradient, StepHalvingConsistency) {
    auto s = two_point();
    KrylovConfig cfg{2, 1, Policy::threshold()};
    auto t = exact_moments(s, cfg);
    auto a = energy_gradient(t, cfg, s.transform, 1e-5);
    auto b = energy_gradient(t, cfg, s.transform, 1e-6);
    ASSERT_EQ(a.g.size(), b.g.size());
    for (auto [k, v] : a.g) {
        if (a.unstable.count(k) || b.unstable.count(k)) continue;
        double ref = std::max(std::abs(v), 1e-8);
        EXPECT_LT(std::abs(v - b.g.at(k)) / ref, 1e-3) << "degree " << k;
    }
}

TEST(Gradient, CoversEveryMatrixDegree) {
    auto s = random_spectrum(8, 9);
    KrylovConfig cfg{3, 2, Policy::top(2)};
    auto g = energy_gradient(exact_moments(s, cfg), cfg, s.transform);
    EXPECT_EQ(g.kept, 2);
    std::set<long long> keys;
    for (auto& [k, v] : g.g) keys.insert(k);
    EXPECT_EQ(keys, spectrum::krylov_degrees(3, 2));
}

TEST(Allocate, ProportionalExample) {
    auto a = allocate_shots({{0, 9.0}, {1, 9.0}, {2, 4.0}, {3, 1.0}}, 10);
    EXPECT_EQ(a.at(0), 0);
    EXPECT_EQ(a.at(1), 0);
    EXPECT_EQ(a.at(2), 8);
    EXPECT_EQ(a.at(3), 2);
}

TEST(Allocate, ZeroGradientStillGetsOne) {
    auto a = allocate_shots({{0, 1.0}, {1, 1.0}, {2, 3.0}, {5, 0.0}}, 100);
    EXPECT_EQ(a.at(5), 1);
    EXPECT_EQ(a.at(2), 100);
}

TEST(Allocate, UniformSplit) {
    std::map<long long, double> g{{0, 1.0}, {1, 1.0}};
    for (long long k = 2; k < 9; ++k) g[k] = -0.25;
    auto a = allocate_shots(g, 1000);
    std::int64_t total = 0;
    for (long long k = 2; k < 9; ++k) {
        EXPECT_EQ(a.at(k), 1000 / 7);
        total += a.at(k);
    }
    EXPECT_GE(total, 1000 - 7);
    EXPECT_LE(total, 1000 + 7);
}

TEST(Allocate, TooFewShots) {
    EXPECT_THROW(allocate_shots({{0, 1.0}, {1, 1.0}, {2, 1.0}, {3, 1.0}}, 1), ContractError);
    EXPECT_EQ(sampled_degree_count({2, 1, {}}), 2);
    EXPECT_EQ(sampled_degree_count({1, 4, {}}), 0);
}

TEST(Noise, DeterministicAndExactDegreesUntouched) {
    auto s = random_spectrum(5, 1);
    KrylovConfig cfg{3, 1, {}};
    auto t = exact_moments(s, cfg);
    Allocation alloc;
    for (long long k : t.degrees()) alloc[k] = k <= 1 ? 0 : 50;
    numerics::RngStream r1(42, 3), r2(42, 3);
    auto a = inject_noise(t, alloc, r1);
    auto b = inject_noise(t, alloc, r2);
    for (long long k : t.degrees()) {
        EXPECT_EQ(a.value(k), b.value(k));
        if (k <= 1) {
            EXPECT_EQ(a.value(k), t.value(k));
            EXPECT_TRUE(a.entries.at(k).is_exact);
        } else {
            EXPECT_NE(a.value(k), t.value(k));
            EXPECT_EQ(a.entries.at(k).shots, 50);
            EXPECT_FALSE(a.entries.at(k).is_exact);
        }
    }
}

TEST(Noise, UnitMomentHasNoVariance) {
    auto s = spectrum::make_spectrum({-1.0}, {1.0}, {0.0, 1.0, false});
    auto t = spectrum::moment_table(s, {0, 1, 2, 3});
    numerics::RngStream r(5, 0);
    auto n = inject_noise(t, {{0, 0}, {1, 0}, {2, 1}, {3, 1}}, r);
    EXPECT_EQ(n.value(2), 1.0);
    EXPECT_EQ(n.value(3), -1.0);
}

TEST(Noise, HugeShotCountIsNearlyExact) {
    auto s = two_point();
    auto t = spectrum::moment_table(s, {0, 1, 2});
    numerics::RngStream r(5, 0);
    auto n = inject_noise(t, {{2, 1'000'000'000'000'000LL}}, r);
    EXPECT_NEAR(n.value(2), t.value(2), 1e-7);
}

TEST(Noise, MissingAllocation) {
    auto t = spectrum::moment_table(two_point(), {0, 1, 2, 3});
    numerics::RngStream r(5, 0);
    EXPECT_THROW(inject_noise(t, {{2, 3}}, r), ContractError);
    EXPECT_THROW(inject_noise(t, {{2, 3}, {3, 0}}, r), ContractError);
}

TEST(Noise, Unbiased) {
    auto s = two_point();
    auto t = spectrum::moment_table(s, {0, 1, 2, 3});
    const int n = 10000;
    const std::int64_t shots = 20;
    double sum2 = 0.0, sum3 = 0.0;
    for (int i = 0; i < n; ++i) {
        numerics::RngStream r(11, i);
        auto x = inject_noise(t, {{2, shots}, {3, shots}}, r);
        sum2 += x.value(2);
        sum3 += x.value(3);
    }
    for (auto [k, sum] : {std::pair{2LL, sum2}, std::pair{3LL, sum3}}) {
        double v = t.value(k);
        double sigma = std::sqrt((1.0 - v * v) / shots);
        EXPECT_LE(std::abs(sum / n - v), 4.0 * sigma / std::sqrt(double(n))) << "degree " << k;
    }
}

TEST(Trials, ReproducibleAndScheduleIndependent) {
    auto s = random_spectrum(6, 21);
    KrylovConfig cfg{3, 1, Policy::top(2)};
    auto a = run_trials(s, cfg, 5000, 1, 99);
    auto b = run_trials(s, cfg, 5000, 1, 99);
    EXPECT_EQ(a.energies[0], b.energies[0]);
    auto c = run_trials(s, cfg, 5000, 16, 99, 1);
    auto d = run_trials(s, cfg, 5000, 16, 99, 4);
    EXPECT_EQ(c.energies, d.energies);
    EXPECT_EQ(c.energies[0], a.energies[0]);
}

TEST(Trials, NoiselessMomentsGiveBiasOnly) {
    auto one = spectrum::make_spectrum({-1.0}, {1.0}, {3.0, 2.0, false});
    KrylovConfig cfg{3, 1, Policy::threshold()};
    auto st = run_trials(one, cfg, 100, 20, 1);
    EXPECT_EQ(st.failed_trials, 0);
    EXPECT_NEAR(st.rmse, std::abs(st.noiseless_energy - st.true_energy), 1e-12);
    EXPECT_NEAR(st.mean_abs_err, 0.0, 1e-12);
}

TEST(Trials, ErrorScalesAsInverseSqrtShots) {
    auto s = two_point();
    KrylovConfig cfg{2, 1, Policy::threshold()};
    std::vector<double> lx, ly;
    for (std::int64_t m : {100000LL, 215443LL, 464159LL, 1000000LL}) {
        auto st = run_trials(s, cfg, m, 400, 7);
        ASSERT_EQ(st.failed_trials, 0);
        lx.push_back(std::log(double(m)));
        ly.push_back(std::log(st.mean_abs_err));
    }
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) mx += lx[i] / lx.size(), my += ly[i] / ly.size();
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) sxy += (lx[i] - mx) * (ly[i] - my), sxx += (lx[i] - mx) * (lx[i] - mx);
    EXPECT_NEAR(sxy / sxx, -0.5, 0.1);
}

TEST(Budget, InfiniteTargetIsMinimal) {
    auto s = random_spectrum(6, 2);
    KrylovConfig cfg{4, 2, Policy::top(2)};
    BudgetOptions opt;
    opt.n_trials = 5;
    auto b = find_shot_budget(s, cfg, std::numeric_limits<double>::infinity(), opt);
    EXPECT_EQ(b.m_total, sampled_degree_count(cfg));
}

TEST(Budget, HalvingTargetQuadruplesShots) {
    auto s = two_point();
    KrylovConfig cfg{2, 1, Policy::threshold()};
    BudgetOptions opt;
    opt.n_trials = 100;
    opt.seed = 3;
    auto a = find_shot_budget(s, cfg, 2e-3, opt);
    auto b = find_shot_budget(s, cfg, 1e-3, opt);
    EXPECT_LE(a.stats.mean_abs_err, 2e-3);
    EXPECT_LE(b.stats.mean_abs_err, 1e-3);
    double ratio = double(b.m_total) / double(a.m_total);
    EXPECT_GE(ratio, 2.0);
    EXPECT_LE(ratio, 6.0);
}

TEST(Budget, CapReported) {
    auto s = two_point();
    KrylovConfig cfg{2, 1, Policy::threshold()};
    BudgetOptions opt;
    opt.n_trials = 10;
    opt.cap = 1e4;
    try {
        find_shot_budget(s, cfg, 1e-9, opt);
        FAIL();
    } catch (const SearchError& e) {
        EXPECT_NE(std::string(e.what()).find("10000"), std::string::npos);
    }
}

TEST(Overlap, SingleDimension) {
    auto r = overlap_analysis(two_point(), {1}, {1});
    ASSERT_EQ(r.rows.size(), 1u);
    EXPECT_DOUBLE_EQ(r.rows[0].s[0], 1.0);
    EXPECT_EQ(r.rows[0].s[1], 0.0);
}

TEST(Overlap, OrderingNestingAndPoincare) {
    auto s = random_spectrum(12, 77);
    std::vector<int> ks{20, 40, 60, 80, 100};
    auto r = overlap_analysis(s, ks, {1, 10, 20});
    ASSERT_EQ(r.rows.size(), 15u);
    auto find = [&](int k, int dk) {
        for (auto& row : r.rows)
            if (row.K == k && row.dk == dk) return row;
        throw std::runtime_error("missing row");
    };
    for (auto& row : r.rows) {
        EXPECT_GE(row.s[0], row.s[1]);
        EXPECT_GE(row.s[1], row.s[2]);
    }
    for (int dk : {1, 10, 20})
        for (std::size_t i = 1; i < ks.size(); ++i) EXPECT_GE(find(ks[i], dk).s[0], find(ks[i - 1], dk).s[0] - 1e-12);
    for (int k : ks)
        for (int i = 0; i < 3; ++i) {
            EXPECT_GE(find(k, 1).s[i], find(k, 10).s[i] - 1e-12);
            EXPECT_GE(find(k, 10).s[i], find(k, 20).s[i] - 1e-12);
        }
}

TEST(Overlap, LinearGrowthSlopes) {
    auto s = spectrum::make_spectrum({std::cos(0.9), std::cos(1.5), std::cos(2.1)}, {0.5, 0.3, 0.2},
                                     {0.0, 1.0, false});
    auto r = overlap_analysis(s, {40, 80, 120, 160, 200}, {1});
    ASSERT_EQ(r.slopes.size(), 1u);
    const double expect[3] = {0.25, 0.15, 0.10};
    for (int i = 0; i < 3; ++i) EXPECT_NEAR(r.slopes[0].slope[i], expect[i], 0.1 * expect[i]);
}

TEST(OptimalDk, Examples) {
    EXPECT_DOUBLE_EQ(optimal_dk(100.0, 0.0), 100.0);
    EXPECT_EQ(optimal_dk(50.0, 1.0), 0.0);
    EXPECT_EQ(optimal_dk(50.0, -1.0), 0.0);
    EXPECT_NEAR(optimal_dk(63.355, 0.14404), 63.355 * std::sqrt(1.0 - 0.14404 * 0.14404), 1e-12);
    EXPECT_NEAR(optimal_dk(63.355, 0.14404), 62.69, 0.01);
    EXPECT_THROW(optimal_dk(1.0, 1.5), DomainError);
}

TEST(WindowOverlap, AnalyticZeros) {
    const double pi = std::numbers::pi;
    // sine factor: dk (a - b) / 2 = pi
    auto z1 = window_overlap(200, 4, 1.0 + pi / 2.0, 1.0, 3.0);
    EXPECT_LT(std::abs(z1.value), 1e-10);
    // cosine factor: dk (a + b) / 2 = pi / 2
    auto z2 = window_overlap(200, 2, pi / 4 + 0.1, pi / 4 - 0.1, 3.0);
    EXPECT_LT(std::abs(z2.value), 1e-10);
    EXPECT_GT(z2.bound, 0.0);
}

TEST(WindowOverlap, BoundHolds) {
    for (int dk = 1; dk < 30; dk += 3)
        for (double a = 0.2; a < 3.1; a += 0.37) {
            auto w = window_overlap(100, dk, a, a / 2, 2.0);
            EXPECT_LE(std::abs(w.value), w.bound * 1.1);
            EXPECT_NEAR(w.bound, 2.0 * std::sin(0.75 * a) / dk, 1e-15);
        }
}

TEST(WindowOverlap, MatchesQuadrature) {
    const long long k = 200;
    const double scale = 1.7;
    for (auto [dk, lo, hi] : {std::tuple{1, 1.0, 1.4}, std::tuple{2, 0.8, 1.1}, std::tuple{3, 1.2, 1.6}}) {
        auto w = window_overlap(k, dk, hi, lo, scale);
        auto f = [&](double th) { return scale * std::sin(th) * std::cos(k * th) * std::cos((k + dk) * th); };
        double exact = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, lo, hi, 20, 1e-12);
        EXPECT_NEAR(w.value, exact, 0.05 * std::abs(exact)) << "dk " << dk;
    }
}
