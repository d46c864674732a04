#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "eft/matrix.hpp"
#include "eft/numerics.hpp"
#include "eft/spectrum.hpp"

namespace eft::qksd {

// Which overlap directions survive regularization.
struct Policy {
    enum class Kind { Threshold, TopM };
    Kind kind = Kind::Threshold;
    double tau = 1e-8;
    int m = 1;

    static Policy threshold(double tau = 1e-8) { return {Kind::Threshold, tau, 0}; }
    static Policy top(int m) { return {Kind::TopM, 0.0, m}; }
    // "threshold:1e-8", "threshold", "top:2"
    static Policy parse(const std::string& text);
    std::string name() const;
};

struct KrylovConfig {
    int k_dim = 1;
    int dk = 1;
    Policy policy;

    // Highest Chebyshev degree touched by the matrices.
    long long max_degree() const { return (2LL * k_dim - 2) * dk + 1; }
};

struct KrylovMatrices {
    Matrix h;
    Matrix s;
};

KrylovMatrices build_matrices(const spectrum::MomentTable& moments, int k_dim, int dk);

struct KrylovSolution {
    Matrix h_mat;
    Matrix s_mat;
    std::vector<double> overlap_eigs;  // all, descending
    std::vector<double> kept_eigs;     // descending
    std::vector<double> ritz_values;   // ascending
    double e0_norm = 0.0;
    double e0_phys = 0.0;
};

// Throws EmptySubspaceError when nothing usable survives and ContractError
// when top-m exceeds the dimension.
KrylovSolution solve_regularized(const Matrix& h, const Matrix& s, const Policy& policy,
                                 const spectrum::EnergyTransform& meta);

KrylovSolution solve(const spectrum::MomentTable& moments, const KrylovConfig& cfg,
                     const spectrum::EnergyTransform& meta);

struct Gradient {
    std::map<long long, double> g;  // Hartree per unit moment
    std::set<long long> unstable;
    int kept = 0;
};

Gradient energy_gradient(const spectrum::MomentTable& moments, const KrylovConfig& cfg,
                         const spectrum::EnergyTransform& meta, double step = 1e-6);

using Allocation = std::map<long long, std::int64_t>;

// Degrees 0 and 1 get no shots; the others share m_total in proportion to |g|
// with a floor of one shot.
Allocation allocate_shots(const std::map<long long, double>& g, std::int64_t m_total);

// Number of degrees that must be sampled for a Krylov configuration.
std::int64_t sampled_degree_count(const KrylovConfig& cfg);

spectrum::MomentTable inject_noise(const spectrum::MomentTable& moments, const Allocation& alloc,
                                   numerics::RngStream& stream);

struct TrialStats {
    std::int64_t m_total = 0;
    int n_trials = 0;
    int failed_trials = 0;
    double noiseless_energy = 0.0;  // same policy, exact moments
    double true_energy = 0.0;
    double mean_abs_err = 0.0;      // against noiseless_energy
    double rmse = 0.0;              // against true_energy
    std::vector<double> energies;   // NaN marks a failed trial
    Gradient gradient;
    Allocation allocation;
    std::uint64_t seed = 0;         // trial i uses stream (seed, i)
};

TrialStats run_trials(const spectrum::Spectrum& s, const KrylovConfig& cfg, std::int64_t m_total, int n_trials,
                      std::uint64_t seed, unsigned jobs = 1);

struct BudgetOptions {
    int n_trials = 100;
    std::uint64_t seed = 0;
    double cap = 1e12;
    unsigned jobs = 1;
};

struct BudgetResult {
    std::int64_t m_total = 0;
    std::int64_t m_guess = 0;
    double smallest_kept_eig = 0.0;
    TrialStats stats;  // at m_total
    std::vector<std::pair<std::int64_t, double>> probes;  // (M, mean_abs_err) in probe order
};

// Smallest probed M whose trials all succeed with mean error <= target_err
// (Hartree). An infinite target returns the minimal feasible M.
BudgetResult find_shot_budget(const spectrum::Spectrum& s, const KrylovConfig& cfg, double target_err,
                              const BudgetOptions& opts);

struct OverlapRow {
    int K = 0;
    int dk = 1;
    int k_dim = 1;
    double s[3] = {0.0, 0.0, 0.0};
};

struct OverlapSlope {
    int dk = 1;
    double slope[3] = {0.0, 0.0, 0.0};
};

struct OverlapReport {
    std::vector<OverlapRow> rows;
    std::vector<OverlapSlope> slopes;
};

OverlapReport overlap_analysis(const spectrum::Spectrum& s, const std::vector<int>& k_list,
                               const std::vector<int>& dk_list);

double optimal_dk(double scale, double lambda0_norm);

struct WindowOverlap {
    double value = 0.0;
    double bound = 0.0;
};

WindowOverlap window_overlap(long long k, int dk, double theta_a, double theta_b, double scale);

}  // namespace eft::qksd
