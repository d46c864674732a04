#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <map>
#include <numbers>
#include <set>
#include <vector>

#include "eft/numerics.hpp"
#include "eft/spectrum.hpp"

namespace eft::spe {

// Truncated scaled-erf step H(x) = F_0 + sum_j F_{2j+1} (e^{i(2j+1)x} - e^{-i(2j+1)x}).
struct HeavisideModel {
    double beta_erf = 0.0;
    int K = 0;
    double f0 = 0.5;
    std::vector<std::complex<double>> f_odd;  // F_{2j+1}, j = 0..K
    std::vector<double> sine;                 // H(x) = 1/2 + (1/2) sum_j sine[j] sin((2j+1)x)
    double bound_new = 0.0;
    double bound_old = 0.0;
    double one_norm = 0.0;                    // |F_0| + sum_j |F_{2j+1}|

    double heaviside(double x) const;
    long long max_degree() const { return 2LL * K + 1; }
};

// sqrt(2 beta / pi) / K * 2 sum_{j>K} e^{-beta} I_j(beta)
double truncation_bound_new(double beta_erf, int K);

// Legacy bound at a fixed free parameter t >= beta_erf.
double truncation_bound_old(double beta_erf, int K, double t);
// Legacy bound minimized over t >= beta_erf.
double truncation_bound_old(double beta_erf, int K);

HeavisideModel fourier_coefficients(double beta_erf, int K);

enum class BoundKind { Tight, Legacy };

struct Parameters {
    double beta_erf = 0.0;
    int K = 0;
};

// beta_erf: smallest with erfc(sqrt(2 beta) sin(delta/2)) <= epsilon/2;
// K: smallest with truncation bound <= epsilon/2.
Parameters select_parameters(double delta, double epsilon, BoundKind kind = BoundKind::Tight);

// {0, 1, 3, ..., 2K+1}
std::set<long long> spe_degrees(const HeavisideModel& model);

// Real part of 2 sum_j F_j e^{ijx} <T_j> over the two-sided odd index set,
// i.e. the sum of the approximate CDFs of +arccos and -arccos. Range ~[0, 2].
double acdf_value(const HeavisideModel& model, const spectrum::MomentTable& moments, double x);

// Exact counterpart: sum_r p_r [Theta(x - theta_r) + Theta(x + theta_r)], with
// Theta 2pi-periodic and Theta(0) = 1.
double exact_acdf(const spectrum::Spectrum& s, double x);

std::int64_t spe_shot_count(double one_norm, double eta);

// Degree 0 gets 0; odd degrees share m_total in proportion to |F_j|.
std::map<long long, std::int64_t> spe_allocate(const HeavisideModel& model, std::int64_t m_total);

// Importance-sampled noise for a run: odd degree j gets the expected shot share
// m_total |F_j| / sum |F| (fractional when m_total is below the degree count),
// variance (1 - <T_j>^2) / share. Degree 0 stays exact.
spectrum::MomentTable inject_spe_noise(const HeavisideModel& model, const spectrum::MomentTable& moments,
                                       double m_total, numerics::RngStream& stream);

enum class Orientation { FirstJump, LastJump };

struct SearchConfig {
    double eta = 0.5;
    double delta = 1e-3;
    double level = 0.375;
    Orientation orientation = Orientation::FirstJump;
    double x_left = -std::numbers::pi;
    double x_right = 0.0;
    bool redraw_per_query = false;

    // First jump: tau = 3 eta / 4 on (-pi, 0). Last jump (flipped spectra):
    // tau = 1 - 3 eta / 4 on [-(pi - delta)/2, (pi - delta)/2].
    static SearchConfig preset(Orientation o, double eta, double delta);
};

struct SearchResult {
    double x_star = 0.0;
    int queries = 0;
};

// Locates the upward crossing of cfg.level. query(x) returns the ACDF estimate.
SearchResult binary_search(const std::function<double(double)>& query, const SearchConfig& cfg);
SearchResult binary_search(const HeavisideModel& model, const spectrum::MomentTable& moments,
                           const SearchConfig& cfg);

bool certify_spe_range(const spectrum::Spectrum& s, double delta);

struct Inversion {
    double energy = 0.0;
    double amplification = 0.0;  // |sin x_star|
};

Inversion invert_energy(double x_star, const spectrum::EnergyTransform& transform);

struct SpeOptions {
    double p_success = 0.99;
    std::uint64_t seed = 0;
    double epsilon = 0.0;          // 0 selects eta / 8
    double flip_margin = 1e-3;
    bool redraw_per_query = false;
    bool amplification_aware = false;
};

struct SpeReport {
    int K = 0;
    std::int64_t M = 0;
    double beta_erf = 0.0;
    double eta = 0.0;
    double epsilon = 0.0;
    double delta_radians = 0.0;
    double one_norm = 0.0;
    double x_star = 0.0;
    double e0_hartree = 0.0;
    double true_energy = 0.0;
    double error = 0.0;
    double amplification_factor = 0.0;
    int queries = 0;
    bool success = false;
};

SpeReport spe_run(const spectrum::Spectrum& s, double delta_target_hartree, const SpeOptions& opts);

// The (K, M) spe_run would use for a target, without running the search.
struct SpePlan {
    Parameters params;
    double eta = 0.0;
    double epsilon = 0.0;
    double delta_radians = 0.0;
    double one_norm = 0.0;
    std::int64_t M = 0;
};

SpePlan plan_spe(const spectrum::Spectrum& s, double delta_target_hartree, const SpeOptions& opts);

}  // namespace eft::spe
