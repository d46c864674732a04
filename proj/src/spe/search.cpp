#include <cmath>
#include <numbers>
#include <string>

#include "eft/errors.hpp"
#include "eft/spe.hpp"

namespace eft::spe {

SearchConfig SearchConfig::preset(Orientation o, double eta, double delta) {
    SearchConfig c;
    c.eta = eta;
    c.delta = delta;
    c.orientation = o;
    if (o == Orientation::FirstJump) {
        c.level = 0.75 * eta;
        c.x_left = -std::numbers::pi;
        c.x_right = 0.0;
    } else {
        c.level = 1.0 - 0.75 * eta;
        c.x_right = 0.5 * (std::numbers::pi - delta);
        c.x_left = -c.x_right;
    }
    return c;
}

SearchResult binary_search(const std::function<double(double)>& query, const SearchConfig& cfg) {
    if (!(cfg.delta > 0.0)) throw ContractError("search resolution must be positive");
    if (!(cfg.x_left < cfg.x_right)) throw ContractError("search interval must have x_left < x_right");
    if (!(cfg.eta > 0.0 && cfg.eta <= 1.0)) throw ContractError("eta must lie in (0, 1]");

    double left = cfg.x_left, right = cfg.x_right;
    SearchResult r;
    while (right - left > 2.0 * cfg.delta) {
        if (++r.queries > 200) throw SearchError("binary search exceeded 200 queries");
        const double mid = 0.5 * (left + right);
        if (query(mid) > cfg.level)
            right = mid + 2.0 * cfg.delta / 3.0;
        else
            left = mid - 2.0 * cfg.delta / 3.0;
    }
    r.x_star = 0.5 * (left + right);
    return r;
}

SearchResult binary_search(const HeavisideModel& model, const spectrum::MomentTable& moments,
                           const SearchConfig& cfg) {
    return binary_search([&](double x) { return acdf_value(model, moments, x); }, cfg);
}

bool certify_spe_range(const spectrum::Spectrum& s, double delta) {
    if (s.size() == 0) return false;
    return s.values.front() >= std::sin(0.5 * delta) && s.values.back() <= 1.0;
}

Inversion invert_energy(double x_star, const spectrum::EnergyTransform& transform) {
    return {transform.to_energy(std::cos(std::abs(x_star))), std::abs(std::sin(x_star))};
}

namespace {

spectrum::Spectrum flipped_view(const spectrum::Spectrum& s, const SpeOptions& opts) {
    return s.transform.flipped ? s : spectrum::flip_for_spe(s, opts.flip_margin);
}

SpePlan plan_for(const spectrum::Spectrum& sf, double delta_x, const SpeOptions& opts) {
    if (!(delta_x > 0.0 && delta_x < std::numbers::pi / 4))
        throw ContractError("target maps to delta = " + std::to_string(delta_x) + " rad, outside (0, pi/4)");
    if (!certify_spe_range(sf, delta_x))
        throw DomainError("spectral range condition fails: flipped values must lie in [sin(delta/2), 1]");
    if (!(opts.p_success > 0.0 && opts.p_success < 1.0)) throw ContractError("p_success must lie in (0, 1)");
    SpePlan p;
    p.delta_radians = delta_x;
    p.eta = 0.5 * sf.ground_weight();
    p.epsilon = opts.epsilon > 0.0 ? opts.epsilon : p.eta / 8.0;
    p.params = select_parameters(delta_x, p.epsilon);
    p.one_norm = fourier_coefficients(p.params.beta_erf, p.params.K).one_norm;
    const double log_factor = std::max(1.0, std::ceil(std::log(1.0 / (1.0 - opts.p_success))));
    p.M = spe_shot_count(p.one_norm, p.eta) * static_cast<std::int64_t>(log_factor);
    return p;
}

SpeReport run_once(const spectrum::Spectrum& sf, const SpePlan& plan, const SpeOptions& opts,
                   std::uint64_t stream_base) {
    auto model = fourier_coefficients(plan.params.beta_erf, plan.params.K);
    auto exact = spectrum::moment_table(sf, spe_degrees(model));
    for (auto& [d, e] : exact.entries) e.is_exact = d == 0;

    auto cfg = SearchConfig::preset(Orientation::LastJump, plan.eta, plan.delta_radians);
    cfg.redraw_per_query = opts.redraw_per_query;
    SearchResult res;
    if (!cfg.redraw_per_query) {
        numerics::RngStream stream(opts.seed, stream_base);
        auto noisy = inject_spe_noise(model, exact, static_cast<double>(plan.M), stream);
        res = binary_search(model, noisy, cfg);
    } else {
        std::uint64_t q = 0;
        res = binary_search(
            [&](double x) {
                numerics::RngStream stream(opts.seed, stream_base + 1 + q++);
                return acdf_value(model, inject_spe_noise(model, exact, static_cast<double>(plan.M), stream), x);
            },
            cfg);
    }

    SpeReport r;
    r.K = plan.params.K;
    r.M = plan.M;
    r.beta_erf = plan.params.beta_erf;
    r.eta = plan.eta;
    r.epsilon = plan.epsilon;
    r.delta_radians = plan.delta_radians;
    r.one_norm = plan.one_norm;
    r.x_star = res.x_star;
    r.queries = res.queries;
    auto inv = invert_energy(res.x_star, sf.transform);
    r.e0_hartree = inv.energy;
    r.amplification_factor = inv.amplification;
    r.true_energy = sf.ground_energy();
    r.error = std::abs(r.e0_hartree - r.true_energy);
    return r;
}

}  // namespace

SpePlan plan_spe(const spectrum::Spectrum& s, double delta_target_hartree, const SpeOptions& opts) {
    if (!(delta_target_hartree > 0.0)) throw ContractError("target precision must be positive");
    auto sf = flipped_view(s, opts);
    return plan_for(sf, delta_target_hartree / std::abs(sf.transform.scale), opts);
}

SpeReport spe_run(const spectrum::Spectrum& s, double delta_target_hartree, const SpeOptions& opts) {
    if (!(delta_target_hartree > 0.0)) throw ContractError("target precision must be positive");
    auto sf = flipped_view(s, opts);
    const double scale = std::abs(sf.transform.scale);
    auto plan = plan_for(sf, delta_target_hartree / scale, opts);
    auto report = run_once(sf, plan, opts, 0);
    if (opts.amplification_aware) {
        // Widen delta by the local slope of cos at the first estimate.
        const double slope = std::max(report.amplification_factor, std::sin(plan.delta_radians));
        const double wider = std::min(delta_target_hartree / (scale * slope), 0.99 * std::numbers::pi / 4);
        if (wider > plan.delta_radians && certify_spe_range(sf, wider)) report = run_once(sf, plan_for(sf, wider, opts), opts, 1u << 20);
    }
    report.success = report.error <= delta_target_hartree;
    return report;
}

}  // namespace eft::spe
