#include <algorithm>
#include <cmath>
#include <numbers>

#include "eft/errors.hpp"
#include "eft/spe.hpp"

namespace eft::spe {

std::set<long long> spe_degrees(const HeavisideModel& model) {
    std::set<long long> out{0};
    for (long long j = 0; j <= model.K; ++j) out.insert(2 * j + 1);
    return out;
}

double acdf_value(const HeavisideModel& model, const spectrum::MomentTable& moments, double x) {
    // 2 F_0 <T_0> + sum_j 2 F_j (e^{ijx} - e^{-ijx}) <T_j>, with F_j = -i sine_j / 4.
    double sum = 2.0 * model.f0 * moments.value(0);
    for (std::size_t j = 0; j < model.sine.size(); ++j) {
        const long long d = 2 * static_cast<long long>(j) + 1;
        sum += model.sine[j] * std::sin(static_cast<double>(d) * x) * moments.value(d);
    }
    return sum;
}

double exact_acdf(const spectrum::Spectrum& s, double x) {
    const double two_pi = 2.0 * std::numbers::pi;
    auto theta_step = [&](double y) {
        y = std::remainder(y, two_pi);  // [-pi, pi]
        return y >= 0.0 && y < std::numbers::pi ? 1.0 : 0.0;
    };
    double sum = 0.0;
    for (std::size_t r = 0; r < s.size(); ++r) {
        const double th = std::acos(std::clamp(s.values[r], -1.0, 1.0));
        sum += s.weights[r] * (theta_step(x - th) + theta_step(x + th));
    }
    return sum;
}

std::int64_t spe_shot_count(double one_norm, double eta) {
    if (!(eta > 0.0 && eta <= 1.0)) throw ContractError("eta must lie in (0, 1]");
    return static_cast<std::int64_t>(std::ceil(2.0 * one_norm * one_norm / (eta * eta) - 1e-9));
}

std::map<long long, std::int64_t> spe_allocate(const HeavisideModel& model, std::int64_t m_total) {
    const auto count = static_cast<std::int64_t>(model.f_odd.size());
    if (m_total < count + 1)
        throw ContractError("shot budget " + std::to_string(m_total) + " is below the " + std::to_string(count + 1) +
                            " required");
    double total = 0.0;
    for (const auto& f : model.f_odd) total += std::abs(f);
    std::map<long long, std::int64_t> out{{0, 0}};
    for (std::size_t j = 0; j < model.f_odd.size(); ++j) {
        const double share = total > 0.0 ? std::abs(model.f_odd[j]) * static_cast<double>(m_total) / total
                                         : static_cast<double>(m_total) / static_cast<double>(count);
        auto shots = static_cast<std::int64_t>(std::floor(share * (1.0 + 1e-12)));
        out[2 * static_cast<long long>(j) + 1] = std::max<std::int64_t>(shots, 1);
    }
    return out;
}

spectrum::MomentTable inject_spe_noise(const HeavisideModel& model, const spectrum::MomentTable& moments,
                                       double m_total, numerics::RngStream& stream) {
    if (!(m_total > 0.0)) throw ContractError("shot budget must be positive");
    double total = 0.0;
    for (const auto& f : model.f_odd) total += std::abs(f);
    spectrum::MomentTable out = moments;
    for (std::size_t j = 0; j < model.f_odd.size(); ++j) {
        const long long d = 2 * static_cast<long long>(j) + 1;
        auto it = out.entries.find(d);
        if (it == out.entries.end()) throw ContractError("moment table lacks degree " + std::to_string(d));
        const double share = m_total * std::abs(model.f_odd[j]) / total;
        const double v = it->second.value;
        if (share > 0.0) {
            it->second.value = numerics::rng_normal(stream, v, std::sqrt(std::max(0.0, 1.0 - v * v) / share));
        }
        it->second.shots = static_cast<std::int64_t>(std::llround(share));
        it->second.is_exact = false;
    }
    return out;
}

}  // namespace eft::spe
