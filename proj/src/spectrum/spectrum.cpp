#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

#include "eft/errors.hpp"
#include "eft/numerics.hpp"
#include "eft/spectrum.hpp"

namespace eft::spectrum {

double EnergyTransform::to_energy(double v) const {
    return flipped ? shift + scale * (0.5 - v) : shift + scale * v;
}

double EnergyTransform::to_value(double energy) const {
    const double u = (energy - shift) / scale;
    return flipped ? 0.5 - u : u;
}

std::size_t Spectrum::ground_index() const { return transform.flipped ? values.size() - 1 : 0; }

double Spectrum::ground_energy() const { return energy(ground_index()); }

double Spectrum::ground_weight() const { return weights[ground_index()]; }

Spectrum make_spectrum(std::vector<double> values, std::vector<double> weights, EnergyTransform transform,
                       std::string label) {
    if (values.empty()) throw ValidationError("spectrum has no eigenvalues");
    if (values.size() != weights.size()) throw ValidationError("spectrum values and weights differ in length");
    if (!(transform.scale > 0.0) || !std::isfinite(transform.scale) || !std::isfinite(transform.shift))
        throw ValidationError("spectrum scale must be positive and finite");

    double total = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!std::isfinite(values[i]) || std::abs(values[i]) > 1.0) {
            std::ostringstream msg;
            msg.precision(17);
            msg << "normalized eigenvalue " << values[i] << " lies outside [-1, 1]";
            throw ValidationError(msg.str());
        }
        if (!(weights[i] >= 0.0) || !std::isfinite(weights[i])) throw ValidationError("negative or non-finite weight");
        total += weights[i];
    }
    if (std::abs(total - 1.0) > 1e-12) throw ValidationError("weights do not sum to 1");

    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });

    Spectrum s;
    s.transform = transform;
    s.label = std::move(label);
    for (std::size_t i : order) {
        if (!s.values.empty() && values[i] - s.values.back() <= 1e-14) {
            s.weights.back() += weights[i];
            continue;
        }
        s.values.push_back(values[i]);
        s.weights.push_back(weights[i]);
    }
    return s;
}

Spectrum synth_exponential(const std::vector<double>& energies, double p0, double alpha, double shift,
                           double scale, std::string label) {
    if (energies.size() < 2) throw ValidationError("exponential synthesis needs at least two energies");
    if (!(p0 > 0.0 && p0 < 1.0)) throw ValidationError("p0 must lie in (0, 1)");
    if (!(alpha > 0.0)) throw ValidationError("alpha must be positive");
    if (!(scale > 0.0)) throw ValidationError("scale must be positive");

    std::vector<double> e = energies;
    std::sort(e.begin(), e.end());
    const std::size_t r = e.size();
    double denom = 0.0;
    for (std::size_t k = 1; k < r; ++k) denom += std::exp(-alpha * static_cast<double>(k));

    std::vector<double> values(r), weights(r);
    for (std::size_t k = 0; k < r; ++k) {
        values[k] = (e[k] - shift) / scale;
        if (std::abs(values[k]) > 1.0) {
            std::ostringstream msg;
            msg << "energy " << e[k] << " maps to " << values[k] << " outside [-1, 1]; use a larger scale";
            throw ValidationError(msg.str());
        }
        weights[k] = k == 0 ? p0 : (1.0 - p0) * std::exp(-alpha * static_cast<double>(k)) / denom;
    }
    return make_spectrum(values, weights, {shift, scale, false}, std::move(label));
}

Spectrum flip_for_spe(const Spectrum& s, double margin) {
    if (s.transform.flipped) throw ContractError("spectrum is already flipped");
    if (!(margin >= 0.0)) throw DomainError("flip margin must be non-negative");
    const double factor = 2.0 * (1.0 + margin);
    std::vector<double> values(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) values[i] = 0.5 - s.values[i] / factor;
    Spectrum out = make_spectrum(values, s.weights, {s.transform.shift, s.transform.scale * factor, true}, s.label);
    return out;
}

double chebyshev_moment(const Spectrum& s, long long k) {
    double sum = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) sum += s.weights[i] * numerics::chebyshev_t(k, s.values[i]);
    return sum;
}

double MomentTable::value(long long k) const {
    auto it = entries.find(k);
    if (it == entries.end()) throw ContractError("moment table lacks degree " + std::to_string(k));
    return it->second.value;
}

std::set<long long> MomentTable::degrees() const {
    std::set<long long> out;
    for (const auto& kv : entries) out.insert(kv.first);
    return out;
}

MomentTable moment_table(const Spectrum& s, const std::set<long long>& degrees) {
    MomentTable t;
    for (long long k : degrees) {
        if (k < 0) throw ContractError("negative Chebyshev degree requested");
        MomentEntry e;
        e.value = k == 0 ? 1.0 : chebyshev_moment(s, k);
        e.is_exact = k <= 1;
        t.entries[k] = e;
        t.max_degree = std::max(t.max_degree, k);
    }
    return t;
}

std::set<long long> krylov_degrees(int k_dim, int dk) {
    if (k_dim < 1 || dk < 1) throw ContractError("Krylov dimension and step must be positive");
    std::set<long long> out;
    for (long long m = 0; m <= 2LL * k_dim - 2; ++m) {
        const long long base = m * dk;
        out.insert(base);
        out.insert(base + 1);
        out.insert(std::llabs(base - 1));
    }
    return out;
}

double qpe_backenvelope(long long K, long long M, double p0) {
    if (K < 1 || M < 1) throw ContractError("QPE estimate needs K, M >= 1");
    if (!(p0 > 0.0 && p0 <= 1.0)) throw ContractError("QPE estimate needs p0 in (0, 1]");
    return std::numbers::pi / (static_cast<double>(K) * std::sqrt(static_cast<double>(M) * p0));
}

}  // namespace eft::spectrum
