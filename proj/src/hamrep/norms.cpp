#include <cmath>

#include "eft/errors.hpp"
#include "eft/hamrep.hpp"

namespace eft::hamrep {

NormShift pauli_norm_shift(const IntegralTensors& t) {
    const int n = t.n;
    double one_body = 0.0;
    for (int p = 0; p < n; ++p)
        for (int q = 0; q < n; ++q) {
            double v = t.h(p, q);
            for (int r = 0; r < n; ++r) v += t.at(p, q, r, r) - 0.5 * t.at(p, r, r, q);
            one_body += std::abs(v);
        }

    double same_spin = 0.0, all_pairs = 0.0;
    for (int p = 0; p < n; ++p)
        for (int q = 0; q < n; ++q)
            for (int r = 0; r < n; ++r)
                for (int s = 0; s < n; ++s) {
                    all_pairs += std::abs(t.at(p, q, r, s));
                    if (p > r && s > q) same_spin += std::abs(t.at(p, q, r, s) - t.at(p, s, r, q));
                }

    double offset = t.e_nuc;
    for (int p = 0; p < n; ++p) {
        offset += t.h(p, p);
        for (int r = 0; r < n; ++r) offset += 0.5 * t.at(p, p, r, r) - 0.25 * t.at(p, r, r, p);
    }

    NormShift out;
    out.lambda = one_body + 0.5 * same_spin + 0.25 * all_pairs;
    out.offset = offset;
    out.beta = std::abs(offset);
    return out;
}

NormShift df_norm_shift(const IntegralTensors& t, const DfFactors& f) {
    const auto f_o = one_body_spectrum(t);
    double one = 0.0, offset = t.e_nuc;
    for (double x : f_o) {
        one += std::abs(x);
        offset += x;
    }
    double two = 0.0;
    for (const auto& leaf : f.leaves) {
        if (leaf.w.size() != static_cast<std::size_t>(t.n)) throw ContractError("DF leaf size differs from orbital count");
        double abs_sum = 0.0, sum = 0.0;
        for (double w : leaf.w) {
            abs_sum += std::abs(w);
            sum += w;
        }
        two += abs_sum * abs_sum;
        offset -= 0.5 * leaf.sign * sum * sum;
    }
    NormShift out;
    out.lambda = one + 0.25 * two;
    out.offset = offset;
    out.beta = std::abs(offset);
    return out;
}

NormShift thc_norm_shift(const std::vector<double>& f_o, const ThcFactors& f, double e_nuc) {
    double one = 0.0, offset = e_nuc;
    for (double x : f_o) {
        one += std::abs(x);
        offset += x;
    }
    double core = 0.0;
    for (std::size_t i = 0; i < f.zeta.rows(); ++i)
        for (std::size_t j = 0; j < f.zeta.cols(); ++j) {
            core += std::abs(f.zeta(i, j));
            offset -= 0.5 * f.zeta(i, j);
        }
    NormShift out;
    out.lambda = one + 0.5 * core;
    out.offset = offset;
    out.beta = std::abs(offset);
    return out;
}

}  // namespace eft::hamrep
