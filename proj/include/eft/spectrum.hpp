#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace eft::spectrum {

// Affine map from a normalized value v to a physical energy.
//   plain:   E = shift + scale * v
//   flipped: E = shift + scale * (1/2 - v)
struct EnergyTransform {
    double shift = 0.0;
    double scale = 1.0;
    bool flipped = false;

    double to_energy(double v) const;
    double to_value(double energy) const;
};

struct Spectrum {
    std::vector<double> values;   // ascending, each in [-1, 1]
    std::vector<double> weights;  // same length, sum 1
    EnergyTransform transform;
    std::string label;

    std::size_t size() const { return values.size(); }
    // Index of the lowest physical energy (the last value once flipped).
    std::size_t ground_index() const;
    double ground_energy() const;
    double ground_weight() const;
    double energy(std::size_t i) const { return transform.to_energy(values[i]); }
};

// Sorts, merges coincident values (within 1e-14) and checks every invariant.
// Weights must already sum to 1 within 1e-12.
Spectrum make_spectrum(std::vector<double> values, std::vector<double> weights, EnergyTransform transform,
                       std::string label = {});

// Physical energies (Hartree) with R >= 2; the lowest gets p0 and the rest an
// exponentially decaying share.
Spectrum synth_exponential(const std::vector<double>& energies, double p0, double alpha, double shift,
                           double scale, std::string label = {});

// Rescales into [-1/2, 1/2] with factor 2(1 + margin) and maps v -> 1/2 - v.
Spectrum flip_for_spe(const Spectrum& s, double margin = 1e-3);

double chebyshev_moment(const Spectrum& s, long long k);

struct MomentEntry {
    double value = 0.0;
    std::int64_t shots = 0;  // 0 for exact entries
    bool is_exact = true;
};

struct MomentTable {
    std::map<long long, MomentEntry> entries;
    long long max_degree = 0;

    bool contains(long long k) const { return entries.count(k) != 0; }
    // Throws a contract error naming the missing degree.
    double value(long long k) const;
    std::set<long long> degrees() const;
};

// Degrees 0 and 1 are flagged exact; every entry here is noiseless.
MomentTable moment_table(const Spectrum& s, const std::set<long long>& degrees);

// All degrees entering the Krylov matrices for (k_dim, dk).
std::set<long long> krylov_degrees(int k_dim, int dk);

double qpe_backenvelope(long long K, long long M, double p0);

Spectrum load_spectrum(const std::string& path);
Spectrum parse_spectrum(std::istream& in, const std::string& source = "<stream>");
// Writes normalized values with the transform header; flipped spectra are
// written in their unflipped form.
void write_spectrum(std::ostream& out, const Spectrum& s);

void write_moment_csv(std::ostream& out, const MomentTable& t);
MomentTable read_moment_csv(std::istream& in);

}  // namespace eft::spectrum
