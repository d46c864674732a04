#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "eft/matrix.hpp"

namespace eft::numerics {

// e^{-beta} I_j(beta).
double scaled_bessel_i(int j, double beta);

// e^{-beta} I_j(beta) for j = 0..max_order in one backward sweep.
std::vector<double> scaled_bessel_i_table(int max_order, double beta);

// Order beyond which the scaled values are below double resolution of the sum.
int bessel_cutoff_order(double beta);

// cos(k arccos x); x within 1e-12 of [-1, 1] is clamped.
double chebyshev_t(long long k, double x);

struct SymEigResult {
    std::vector<double> eigenvalues;  // descending
    Matrix eigenvectors;              // columns, same order
};

// Cyclic Jacobi. Eigenvectors are normalized so their first non-negligible
// component is positive.
SymEigResult sym_eig(const Matrix& a);

// Counter-based stream: draw i depends only on (seed, stream_id, i).
struct RngStream {
    std::uint64_t seed = 0;
    std::uint64_t stream_id = 0;
    std::uint64_t counter = 0;

    RngStream() = default;
    RngStream(std::uint64_t seed_, std::uint64_t stream_id_) : seed(seed_), stream_id(stream_id_) {}

    std::uint64_t next_u64();
    // Uniform on (0, 1), never exactly 0 or 1.
    double next_uniform();
};

double rng_normal(RngStream& stream, double mu, double sigma);

// Runs body(i) for i in [0, n) on up to `jobs` threads. Exceptions from the
// body are rethrown on the caller (first one wins).
void parallel_for(std::size_t n, unsigned jobs, const std::function<void(std::size_t)>& body);

}  // namespace eft::numerics
