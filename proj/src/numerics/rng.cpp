#include <cmath>
#include <numbers>

#include "eft/errors.hpp"
#include "eft/numerics.hpp"

namespace eft::numerics {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

std::uint64_t mix(std::uint64_t z) {
    z += kGolden;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

}  // namespace

std::uint64_t RngStream::next_u64() {
    const std::uint64_t key = mix(seed) ^ mix(mix(stream_id) + 0x632BE59BD9B4E019ull);
    return mix(key + kGolden * (counter++));
}

double RngStream::next_uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double rng_normal(RngStream& stream, double mu, double sigma) {
    if (!(sigma >= 0.0)) throw DomainError("normal deviate needs sigma >= 0");
    // Both uniforms are always consumed so draw i sits at counters 2i, 2i+1.
    const double u1 = stream.next_uniform();
    const double u2 = stream.next_uniform();
    if (sigma == 0.0) return mu;
    return mu + sigma * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace eft::numerics
