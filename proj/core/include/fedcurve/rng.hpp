#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace fedcurve {

// Derives an independent stream seed from a run seed, a purpose tag and up to
// two integer qualifiers (client id, epoch, ...). Every source of randomness
// in a run pulls from its own substream so results do not depend on event
// interleaving.
std::uint64_t substream(std::uint64_t seed, std::string_view tag,
                        std::uint64_t a = 0, std::uint64_t b = 0);

// Seeded generator with distribution code pinned in this library, so a given
// (seed, call sequence) always yields the same values regardless of the
// standard library's implementation-defined distributions.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    // uniform in [0, 1), 53-bit resolution
    double uniform() {
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }

    // uniform integer in [0, n), n >= 1
    std::uint64_t bounded(std::uint64_t n);

    // standard normal via Box-Muller (one spare cached)
    double normal();

    // Gamma(alpha, 1) via Marsaglia-Tsang, alpha > 0
    double gamma(double alpha);

    // Dirichlet(alpha, ..., alpha) of length n
    std::vector<double> dirichlet(double alpha, std::size_t n);

    // in-place Fisher-Yates
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(bounded(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 gen_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace fedcurve
