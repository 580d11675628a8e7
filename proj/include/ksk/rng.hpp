#ifndef KSK_RNG_HPP
#define KSK_RNG_HPP

#include <cmath>
#include <cstdint>

namespace ksk {

// Counter-based random stream.  Every draw is a pure function of
// (seed, id, lane), so results do not depend on how work is chunked
// across threads and a trajectory can be replayed exactly.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed) : seed_(seed) {}

    std::uint64_t seed() const { return seed_; }

    // uniform in (0, 1]
    double uniform(std::uint64_t id, std::uint64_t lane = 0) const {
        const std::uint64_t bits = hash(id, lane);
        return static_cast<double>((bits >> 11) + 1) * 0x1.0p-53;
    }

    // standard normal via Box-Muller on two decorrelated lanes
    double normal(std::uint64_t id, std::uint64_t lane = 0) const {
        const double u1 = uniform(id, 2 * lane);
        const double u2 = uniform(id, 2 * lane + 1);
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
    }

private:
    static std::uint64_t splitmix(std::uint64_t x) {
        x += 0x9e3779b97f4a7c15ULL;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
        return x ^ (x >> 31);
    }

    std::uint64_t hash(std::uint64_t id, std::uint64_t lane) const {
        std::uint64_t h = splitmix(seed_ ^ 0x6a09e667f3bcc909ULL);
        h = splitmix(h ^ id);
        h = splitmix(h ^ (lane + 0x243f6a8885a308d3ULL));
        return h;
    }

    std::uint64_t seed_;
};

} // namespace ksk

#endif
