#pragma once

// Deterministic random number generation for parallel Monte Carlo.
//
// Every replicate owns an independent substream derived from
// (master seed, replicate index) by hashing, so results do not depend on
// how replicates are scheduled across threads. The generator is
// xoshiro256++ seeded through splitmix64, producing identical streams on
// any platform with IEEE doubles.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace hiresim {

struct RngSeed {
    std::uint64_t master = 0;
    std::uint64_t replicate = 0;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
}

} // namespace detail

class Rng {
  public:
    explicit Rng(RngSeed seed) : seed_(seed) {
        // hash (master, replicate) into the splitmix stream that fills the state
        std::uint64_t s = seed.master;
        s ^= detail::splitmix64(s) + 0x632be59bd9b4e019ULL * (seed.replicate + 1);
        for (auto& w : state_) w = detail::splitmix64(s);
        if ((state_[0] | state_[1] | state_[2] | state_[3]) == 0) state_[3] = 1;
    }
    explicit Rng(std::uint64_t master, std::uint64_t replicate = 0)
        : Rng(RngSeed{master, replicate}) {}

    RngSeed seed() const { return seed_; }

    std::uint64_t next_u64() {
        using detail::rotl;
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // uniform on the open interval (0,1); never returns 0 or 1, so logs are safe
    double uniform() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    // unit-rate exponential
    double exponential() { return -std::log(uniform()); }

    // geometric on {1,2,...} with success probability p: number of trials
    // until the first success. For p below 1e-12 the exponential
    // approximation ceil(E/p) is used; its relative bias is O(p).
    double geometric(double p) {
        if (!(p > 0.0)) {
            throw std::domain_error("geometric: success probability underflowed to 0");
        }
        if (p >= 1.0) {
            uniform(); // keep the stream advancing at the same rate
            return 1.0;
        }
        const double u = uniform();
        if (p < 1e-12) {
            return std::ceil(-std::log(u) / p);
        }
        return 1.0 + std::floor(std::log(u) / std::log1p(-p));
    }

  private:
    RngSeed seed_;
    std::uint64_t state_[4];
};

} // namespace hiresim
