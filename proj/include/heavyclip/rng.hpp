#pragma once

#include <cmath>
#include <cstdint>

namespace heavyclip {

namespace detail {
// splitmix64 finalizer
inline std::uint64_t mix64(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xbf58476d1ce4e5b9ULL;
    z ^= z >> 27;
    z *= 0x94d049bb133111ebULL;
    z ^= z >> 31;
    return z;
}
}  // namespace detail

// Counter-based splittable random stream. A draw is a pure function of
// (seed, stream_id, counter), so trials are reproducible independent of
// execution order and thread count.
class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint64_t stream_id)
        : key_(detail::mix64(detail::mix64(seed + 0x9e3779b97f4a7c15ULL) ^
                             detail::mix64(stream_id + 0x6a09e667f3bcc909ULL))) {}

    std::uint64_t next_u64() {
        std::uint64_t z = key_ + (counter_++) * 0x9e3779b97f4a7c15ULL;
        return detail::mix64(z);
    }

    // uniform on (0,1), never exactly 0 or 1
    double uniform01() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    // standard normal via Box-Muller, second draw cached
    double gaussian() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform01();
        double u2 = uniform01();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

    // Pareto with shape alpha and minimum 1: P[r > y] = y^{-alpha}, y >= 1
    double pareto(double alpha) { return std::pow(uniform01(), -1.0 / alpha); }

    // Deterministic child stream, for per-batch parallel work.
    RngStream substream(std::uint64_t child) const {
        RngStream s(0, 0);
        s.key_ = detail::mix64(key_ ^ detail::mix64(child + 0xd1b54a32d192ed03ULL));
        return s;
    }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace heavyclip
