#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace rcnn {

// Deterministic random source. std::mt19937_64's output sequence is pinned
// by the standard; the distributions here are implemented by hand because
// std::uniform_*_distribution / std::normal_distribution are not, and every
// seeded artifact of this project (datasets, weights, shuffles) must be
// reproducible byte-for-byte.
class SeededRng {
public:
    explicit SeededRng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t raw() { return gen_(); }

    // Uniform in [0, 1), 53 random bits.
    double unit() {
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }

    // Unbiased integer in [0, n).
    std::uint64_t integer(std::uint64_t n) {
        if (n == 0) return 0;
        const std::uint64_t overflow = (UINT64_MAX % n + 1) % n;  // 2^64 mod n
        const std::uint64_t limit = UINT64_MAX - overflow;
        std::uint64_t x = gen_();
        while (x > limit) x = gen_();
        return x % n;
    }

    // Standard normal via Box-Muller, spare value cached.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = unit();
        double u2 = unit();
        double r = std::sqrt(-2.0 * std::log(1.0 - u1));
        double a = 2.0 * M_PI * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    template <class T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(integer(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 gen_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace rcnn
