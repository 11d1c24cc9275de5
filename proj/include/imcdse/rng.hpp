#pragma once
#include <cstdint>
#include <cmath>
#include <random>
#include <utility>

namespace imcdse {

inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// seed for work item `index` under stream `base`
inline uint64_t mix_seed(uint64_t base, uint64_t index) {
    return splitmix64(splitmix64(base) ^ (index * 0xd1b54a32d192ed03ULL + 0x8cb92ba72f3d8dd7ULL));
}

inline uint64_t mix_seed(uint64_t base, uint64_t i, uint64_t j) {
    return mix_seed(mix_seed(base, i), j);
}

using Rng = std::mt19937_64;

// std::normal_distribution is implementation-defined; this Box-Muller keeps
// streams identical across standard libraries
class Gauss {
public:
    explicit Gauss(uint64_t seed) : eng_(seed) {}
    double operator()() {
        if (have_) { have_ = false; return spare_; }
        double u1, u2;
        do { u1 = uniform(); } while (u1 <= 0.0);
        u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        spare_ = r * std::sin(6.283185307179586 * u2);
        have_ = true;
        return r * std::cos(6.283185307179586 * u2);
    }
    double uniform() { return (eng_() >> 11) * 0x1.0p-53; }
    Rng& engine() { return eng_; }

private:
    Rng eng_;
    bool have_ = false;
    double spare_ = 0.0;
};

// two normals from a counter key, for hot loops where seeding an engine per
// call would dominate
inline std::pair<double, double> normal_pair(uint64_t key) {
    uint64_t a = splitmix64(key), b = splitmix64(key ^ 0x6a09e667f3bcc909ULL);
    double u1 = ((a >> 11) + 1) * 0x1.0p-53; // (0, 1]
    double u2 = (b >> 11) * 0x1.0p-53;
    double r = std::sqrt(-2.0 * std::log(u1));
    return {r * std::cos(6.283185307179586 * u2), r * std::sin(6.283185307179586 * u2)};
}

} // namespace imcdse
