#pragma once
#include <complex>
#include <cstdint>
#include <random>
#include <vector>

namespace mpv::util {

// Seeded source for all random draws; one instance per check keeps reports
// reproducible regardless of check ordering.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(gen_); }

    std::complex<double> cplx(double s = 1.0) { return {uniform(-s, s), uniform(-s, s)}; }

    // Complex number with both parts on the grid k/den, |k| <= s*den.
    std::complex<double> rational_cplx(double s = 3.0, int den = 8) {
        auto pick = [&] {
            int m = static_cast<int>(s * den);
            return static_cast<double>(std::uniform_int_distribution<int>(-m, m)(gen_)) / den;
        };
        double re = pick();
        return {re, pick()};
    }

    std::uint64_t next() { return gen_(); }

private:
    std::mt19937_64 gen_;
};

// Radical-inverse (Halton) sequence value for index i >= 1 in the given base.
inline double halton(unsigned i, unsigned base) {
    double f = 1.0, r = 0.0;
    while (i > 0) {
        f /= base;
        r += f * (i % base);
        i /= base;
    }
    return r;
}

// Points of the 2-d Halton sequence (bases 2, 3) mapped to the box
// [-half, half]^2 + center.
inline std::vector<std::complex<double>> halton_points(int n, double half = 2.0, std::complex<double> center = 0.0,
                                                       unsigned start = 1) {
    std::vector<std::complex<double>> out;
    for (unsigned i = start; static_cast<int>(out.size()) < n; ++i)
        out.emplace_back(center + std::complex<double>((2.0 * halton(i, 2) - 1.0) * half, (2.0 * halton(i, 3) - 1.0) * half));
    return out;
}

}  // namespace mpv::util
