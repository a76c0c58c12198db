// Seeded random number generation with fully specified algorithms.
//
// std::mt19937_64 is bit-reproducible across platforms, but the standard
// distributions are not (their algorithms are implementation-defined). Every
// sampler here is therefore written out explicitly, so a seed produces the
// same stream everywhere:
//   uniform(lo, hi):  lo + (hi-lo) * (next_u64() >> 11) * 2^-53
//   normal():         Box-Muller on two uniforms, cosine branch first,
//                     sine branch cached for the next call
//   gamma(k):         Marsaglia-Tsang squeeze (k >= 1); for k < 1 the
//                     boost G(k) = G(k+1) * U^{1/k}
//   dirichlet(alpha): normalized gamma draws
//   chi_square(nu):   2 * gamma(nu/2)
// This is the "named, versioned generator" contract: mt19937_64 (C++11
// spec), stream version 1.
#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

namespace ditac {

class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    // uniform on [0, 1) with 53-bit resolution
    double uniform() { return (gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // uniform integer in [0, n), rejection-free modulo is fine at these scales
    std::uint64_t uniform_index(std::uint64_t n) {
        if (n == 0) throw std::invalid_argument("uniform_index: empty range");
        return gen_() % n;
    }

    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double t = 2.0 * M_PI * u2;
        spare_ = r * std::sin(t);
        have_spare_ = true;
        return r * std::cos(t);
    }

    double normal(double mean, double sd) { return mean + sd * normal(); }

    double gamma(double shape) {
        if (!(shape > 0.0)) throw std::invalid_argument("gamma: shape must be positive");
        if (shape < 1.0) {
            const double u = uniform();
            return gamma(shape + 1.0) * std::pow(u > 0 ? u : 1e-300, 1.0 / shape);
        }
        const double d = shape - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x, v;
            do {
                x = normal();
                v = 1.0 + c * x;
            } while (v <= 0.0);
            v = v * v * v;
            const double u = uniform();
            if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
            if (u > 0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
        }
    }

    std::vector<double> dirichlet(double alpha, int k) {
        std::vector<double> w(k);
        double sum = 0.0;
        for (int i = 0; i < k; ++i) {
            w[i] = gamma(alpha);
            sum += w[i];
        }
        for (double& x : w) x /= sum;
        return w;
    }

    double chi_square(double nu) { return 2.0 * gamma(0.5 * nu); }

    // Fisher-Yates shuffle of 0..n-1
    std::vector<int> permutation(int n) {
        std::vector<int> p(n);
        for (int i = 0; i < n; ++i) p[i] = i;
        for (int i = n - 1; i > 0; --i) {
            const int j = static_cast<int>(uniform_index(static_cast<std::uint64_t>(i) + 1));
            std::swap(p[i], p[j]);
        }
        return p;
    }

private:
    std::mt19937_64 gen_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace ditac
