#pragma once

#include <cmath>
#include <functional>
#include <vector>

// Shared test-side reference implementations. These are deliberately
// primitive and independent of the library's numerics so the two sides can
// disagree when one of them is wrong.
namespace testref {

// composite Simpson rule on [a,b], n even panels
inline double simpson(const std::function<double(double)> &f, double a, double b, int n) {
    if (n % 2) ++n;
    double h = (b - a) / n, s = f(a) + f(b);
    for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
    return s * h / 3.0;
}

// truncated polynomial (Cauchy) product, the reference for jet multiplication
inline std::vector<double> conv(const std::vector<double> &a, const std::vector<double> &b,
                                std::size_t K) {
    std::vector<double> c(K + 1, 0.0);
    for (std::size_t k = 0; k <= K; ++k)
        for (std::size_t i = 0; i <= k && i < a.size(); ++i)
            if (k - i < b.size()) c[k] += a[i] * b[k - i];
    return c;
}

// tiny deterministic generator for test parameter sweeps (xorshift-ish)
struct Mixer {
    unsigned long long s;
    explicit Mixer(unsigned long long seed) : s(seed) {}
    double next01() {
        s ^= s << 13;
        s ^= s >> 7;
        s ^= s << 17;
        return static_cast<double>(s >> 11) * 0x1.0p-53;
    }
    double in(double lo, double hi) { return lo + (hi - lo) * next01(); }
};

}  // namespace testref
