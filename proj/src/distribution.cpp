#include "resetq/distribution.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <mutex>

#include "resetq/errors.hpp"
#include "resetq/special.hpp"

namespace resetq {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

[[noreturn]] void bad(const std::string &msg) { throw ValidationError(msg); }

double checked_positive(double v, const char *what) {
    if (!(v > 0.0) || !std::isfinite(v)) bad(std::string(what) + " must be positive and finite");
    return v;
}

}  // namespace

void validate(const DistributionSpec &d) {
    std::visit(
        [](const auto &f) {
            using T = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<T, Exponential>) {
                checked_positive(f.rate, "exponential rate");
            } else if constexpr (std::is_same_v<T, Gamma>) {
                checked_positive(f.shape, "gamma shape");
                checked_positive(f.scale, "gamma scale");
            } else if constexpr (std::is_same_v<T, InverseGaussian>) {
                checked_positive(f.mean, "inverse_gaussian mean");
                checked_positive(f.shape, "inverse_gaussian shape");
            } else if constexpr (std::is_same_v<T, LogNormal>) {
                if (!std::isfinite(f.mu)) bad("lognormal mu must be finite");
                checked_positive(f.sigma, "lognormal sigma");
            } else {
                if (!(f.value >= 0.0) || !std::isfinite(f.value))
                    bad("deterministic value must be >= 0 and finite");
            }
        },
        d);
}

std::string family_name(const DistributionSpec &d) {
    switch (d.index()) {
        case 0: return "exponential";
        case 1: return "gamma";
        case 2: return "inverse_gaussian";
        case 3: return "lognormal";
        default: return "deterministic";
    }
}

bool is_atom(const DistributionSpec &d) { return std::holds_alternative<Deterministic>(d); }

double support_lower(const DistributionSpec &d) {
    if (const auto *p = std::get_if<Deterministic>(&d)) return p->value;
    return 0.0;
}

double density(const DistributionSpec &d, double t) {
    if (!std::isfinite(t)) bad("density: t must be finite");
    if (t < 0.0) bad("density: t must be >= 0");
    return std::visit(
        [t](const auto &f) -> double {
            using T = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<T, Exponential>) {
                return f.rate * std::exp(-f.rate * t);
            } else if constexpr (std::is_same_v<T, Gamma>) {
                if (t == 0.0) {
                    if (f.shape < 1.0) return kInf;  // integrable divergence
                    if (f.shape == 1.0) return 1.0 / f.scale;
                    return 0.0;
                }
                return std::exp((f.shape - 1.0) * std::log(t) - t / f.scale -
                                std::lgamma(f.shape) - f.shape * std::log(f.scale));
            } else if constexpr (std::is_same_v<T, InverseGaussian>) {
                if (t == 0.0) return 0.0;
                double dev = t - f.mean;
                return std::exp(0.5 * (std::log(f.shape) - std::log(2.0 * M_PI) -
                                       3.0 * std::log(t)) -
                                f.shape * dev * dev / (2.0 * f.mean * f.mean * t));
            } else if constexpr (std::is_same_v<T, LogNormal>) {
                if (t == 0.0) return 0.0;
                double z = (std::log(t) - f.mu) / f.sigma;
                return std::exp(-0.5 * z * z) / (t * f.sigma * std::sqrt(2.0 * M_PI));
            } else {
                if (t == f.value)
                    throw ValidationError(
                        "density: Deterministic has a point mass, not a density, at its atom");
                return 0.0;
            }
        },
        d);
}

double cdf(const DistributionSpec &d, double t) {
    if (!std::isfinite(t)) bad("cdf: t must be finite");
    if (t < 0.0) return 0.0;
    return std::visit(
        [t](const auto &f) -> double {
            using T = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<T, Exponential>) {
                return -std::expm1(-f.rate * t);
            } else if constexpr (std::is_same_v<T, Gamma>) {
                return regularized_gamma_p(f.shape, t / f.scale);
            } else if constexpr (std::is_same_v<T, InverseGaussian>) {
                if (t == 0.0) return 0.0;
                double sq = std::sqrt(f.shape / t);
                double z1 = sq * (t / f.mean - 1.0);
                double z2 = -sq * (t / f.mean + 1.0);
                // second term is exp(huge)*Phi(very negative); combine in logs
                double lt2 = 2.0 * f.shape / f.mean + log_norm_cdf(z2);
                return std::min(1.0, norm_cdf(z1) + std::exp(lt2));
            } else if constexpr (std::is_same_v<T, LogNormal>) {
                if (t == 0.0) return 0.0;
                return norm_cdf((std::log(t) - f.mu) / f.sigma);
            } else {
                return t >= f.value ? 1.0 : 0.0;
            }
        },
        d);
}

double quantile(const DistributionSpec &d, double p) {
    if (!(p > 0.0 && p < 1.0)) bad("quantile: p must be in (0,1)");
    return std::visit(
        [&d, p](const auto &f) -> double {
            using T = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<T, Exponential>) {
                return -std::log1p(-p) / f.rate;
            } else if constexpr (std::is_same_v<T, LogNormal>) {
                return std::exp(f.mu + f.sigma * norm_quantile(p));
            } else if constexpr (std::is_same_v<T, Deterministic>) {
                return f.value;
            } else {
                // Gamma / InverseGaussian: bisection on the closed-form CDF
                double hi = 2.0 * mean(d);
                int guard = 0;
                while (cdf(d, hi) < p) {
                    hi *= 2.0;
                    if (++guard > 2000) bad("quantile: failed to bracket");
                }
                double lo = 0.0;
                for (int i = 0; i < 200 && (hi - lo) > 1e-15 * hi; ++i) {
                    double mid = 0.5 * (lo + hi);
                    (cdf(d, mid) < p ? lo : hi) = mid;
                }
                return 0.5 * (lo + hi);
            }
        },
        d);
}

double moment(const DistributionSpec &d, int k) {
    if (k < 1 || k > 4) bad("moment: k must be in 1..4");
    return std::visit(
        [k](const auto &f) -> double {
            using T = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<T, Exponential>) {
                double m = 1.0;
                for (int i = 1; i <= k; ++i) m *= static_cast<double>(i) / f.rate;
                return m;
            } else if constexpr (std::is_same_v<T, Gamma>) {
                double m = 1.0;
                for (int i = 0; i < k; ++i) m *= (f.shape + i) * f.scale;
                return m;
            } else if constexpr (std::is_same_v<T, InverseGaussian>) {
                // Wald raw moments in powers of phi = mean/shape
                double phi = f.mean / f.shape, a = f.mean;
                switch (k) {
                    case 1: return a;
                    case 2: return a * a * (1.0 + phi);
                    case 3: return a * a * a * (1.0 + 3.0 * phi + 3.0 * phi * phi);
                    default:
                        return a * a * a * a *
                               (1.0 + 6.0 * phi + 15.0 * phi * phi + 15.0 * phi * phi * phi);
                }
            } else if constexpr (std::is_same_v<T, LogNormal>) {
                double kk = static_cast<double>(k);
                return std::exp(kk * f.mu + 0.5 * kk * kk * f.sigma * f.sigma);
            } else {
                return std::pow(f.value, k);
            }
        },
        d);
}

double mean(const DistributionSpec &d) { return moment(d, 1); }

double variance(const DistributionSpec &d) {
    double m1 = moment(d, 1);
    return moment(d, 2) - m1 * m1;
}

// ---------------------------------------------------------------------------
// Laplace transforms

namespace {

// Gauss-Hermite nodes/weights for weight e^{-x^2} (largest root first),
// generated by Newton iteration on the orthonormal recurrence and cached.
struct GhTable {
    std::vector<double> x, w;
};

// Orthonormal Hermite function pair (h_n, h_{n-1}) at z with a shared power
// of two factored out, so evaluations outside the root cluster (which grow
// like e^{z^2/2}) cannot overflow.
struct HermiteEval {
    double hn, hn1;  // mantissa parts sharing the exponent below
    int exp2;
};

HermiteEval hermite_scaled(int n, double z) {
    const double pim4 = 0.7511255444649425;  // pi^{-1/4}
    double p1 = pim4, p2 = 0.0;
    int e = 0;
    for (int j = 0; j < n; ++j) {
        double p3 = p2;
        p2 = p1;
        p1 = z * std::sqrt(2.0 / (j + 1.0)) * p2 -
             std::sqrt(static_cast<double>(j) / (j + 1.0)) * p3;
        if (std::fabs(p1) > 0x1p500) {
            p1 *= 0x1p-500;
            p2 *= 0x1p-500;
            e += 500;
        }
    }
    return {p1, p2, e};
}

const GhTable &gh_table(int n) {
    static std::map<int, GhTable> cache;
    static std::mutex mu;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;
    GhTable t;
    t.x.resize(n);
    t.w.resize(n);
    int m = (n + 1) / 2;
    // sign of h_n on (x_i, x_{i-1}) alternates starting from + above the
    // largest root, which gives a guaranteed bracket for every root
    auto sign_at = [&](double z) { return hermite_scaled(n, z).hn >= 0.0 ? 1 : -1; };
    double edge = std::sqrt(2.0 * n + 1.0) -
                  1.85575 * std::pow(2.0 * n + 1.0, -1.0 / 6.0);
    double prev_root = 0.0;
    for (int i = 0; i < m; ++i) {
        int want = (i % 2 == 0) ? 1 : -1;  // sign just above root i
        // local half wavelength of the oscillation, the expected root spacing
        double anchor = (i == 0) ? edge : prev_root;
        double spacing =
            M_PI / std::sqrt(std::max(2.0 * n + 1.0 - anchor * anchor, 4.0));
        double hi, lo;
        if (i == 0) {
            hi = edge + 0.5 * spacing;
            for (int k = 0; sign_at(hi) != want; ++k) {
                if (k > 60) throw NonConvergent("Gauss-Hermite root bracket failed");
                hi += 0.5 * spacing;
            }
        } else {
            hi = prev_root - 0.25 * spacing;
            for (int k = 0; sign_at(hi) != want; ++k) {
                if (k > 60) throw NonConvergent("Gauss-Hermite root bracket failed");
                hi = prev_root - 0.5 * (prev_root - hi);
            }
        }
        lo = hi - 0.5 * spacing;
        for (int k = 0; sign_at(lo) == want; ++k) {
            if (k > 60) throw NonConvergent("Gauss-Hermite root bracket failed");
            lo -= 0.25 * spacing;  // small steps cannot hop an entire interval
        }
        // bracketed Newton with bisection fallback
        double z = 0.5 * (lo + hi);
        HermiteEval h = hermite_scaled(n, z);
        for (int its = 0; its < 120; ++its) {
            if (h.hn == 0.0) break;
            if ((h.hn >= 0.0 ? 1 : -1) == want)
                hi = z;
            else
                lo = z;
            double pp = std::sqrt(2.0 * n) * h.hn1;
            double step = h.hn / pp;
            double znew = z - step;
            if (!(znew > lo && znew < hi)) znew = 0.5 * (lo + hi);
            double moved = std::fabs(znew - z);
            z = znew;
            h = hermite_scaled(n, z);
            if (moved < 1e-15 * (1.0 + std::fabs(z)) ||
                hi - lo < 1e-15 * (1.0 + std::fabs(z)))
                break;
        }
        double pp_mant = std::sqrt(2.0 * n) * h.hn1;
        // w = 2/pp^2 with the tracked exponent restored; extreme-edge weights
        // underflow to zero harmlessly for very large tables
        double w = std::ldexp(2.0 / (pp_mant * pp_mant), -2 * h.exp2);
        t.x[i] = z;
        t.x[n - 1 - i] = -z;
        t.w[i] = w;
        t.w[n - 1 - i] = w;
        prev_root = z;
    }
    return cache.emplace(n, std::move(t)).first->second;
}

bool laplace_admissible(const DistributionSpec &d, double s) {
    return std::visit(
        [s](const auto &f) -> bool {
            using T = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<T, Exponential>) return s > -f.rate;
            else if constexpr (std::is_same_v<T, Gamma>) return s > -1.0 / f.scale;
            else if constexpr (std::is_same_v<T, InverseGaussian>)
                return s >= -f.shape / (2.0 * f.mean * f.mean);
            else if constexpr (std::is_same_v<T, LogNormal>) return s >= 0.0;
            else return true;
        },
        d);
}

[[noreturn]] void throw_divergent(const DistributionSpec &d, double s) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "E[e^{-sT}] diverges for %s at s=%.17g",
                  family_name(d).c_str(), s);
    throw DivergentTransform(buf);
}

// Evaluate a lognormal expectation (1/sqrt(pi)) sum_i w_i g(t_i) with
// t_i = exp(mu + sqrt(2) sigma x_i), doubling nodes until two successive
// estimates agree to 1e-8 relative.
template <class PerNode>
Jet gh_lognormal_jet(const LogNormal &f, std::size_t K, const PerNode &per_node, double anchor) {
    const double inv_sqrt_pi = 1.0 / std::sqrt(M_PI);
    Jet prev;
    bool have_prev = false;
    for (int n = 200; n <= 3200; n *= 2) {
        const GhTable &t = gh_table(n);
        Jet acc(anchor, K);
        for (int i = 0; i < n; ++i) {
            double ti = std::exp(f.mu + std::sqrt(2.0) * f.sigma * t.x[i]);
            per_node(acc, t.w[i], ti);
        }
        acc *= inv_sqrt_pi;
        if (have_prev) {
            double diff = 0.0, scale = 0.0;
            for (std::size_t k = 0; k <= K; ++k) {
                diff = std::max(diff, std::fabs(acc[k] - prev[k]));
                scale = std::max(scale, std::fabs(acc[k]));
            }
            if (diff <= 1e-8 * std::max(scale, 1e-300)) return acc;
        }
        prev = acc;
        have_prev = true;
    }
    throw NonConvergent("lognormal transform quadrature did not stabilize at 3200 nodes");
}

}  // namespace

double laplace_domain_min(const DistributionSpec &d) {
    return std::visit(
        [](const auto &f) -> double {
            using T = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<T, Exponential>) return -f.rate;
            else if constexpr (std::is_same_v<T, Gamma>) return -1.0 / f.scale;
            else if constexpr (std::is_same_v<T, InverseGaussian>)
                return -f.shape / (2.0 * f.mean * f.mean);
            else if constexpr (std::is_same_v<T, LogNormal>) return 0.0;
            else return -kInf;
        },
        d);
}

Jet laplace_jet(const DistributionSpec &d, double s, std::size_t K, double direction) {
    validate(d);
    if (!std::isfinite(s)) bad("laplace: s must be finite");
    if (!laplace_admissible(d, s)) throw_divergent(d, s);
    return std::visit(
        [&](const auto &f) -> Jet {
            using T = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<T, Exponential>) {
                Jet j(s, K);
                j[0] = f.rate / (f.rate + s);
                for (std::size_t k = 1; k <= K; ++k)
                    j[k] = j[k - 1] * (-direction / (f.rate + s));
                return j;
            } else if constexpr (std::is_same_v<T, Gamma>) {
                // L(s) = (1 + theta s)^{-alpha}; coefficient ratio keeps
                // everything in products of O(1) factors
                Jet j(s, K);
                double base = 1.0 + f.scale * s;
                j[0] = std::pow(base, -f.shape);
                double q = -direction * f.scale / base;
                for (std::size_t k = 1; k <= K; ++k)
                    j[k] = j[k - 1] * q * (f.shape + static_cast<double>(k) - 1.0) /
                           static_cast<double>(k);
                return j;
            } else if constexpr (std::is_same_v<T, InverseGaussian>) {
                double bound = -f.shape / (2.0 * f.mean * f.mean);
                if (s == bound) {
                    // the transform converges right at the boundary but its
                    // derivatives do not
                    if (K >= 1)
                        throw DivergentTransform(
                            "inverse_gaussian transform has no derivatives at its convergence "
                            "boundary");
                    Jet j(s, 0);
                    j[0] = std::exp(f.shape / f.mean);
                    return j;
                }
                // L = exp((beta/alpha)(1 - sqrt(1 + 2 alpha^2 s / beta)))
                Jet arg = Jet::affine(s, direction, K, s);
                Jet u = arg * (2.0 * f.mean * f.mean / f.shape) + 1.0;
                Jet g = (1.0 - sqrt(u)) * (f.shape / f.mean);
                return exp(g);
            } else if constexpr (std::is_same_v<T, LogNormal>) {
                return gh_lognormal_jet(
                    f, K,
                    [&](Jet &acc, double w, double ti) {
                        double term = w * std::exp(-s * ti);
                        acc[0] += term;
                        for (std::size_t k = 1; k <= K; ++k) {
                            term *= -direction * ti / static_cast<double>(k);
                            acc[k] += term;
                        }
                    },
                    s);
            } else {
                Jet j(s, K);
                double term = std::exp(-s * f.value);
                j[0] = term;
                for (std::size_t k = 1; k <= K; ++k) {
                    term *= -direction * f.value / static_cast<double>(k);
                    j[k] = term;
                }
                return j;
            }
        },
        d);
}

Jet laplace(const DistributionSpec &d, double s, std::size_t K) {
    return laplace_jet(d, s, K, 1.0);
}

double laplace_value(const DistributionSpec &d, double s) {
    return laplace_jet(d, s, 0, 1.0).value();
}

double laplace_minus_one(const DistributionSpec &d, double s) {
    validate(d);
    if (!std::isfinite(s)) bad("laplace_minus_one: s must be finite");
    if (!laplace_admissible(d, s)) throw_divergent(d, s);
    return std::visit(
        [s](const auto &f) -> double {
            using T = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<T, Exponential>) {
                return -s / (f.rate + s);
            } else if constexpr (std::is_same_v<T, Gamma>) {
                return std::expm1(-f.shape * std::log1p(f.scale * s));
            } else if constexpr (std::is_same_v<T, InverseGaussian>) {
                double y = 2.0 * f.mean * f.mean * s / f.shape;
                double g = -(f.shape / f.mean) * y / (1.0 + std::sqrt(1.0 + y));
                return std::expm1(g);
            } else if constexpr (std::is_same_v<T, LogNormal>) {
                Jet j = gh_lognormal_jet(
                    f, 0,
                    [&](Jet &acc, double w, double ti) { acc[0] += w * std::expm1(-s * ti); },
                    s);
                return j.value();
            } else {
                return std::expm1(-s * f.value);
            }
        },
        d);
}

double one_minus_laplace(const DistributionSpec &d, double s) { return -laplace_minus_one(d, s); }

// ---------------------------------------------------------------------------
// Sampling. Hand-rolled so the draw sequences are bit-identical across
// platforms (libstdc++/libc++ distributions are not portable).

namespace {

double sample_normal(RngStream &rng) {
    double u1 = rng.u01_open(), u2 = rng.u01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

// Marsaglia-Tsang squeeze, with the U^{1/a} boost below shape 1
double sample_gamma(double shape, double scale, RngStream &rng) {
    if (shape < 1.0) {
        double u = rng.u01_open();
        return sample_gamma(shape + 1.0, scale, rng) * std::pow(u, 1.0 / shape);
    }
    double d = shape - 1.0 / 3.0, c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x = sample_normal(rng);
        double v = 1.0 + c * x;
        if (v <= 0.0) continue;
        v = v * v * v;
        double u = rng.u01_open();
        if (u < 1.0 - 0.0331 * x * x * x * x) return scale * d * v;
        if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return scale * d * v;
    }
}

// Michael-Schucany-Haas transformation method
double sample_inverse_gaussian(double mu, double lambda, RngStream &rng) {
    double n = sample_normal(rng);
    double y = n * n;
    double x = mu + (mu * mu * y) / (2.0 * lambda) -
               (mu / (2.0 * lambda)) * std::sqrt(4.0 * mu * lambda * y + mu * mu * y * y);
    if (x <= 0.0) x = std::numeric_limits<double>::min();  // cancellation guard
    double u = rng.u01();
    if (u <= mu / (mu + x)) return x;
    return mu * mu / x;
}

}  // namespace

double sample(const DistributionSpec &d, RngStream &rng) {
    return std::visit(
        [&rng](const auto &f) -> double {
            using T = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<T, Exponential>) {
                return -std::log(rng.u01_open()) / f.rate;
            } else if constexpr (std::is_same_v<T, Gamma>) {
                return sample_gamma(f.shape, f.scale, rng);
            } else if constexpr (std::is_same_v<T, InverseGaussian>) {
                return sample_inverse_gaussian(f.mean, f.shape, rng);
            } else if constexpr (std::is_same_v<T, LogNormal>) {
                return std::exp(f.mu + f.sigma * sample_normal(rng));
            } else {
                return f.value;
            }
        },
        d);
}

}  // namespace resetq
