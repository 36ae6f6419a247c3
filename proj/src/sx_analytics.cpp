#include "resetq/sx_analytics.hpp"

#include <cmath>
#include <functional>
#include <limits>

#include "resetq/errors.hpp"
#include "resetq/quadrature.hpp"

namespace resetq {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// success probabilities below this are treated as non-completing rather than
// returned as astronomically large means
constexpr double kCompletionFloor = 1e-300;

[[noreturn]] void bad(const char *msg) { throw ValidationError(msg); }

double atom_value(const DistributionSpec &d) { return std::get<Deterministic>(d).value; }

// upper integration limit for expectations over the jobsize: the integrands
// here grow polynomially in x, which shifts mass right of the plain quantile,
// so pad generously (zero panels beyond the support cost next to nothing)
double jobsize_cutoff(const DistributionSpec &x) { return 4.0 * quantile(x, 1.0 - 1e-13); }

// E[g(X)]: point evaluation at an atom, quadrature against the density
// otherwise (the beyond-cutoff remainder is monitored by the engine)
double expect_over_jobsize(const DistributionSpec &x, double rel_tol,
                           const std::function<double(double)> &g) {
    if (is_atom(x)) return g(atom_value(x));
    auto r = integrate_semi_infinite([&](double t) { return g(t) * density(x, t); },
                                     jobsize_cutoff(x), rel_tol);
    return r.value;
}

Jet expect_over_jobsize_jet(const DistributionSpec &x, double rel_tol,
                            const std::function<Jet(double)> &g) {
    if (is_atom(x)) return g(atom_value(x));
    auto r = integrate_semi_infinite_jet([&](double t) { return g(t) * density(x, t); },
                                         jobsize_cutoff(x), rel_tol);
    return r.value;
}

// partial first moment of S over [0, u]
double partial_first_moment(const DistributionSpec &s, double u) {
    if (is_atom(s)) {
        double v = atom_value(s);
        return v < u ? v : 0.0;
    }
    if (!(u > 0.0)) return 0.0;
    auto r = integrate_to_origin([&](double t) { return t * density(s, t); }, u, 1e-9);
    return r.value;
}

// P(S < u), with the strict inequality honored at slowdown atoms
double completion_probability(const DistributionSpec &s, double u) {
    if (!(u > 0.0)) return 0.0;
    if (is_atom(s)) return atom_value(s) < u ? 1.0 : 0.0;
    return cdf(s, u);
}

[[noreturn]] void throw_non_completing(const char *detail) {
    std::string msg = "an attempt can never finish: ";
    throw NonCompleting(msg + detail);
}

// mean service time for one job of size x under sharp resetting every tau
double sharp_mean_at(const ServiceModel &m, double tau, double x) {
    double u, duration_base;
    if (m.combiner == Combiner::multiplicative) {
        if (x == 0.0) return 0.0;
        u = tau / x;
        duration_base = 0.0;
    } else {
        u = tau - x;
        duration_base = x;
    }
    double p = completion_probability(m.slowdown, u);
    if (p < kCompletionFloor)
        throw_non_completing("per-attempt success probability underflows");
    double pm1 = partial_first_moment(m.slowdown, u);
    double scaled_pm1 = (m.combiner == Combiner::multiplicative) ? x * pm1 : pm1;
    return (tau * (1.0 - p) + scaled_pm1) / p + duration_base;
}

// sharp resetting with an unbounded jobsize law leaves jobs that can never
// finish; detect from the support bounds instead of timing out in quadrature
void check_sharp_completes(const ServiceModel &m, double tau) {
    double s_lo = support_lower(m.slowdown);
    if (m.combiner == Combiner::additive) {
        if (!is_atom(m.jobsize))
            throw_non_completing("additive sharp resetting with unbounded jobsize");
        if (atom_value(m.jobsize) + s_lo >= tau)
            throw_non_completing("jobsize plus minimal slowdown reaches the period");
    } else {
        if (is_atom(m.jobsize)) {
            if (atom_value(m.jobsize) * s_lo >= tau && atom_value(m.jobsize) > 0.0)
                throw_non_completing("minimal service requirement reaches the period");
        } else if (s_lo > 0.0) {
            throw_non_completing(
                "multiplicative sharp resetting with a slowdown atom and unbounded jobsize");
        }
    }
}

struct GenericResetParts {
    double p;        // per-attempt success probability
    double won;      // E[(service - base) ; success]
    double wasted;   // E[reset time ; failure]
};

// the three ingredients of the renewal-reward mean for one job of size x
GenericResetParts generic_parts(const ServiceModel &m, const DistributionSpec &reset,
                                double x) {
    const DistributionSpec &s = m.slowdown;
    bool mult = m.combiner == Combiner::multiplicative;
    auto requirement = [&](double sv) { return mult ? sv * x : sv + x; };
    GenericResetParts out{};
    if (is_atom(s)) {
        double w = requirement(atom_value(s));
        out.p = 1.0 - cdf(reset, w);
        out.won = (mult ? w : atom_value(s)) * out.p;
        out.wasted = w > 0.0
                         ? integrate_to_origin(
                               [&](double t) { return t * density(reset, t); }, w, 1e-9)
                               .value
                         : 0.0;
        return out;
    }
    double s_cut = quantile(s, 1.0 - 1e-11);
    out.p = integrate_semi_infinite(
                [&](double t) { return density(s, t) * (1.0 - cdf(reset, requirement(t))); },
                s_cut, 1e-9)
                .value;
    out.won = integrate_semi_infinite(
                  [&](double t) {
                      return t * density(s, t) * (1.0 - cdf(reset, requirement(t)));
                  },
                  4.0 * quantile(s, 1.0 - 1e-12), 1e-9)
                  .value;
    if (mult) out.won *= x;
    auto survival_s = [&](double w) {
        double arg = mult ? (x > 0.0 ? w / x : kInf) : w - x;
        if (arg <= 0.0) return 1.0;
        return 1.0 - cdf(s, arg);
    };
    out.wasted = integrate_semi_infinite(
                     [&](double t) { return t * density(reset, t) * survival_s(t); },
                     4.0 * quantile(reset, 1.0 - 1e-12), 1e-9)
                     .value;
    return out;
}

double generic_mean_at(const ServiceModel &m, const DistributionSpec &reset, double x) {
    if (m.combiner == Combiner::multiplicative && x == 0.0) return 0.0;
    GenericResetParts parts = generic_parts(m, reset, x);
    if (parts.p < kCompletionFloor)
        throw_non_completing("per-attempt success probability underflows");
    double base = m.combiner == Combiner::additive ? x : 0.0;
    return base + (parts.won + parts.wasted) / parts.p;
}

// transform jet of the service time of one job of size x under Poisson
// resetting: (s+r) W(s+r) / (s + r W(s+r)) with W the requirement transform
Jet poisson_lt_at(const ServiceModel &m, double s, double r, std::size_t K, double direction,
                  double x) {
    Jet s_jet = Jet::affine(s, direction, K, s);
    Jet w;
    if (m.combiner == Combiner::multiplicative) {
        w = laplace_jet(m.slowdown, (s + r) * x, K, direction * x);
    } else {
        Jet decay = exp(Jet::affine(-(s + r) * x, -direction * x, K, s));
        w = decay * laplace_jet(m.slowdown, s + r, K, direction);
    }
    return ((s_jet + r) * w) / (s_jet + w * r);
}

}  // namespace

void validate(const ServiceModel &m) {
    validate(m.slowdown);
    validate(m.jobsize);
}

void validate(const ResetPolicy &p) {
    std::visit(
        [](const auto &v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, ResetPoisson>) {
                if (!(v.rate > 0.0) || !std::isfinite(v.rate))
                    bad("poisson reset rate must be positive and finite");
            } else if constexpr (std::is_same_v<T, ResetSharp>) {
                if (!(v.period > 0.0) || !std::isfinite(v.period))
                    bad("sharp reset period must be positive and finite");
            } else if constexpr (std::is_same_v<T, ResetRenewal>) {
                validate(v.reset_time);
            }
        },
        p);
}

std::string policy_name(const ResetPolicy &p) {
    return std::visit(
        [](const auto &v) -> std::string {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, ResetNone>) return "none";
            else if constexpr (std::is_same_v<T, ResetPoisson>) return "poisson";
            else if constexpr (std::is_same_v<T, ResetSharp>) return "sharp";
            else return "renewal";
        },
        p);
}

std::string combiner_name(Combiner c) {
    return c == Combiner::multiplicative ? "multiplicative" : "additive";
}

double mean_no_reset(const ServiceModel &m) {
    validate(m);
    double es = mean(m.slowdown), ex = mean(m.jobsize);
    return m.combiner == Combiner::multiplicative ? es * ex : es + ex;
}

double mean_poisson(const ServiceModel &m, double r) {
    validate(m);
    if (!(r > 0.0) || !std::isfinite(r)) bad("mean_poisson: rate must be positive and finite");
    if (m.combiner == Combiner::multiplicative) {
        return expect_over_jobsize(m.jobsize, 1e-9, [&](double x) {
            if (x == 0.0) return 0.0;
            return one_minus_laplace(m.slowdown, r * x) /
                   (r * laplace_value(m.slowdown, r * x));
        });
    }
    // (E[e^{rX}] - S(r)) / (r S(r)), grouped around 1 so tiny rates do not
    // cancel; E[e^{rX}] finite is the regularity requirement
    double num = laplace_minus_one(m.jobsize, -r) + one_minus_laplace(m.slowdown, r);
    return num / (r * laplace_value(m.slowdown, r));
}

Jet lt_poisson(const ServiceModel &m, double s, double r, std::size_t K) {
    if (K > 128) bad("lt_poisson: jet order is capped at 128");
    return lt_poisson_jet(m, s, r, K, 1.0);
}

Jet lt_poisson_jet(const ServiceModel &m, double s, double r, std::size_t K, double direction) {
    validate(m);
    if (!(r > 0.0) || !std::isfinite(r)) bad("lt_poisson: rate must be positive and finite");
    if (!(s >= 0.0) || !std::isfinite(s)) bad("lt_poisson: s must be nonnegative and finite");
    return expect_over_jobsize_jet(
        m.jobsize, 1e-9, [&](double x) { return poisson_lt_at(m, s, r, K, direction, x); });
}

Jet service_lt_jet_no_reset(const ServiceModel &m, double s, std::size_t K, double direction) {
    validate(m);
    if (!(s >= 0.0) || !std::isfinite(s))
        bad("service transform: s must be nonnegative and finite");
    if (m.combiner == Combiner::additive)
        return laplace_jet(m.jobsize, s, K, direction) * laplace_jet(m.slowdown, s, K, direction);
    return expect_over_jobsize_jet(m.jobsize, 1e-9, [&](double x) {
        return laplace_jet(m.slowdown, s * x, K, direction * x);
    });
}

double mean_sharp(const ServiceModel &m, double tau) {
    validate(m);
    if (!(tau > 0.0) || !std::isfinite(tau))
        bad("mean_sharp: period must be positive and finite");
    check_sharp_completes(m, tau);
    return expect_over_jobsize(m.jobsize, 1e-7,
                               [&](double x) { return sharp_mean_at(m, tau, x); });
}

double mean_generic_reset(const ServiceModel &m, const DistributionSpec &reset_time) {
    validate(m);
    validate(reset_time);
    if (is_atom(reset_time)) return mean_sharp(m, atom_value(reset_time));
    return expect_over_jobsize(m.jobsize, 1e-7,
                               [&](double x) { return generic_mean_at(m, reset_time, x); });
}

BenefitReport benefit_diagnosis(const ServiceModel &m) {
    validate(m);
    double es = mean(m.slowdown), es2 = moment(m.slowdown, 2);
    double ex = mean(m.jobsize), ex2 = moment(m.jobsize, 2);
    BenefitReport rep{};
    rep.mean_no_reset = mean_no_reset(m);
    if (m.combiner == Combiner::multiplicative) {
        rep.slope_at_zero = ex2 * (es * es - 0.5 * es2);
        rep.condition_lhs = std::sqrt(variance(m.slowdown)) / es;
        rep.condition_rhs = 1.0;
    } else {
        rep.slope_at_zero = ex * es + es * es + 0.5 * (ex2 - es2);
        rep.condition_lhs = variance(m.slowdown) - variance(m.jobsize);
        rep.condition_rhs = (ex + es) * (ex + es);
    }
    rep.beneficial = rep.slope_at_zero < 0.0;
    return rep;
}

namespace {

OptimalPolicy run_minimizer(const std::function<double(double)> &objective, Bracket bracket,
                            double mnr) {
    auto res = minimize_unimodal(objective, bracket, 1e-7);
    return {res.argmin, res.min_value, res.monotone, mnr};
}

}  // namespace

OptimalPolicy optimal_poisson_rate(const ServiceModel &m, std::optional<Bracket> bracket_hint) {
    BenefitReport rep = benefit_diagnosis(m);
    if (!rep.beneficial)
        return {0.0, rep.mean_no_reset, Monotone::increasing, rep.mean_no_reset};
    if (bracket_hint) return run_minimizer([&](double r) { return mean_poisson(m, r); },
                                           *bracket_hint, rep.mean_no_reset);
    // the additive model caps usable rates at the jobsize transform's
    // convergence bound; inside it, double until the curve has risen back
    // above the no-reset mean or visibly passed its minimum
    double scale = 1.0 / rep.mean_no_reset;
    double r_max = kInf;
    if (m.combiner == Combiner::additive) {
        double dm = laplace_domain_min(m.jobsize);
        // shave the cap slightly so families with an open convergence
        // interval are never probed exactly on the boundary
        if (std::isfinite(dm)) r_max = -dm * (1.0 - 1e-9);
    }
    if (!(r_max > 0.0)) throw DivergentTransform("no admissible resetting rate");
    double lo = 1e-6 * std::min(scale, r_max);
    double hi = std::min(scale, 0.5 * r_max);
    double prev = mean_poisson(m, hi);
    for (int k = 0; k < 80; ++k) {
        double next_hi = std::min(hi * 2.0, r_max);
        if (next_hi == hi) break;  // pinned at the regularity bound
        double v = mean_poisson(m, next_hi);
        hi = next_hi;
        if (v > rep.mean_no_reset || v > prev) break;
        prev = v;
    }
    return run_minimizer([&](double r) { return mean_poisson(m, r); }, {lo, hi},
                         rep.mean_no_reset);
}

OptimalPolicy optimal_sharp_period(const ServiceModel &m, std::optional<Bracket> bracket_hint) {
    BenefitReport rep = benefit_diagnosis(m);
    if (!rep.beneficial)
        return {kInf, rep.mean_no_reset, Monotone::decreasing, rep.mean_no_reset};
    if (bracket_hint) return run_minimizer([&](double t) { return mean_sharp(m, t); },
                                           *bracket_hint, rep.mean_no_reset);
    double scale = rep.mean_no_reset;
    // shortest period that still completes: only binding in the additive
    // model, where the period must clear the (necessarily atomic) jobsize
    double floor = 0.0;
    if (m.combiner == Combiner::additive) {
        check_sharp_completes(m, kInf);  // rejects unbounded jobsize up front
        floor = atom_value(m.jobsize) + support_lower(m.slowdown);
    }
    // walk the lower end up past any non-completing region
    double lo = std::max(1e-4 * scale, floor * (1.0 + 1e-9) + 1e-12 * scale);
    for (int k = 0; k < 64; ++k) {
        try {
            (void)mean_sharp(m, lo);
            break;
        } catch (const NonCompleting &) {
            lo = floor + (lo - floor) * 4.0;
            if (k == 63) throw;
        }
    }
    // the curve tends back to the no-reset mean from below as the period
    // grows, so stop doubling once it has clearly turned upward
    double hi = std::max(scale, 2.0 * lo);
    double prev = mean_sharp(m, hi);
    for (int k = 0; k < 80; ++k) {
        double v = mean_sharp(m, hi * 2.0);
        hi *= 2.0;
        if (v > prev) break;
        prev = v;
    }
    return run_minimizer([&](double t) { return mean_sharp(m, t); }, {lo, hi},
                         rep.mean_no_reset);
}

}  // namespace resetq
