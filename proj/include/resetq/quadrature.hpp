#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <optional>
#include <queue>
#include <vector>

#include "resetq/errors.hpp"
#include "resetq/jet.hpp"

namespace resetq {

struct QuadratureResult {
    double value = 0.0;
    double abs_error_estimate = 0.0;
    long evaluations = 0;
};

struct JetQuadratureResult {
    Jet value;
    double abs_error_estimate = 0.0;
    long evaluations = 0;
};

namespace quad_detail {

// The integrators are generic over the integrand's value type: plain doubles
// for means, Jets for transform derivatives. These overloads are the whole
// "traits" surface.
inline double vnorm(double v) { return std::fabs(v); }
inline double vnorm(const Jet &v) {
    double m = 0.0;
    for (std::size_t k = 0; k <= v.order(); ++k) m = std::max(m, std::fabs(v[k]));
    return m;
}
// scalar key used for panel-to-panel decay ratios; for jets the constant
// term dominates and shares the endpoint power law with every coefficient
inline double vkey(double v) { return v; }
inline double vkey(const Jet &v) { return v.value(); }
inline bool vfinite(double v) { return std::isfinite(v); }
inline bool vfinite(const Jet &v) {
    for (std::size_t k = 0; k <= v.order(); ++k)
        if (!std::isfinite(v[k])) return false;
    return true;
}
inline double vzero(const double &) { return 0.0; }
inline Jet vzero(const Jet &proto) { return Jet(proto.anchor(), proto.order()); }

// 15-point Kronrod extension of 7-point Gauss (the classic pair); the odd
// indices are the embedded Gauss nodes.
inline constexpr double kXgk[8] = {
    0.9914553711208126, 0.9491079123427585, 0.8648644233597691, 0.7415311855993944,
    0.5860872354676911, 0.4058451513773972, 0.2077849550078985, 0.0};
inline constexpr double kWgk[8] = {
    0.0229353220105292, 0.0630920926299785, 0.1047900103222502, 0.1406532597155259,
    0.1690047266392679, 0.1903505780647854, 0.2044329400752989, 0.2094821410847278};
inline constexpr double kWg[4] = {
    0.1294849661688697, 0.2797053914892767, 0.3818300505051189, 0.4179591836734694};

template <class V, class F>
struct GkEstimate {
    V kronrod;
    double err;
};

template <class V, class F>
GkEstimate<V, F> gk15(const F &f, double a, double b, long &evaluations) {
    const double xm = 0.5 * (a + b), h = 0.5 * (b - a);
    auto eval = [&](double t) {
        V v = f(t);
        ++evaluations;
        if (!vfinite(v)) {
            char buf[96];
            std::snprintf(buf, sizeof buf, "integrand not finite at t=%.17g", t);
            throw NonFinite(buf);
        }
        return v;
    };
    V fc = eval(xm);
    V resk = fc * kWgk[7];
    V resg = fc * kWg[3];
    for (int i = 0; i < 7; ++i) {
        V lo = eval(xm - h * kXgk[i]);
        V hi = eval(xm + h * kXgk[i]);
        V pair = lo + hi;
        resk = resk + pair * kWgk[i];
        if (i % 2 == 1) resg = resg + pair * kWg[i / 2];
    }
    resk = resk * h;
    resg = resg * h;
    double err = vnorm(resk - resg);
    // roundoff floor so the estimate never claims better than ~50 eps
    err = std::max(err, 50.0 * std::numeric_limits<double>::epsilon() * vnorm(resk));
    return {resk, err};
}

// Adaptive bisection on [a, b] driven by a worst-segment heap. Returns the
// accumulated value; *err_out gets the summed local error estimates.
template <class V, class F>
V adaptive_interval(const F &f, double a, double b, double abs_tol, long max_segments,
                    long &evaluations, long eval_budget, double *err_out) {
    struct Seg {
        double a, b, err;
        V val;
        bool operator<(const Seg &o) const { return err < o.err; }
    };
    auto first = gk15<V>(f, a, b, evaluations);
    std::priority_queue<Seg> heap;
    heap.push(Seg{a, b, first.err, first.kronrod});
    double total_err = first.err;
    V frozen = vzero(first.kronrod);
    double frozen_err = 0.0;
    long segs = 1;
    while (total_err - frozen_err > abs_tol && segs < max_segments &&
           evaluations < eval_budget && !heap.empty()) {
        Seg worst = heap.top();
        heap.pop();
        total_err -= worst.err;
        double mid = 0.5 * (worst.a + worst.b);
        double width_floor = 64.0 * std::numeric_limits<double>::epsilon() *
                             std::max(std::fabs(worst.a), std::fabs(worst.b));
        if (mid <= worst.a || mid >= worst.b || (worst.b - worst.a) < width_floor) {
            // cannot split further in double precision; keep its estimate as-is
            frozen = frozen + worst.val;
            frozen_err += worst.err;
            total_err += worst.err;
            continue;
        }
        auto l = gk15<V>(f, worst.a, mid, evaluations);
        auto r = gk15<V>(f, mid, worst.b, evaluations);
        heap.push(Seg{worst.a, mid, l.err, l.kronrod});
        heap.push(Seg{mid, worst.b, r.err, r.kronrod});
        total_err += l.err + r.err;
        ++segs;
    }
    V total = frozen;
    while (!heap.empty()) {
        total = total + heap.top().val;
        heap.pop();
    }
    *err_out = total_err;
    return total;
}

template <class V>
struct ChainResult {
    std::optional<V> value;
    double err = 0.0;
};

// Integrate f over (0, cutoff] as a chain of dyadic panels
// [cutoff*2^-(j+1), cutoff*2^-j]. Endpoint singularities x^(p-1) with p near
// 0 leave a non-negligible remainder below the smallest representable panel
// (for p = 0.01 roughly 1e-3 of the total sits below t = 1e-300), so once
// the panel-to-panel decay ratio settles we sum the remaining geometric tail
// analytically instead of chasing it into the underflow regime. The observed
// ratio drift bounds the extrapolation error honestly.
template <class V, class F>
ChainResult<V> integrate_to_zero(const F &f, double cutoff, double rel_tol, long &evaluations,
                                 long eval_budget) {
    ChainResult<V> out;
    double hi = cutoff;
    double prev_key = 0.0, prev_ratio = std::numeric_limits<double>::quiet_NaN();
    double last_norm = std::numeric_limits<double>::infinity();
    int growing = 0;
    const int max_panels = 1100;
    for (int j = 0; j < max_panels; ++j) {
        double lo = 0.5 * hi;
        if (lo <= 0.0 || lo < 1e-305) break;
        double floor_tol =
            out.value ? 0.002 * rel_tol * vnorm(*out.value) : 0.0;
        double probe_err = 0.0;
        // first GK pass fixes the panel's own scale, then refine to a mix of
        // panel-relative and total-relative tolerance
        long pre_evals = evaluations;
        auto rough = gk15<V>(f, lo, hi, evaluations);
        double tol = std::max(0.25 * rel_tol * vnorm(rough.kronrod), floor_tol);
        V panel = rough.kronrod;
        probe_err = rough.err;
        if (rough.err > tol) {
            evaluations = pre_evals;
            panel = adaptive_interval<V>(f, lo, hi, tol, 4000, evaluations, eval_budget,
                                         &probe_err);
        }
        if (evaluations >= eval_budget)
            throw NonConvergent("quadrature evaluation budget exhausted");
        double pnorm = vnorm(panel);
        double key = vkey(panel);
        if (!out.value) {
            out.value = panel;
        } else {
            out.value = *out.value + panel;
        }
        out.err += probe_err;
        double total_norm = vnorm(*out.value);

        // divergence watch: panels not shrinking toward the origin. Wide
        // integrands climb for ~log2(cutoff/mode) panels before their peak,
        // so only a long unbroken non-decreasing run signals divergence.
        growing = (pnorm >= last_norm && pnorm > 1e-12 * total_norm) ? growing + 1 : 0;
        if (growing >= 200)
            throw NonConvergent("integrand does not decay toward the origin; integral may diverge");
        last_norm = pnorm;

        double ratio = (prev_key != 0.0) ? key / prev_key : std::numeric_limits<double>::quiet_NaN();
        if (j >= 6) {
            // settled geometric decay: extrapolate the rest of the chain
            if (std::isfinite(ratio) && std::isfinite(prev_ratio) && ratio > 0.0 &&
                ratio < 0.9995 && prev_ratio > 0.0) {
                double drift = std::fabs(ratio - prev_ratio);
                if (drift <= 0.2 * (1.0 - ratio)) {
                    double gain = ratio / (1.0 - ratio);
                    double extrap_err =
                        pnorm * (drift + 1e-14) / ((1.0 - ratio) * (1.0 - ratio));
                    if (extrap_err <= 0.4 * rel_tol * (total_norm + pnorm * gain)) {
                        out.value = *out.value + panel * gain;
                        out.err += extrap_err;
                        return out;
                    }
                }
            }
            // panels already negligible: bound the rest crudely and stop
            // (only once some mass has been seen, else a cutoff far beyond
            // the support would end the chain before reaching the bulk)
            double q = (std::isfinite(ratio) && ratio > 0.0) ? std::min(ratio, 0.999) : 0.9;
            double crude = pnorm * std::max(q / (1.0 - q), 1.0) * 2.0;
            if (total_norm > 0.0 && crude <= 0.3 * rel_tol * total_norm) {
                out.err += crude;
                return out;
            }
        }
        prev_ratio = ratio;
        prev_key = key;
        hi = lo;
    }
    // ran out of panels; the leftover below `hi` is unresolved
    if (out.value) {
        double leftover = last_norm * 20.0;
        out.err += leftover;
    }
    return out;
}

// Measures the mass beyond the cutoff with one Gauss-Kronrod panel per
// doubling interval. Goes into the error estimate only, never the value.
template <class F, class V>
double tail_monitor(const F &f, double cutoff, double scale, long &evaluations) {
    double est = 0.0, lo = cutoff;
    for (int j = 0; j < 40 && lo < 1e300; ++j, lo *= 2.0) {
        auto seg = gk15<V>(f, lo, 2.0 * lo, evaluations);
        double m = vnorm(seg.kronrod) + seg.err;
        est += m;
        if (m <= std::max(1e-3 * est, 1e-18 * scale)) return est;
    }
    return est * 2.0;  // contributions never settled; double as a crude closure
}

template <class V, class F>
void run_semi_infinite(const F &f, double tail_cutoff, double rel_tol, V *value_out,
                       double *err_out, long *eval_out, long eval_budget) {
    if (!(tail_cutoff > 0.0) || !std::isfinite(tail_cutoff))
        throw ValidationError("integrate_semi_infinite: tail_cutoff must be positive and finite");
    if (!(rel_tol >= 1e-12 && rel_tol <= 1e-3))
        throw ValidationError("integrate_semi_infinite: rel_tol must lie in [1e-12, 1e-3]");
    long evals = 0;
    auto attempt = [&](double tol) { return integrate_to_zero<V>(f, tail_cutoff, tol, evals, eval_budget); };
    ChainResult<V> chain = attempt(rel_tol);
    if (chain.value) {
        double scale = std::max(vnorm(*chain.value), std::numeric_limits<double>::min());
        double tail = tail_monitor<F, V>(f, tail_cutoff, scale, evals);
        if (chain.err + tail > rel_tol * scale) {
            if (tail > 0.8 * rel_tol * scale)
                throw NonConvergent("mass beyond tail_cutoff exceeds the requested tolerance");
            // one tighter pass before giving up
            ChainResult<V> retry = attempt(std::max(rel_tol / 10.0, 1e-12));
            if (retry.value) chain = std::move(retry);
            scale = std::max(vnorm(*chain.value), std::numeric_limits<double>::min());
            if (chain.err + tail > rel_tol * scale)
                throw NonConvergent("quadrature error estimate above requested tolerance");
        }
        *value_out = *chain.value;
        *err_out = chain.err + tail;
    } else {
        // integrand identically zero on the whole chain
        *err_out = 0.0;
    }
    *eval_out = evals;
}

}  // namespace quad_detail

// Adaptive Gauss-Kronrod over (0, tail_cutoff] with a monitored remainder
// beyond the cutoff (error estimate only). Handles integrable endpoint
// singularities like t^(alpha-1) for alpha well below 1.
inline QuadratureResult integrate_semi_infinite(const std::function<double(double)> &f,
                                                double tail_cutoff, double rel_tol,
                                                long eval_budget = 5000000) {
    QuadratureResult r;
    double v = 0.0;
    quad_detail::run_semi_infinite<double>(f, tail_cutoff, rel_tol, &v, &r.abs_error_estimate,
                                           &r.evaluations, eval_budget);
    r.value = v;
    return r;
}

// Same engine with Jet-valued integrands; all Taylor coefficients share the
// panel decomposition, so derivative integrals cost one sweep.
inline JetQuadratureResult integrate_semi_infinite_jet(const std::function<Jet(double)> &f,
                                                       double tail_cutoff, double rel_tol,
                                                       long eval_budget = 400000) {
    JetQuadratureResult r;
    Jet v;
    quad_detail::run_semi_infinite<Jet>(f, tail_cutoff, rel_tol, &v, &r.abs_error_estimate,
                                        &r.evaluations, eval_budget);
    r.value = v;
    return r;
}

// Finite-interval variant over (0, upper]: the same origin-resolving dyadic
// chain, with nothing assumed or monitored beyond `upper`.
inline QuadratureResult integrate_to_origin(const std::function<double(double)> &f, double upper,
                                            double rel_tol, long eval_budget = 2000000) {
    if (!(upper > 0.0) || !std::isfinite(upper))
        throw ValidationError("integrate_to_origin: upper must be positive and finite");
    if (!(rel_tol >= 1e-12 && rel_tol <= 1e-3))
        throw ValidationError("integrate_to_origin: rel_tol must lie in [1e-12, 1e-3]");
    QuadratureResult r;
    long evals = 0;
    auto chain = quad_detail::integrate_to_zero<double>(f, upper, rel_tol, evals, eval_budget);
    if (chain.value) {
        double scale = std::max(std::fabs(*chain.value), std::numeric_limits<double>::min());
        if (chain.err > rel_tol * scale) {
            chain = quad_detail::integrate_to_zero<double>(f, upper,
                                                           std::max(rel_tol / 10.0, 1e-12),
                                                           evals, eval_budget);
            scale = std::max(std::fabs(*chain.value), std::numeric_limits<double>::min());
            if (chain.err > rel_tol * scale)
                throw NonConvergent("quadrature error estimate above requested tolerance");
        }
        r.value = *chain.value;
    }
    r.abs_error_estimate = chain.err;
    r.evaluations = evals;
    return r;
}

}  // namespace resetq
