#pragma once

#include <cmath>
#include <cstdio>
#include <functional>
#include <vector>

#include "resetq/errors.hpp"

namespace resetq {

// Caller-supplied search interval. Unimodality of the objective on it is the
// caller's obligation; the minimizer screens for monotone patterns so that
// "no interior optimum" comes back as a flag instead of a bogus argmin.
struct Bracket {
    double lo = 0.0;
    double hi = 0.0;
};

enum class Monotone { no, increasing, decreasing };

struct MinimizeResult {
    double argmin = 0.0;
    double min_value = 0.0;
    Monotone monotone = Monotone::no;
    long evaluations = 0;
};

// Golden-section search. Tolerance is relative to the bracket width:
// |argmin - true| <= tol * (hi - lo) for unimodal f. Derivative-free on
// purpose: the objectives here carry quadrature noise around 1e-8 that makes
// finite-difference descent directions unreliable.
inline MinimizeResult minimize_unimodal(const std::function<double(double)> &f, Bracket b,
                                        double tol) {
    if (!(b.hi > b.lo) || !std::isfinite(b.lo) || !std::isfinite(b.hi))
        throw ValidationError("minimize_unimodal: need a finite bracket with hi > lo");
    if (!(tol > 0.0 && tol < 0.5)) throw ValidationError("minimize_unimodal: tol must be in (0, 0.5)");

    MinimizeResult res;
    auto eval = [&](double x) {
        double v = f(x);
        ++res.evaluations;
        if (!std::isfinite(v)) {
            char buf[96];
            std::snprintf(buf, sizeof buf, "objective not finite at x=%.17g", x);
            throw NonFinite(buf);
        }
        return v;
    };

    // monotone screen on a coarse grid including the endpoints
    const int kProbe = 9;
    double px[kProbe], pv[kProbe];
    for (int i = 0; i < kProbe; ++i) {
        px[i] = b.lo + (b.hi - b.lo) * static_cast<double>(i) / (kProbe - 1);
        pv[i] = eval(px[i]);
    }
    bool nondecreasing = true, nonincreasing = true;
    for (int i = 1; i < kProbe; ++i) {
        double slack = 1e-14 * (std::fabs(pv[i]) + std::fabs(pv[i - 1]));
        if (pv[i] < pv[i - 1] - slack) nondecreasing = false;
        if (pv[i] > pv[i - 1] + slack) nonincreasing = false;
    }
    if (nondecreasing && !nonincreasing) {
        res.argmin = b.lo;
        res.min_value = pv[0];
        res.monotone = Monotone::increasing;
        return res;
    }
    if (nonincreasing && !nondecreasing) {
        res.argmin = b.hi;
        res.min_value = pv[kProbe - 1];
        res.monotone = Monotone::decreasing;
        return res;
    }

    // start golden section from the probe bracket around the best sample
    int best = 0;
    for (int i = 1; i < kProbe; ++i)
        if (pv[i] < pv[best]) best = i;
    double lo = px[best > 0 ? best - 1 : 0];
    double hi = px[best < kProbe - 1 ? best + 1 : kProbe - 1];

    const double invphi = 0.6180339887498949;  // 1/phi
    double width_target = tol * (b.hi - b.lo);
    double x1 = hi - invphi * (hi - lo);
    double x2 = lo + invphi * (hi - lo);
    double f1 = eval(x1), f2 = eval(x2);
    while (hi - lo > width_target) {
        if (f1 <= f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - invphi * (hi - lo);
            f1 = eval(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + invphi * (hi - lo);
            f2 = eval(x2);
        }
        if (x2 <= x1) break;  // bracket collapsed to rounding width
    }
    double xm = f1 <= f2 ? x1 : x2;
    double fm = f1 <= f2 ? f1 : f2;
    // never report a point worse than the best coarse sample (this also
    // guarantees the result is at or below both endpoint values)
    if (pv[best] < fm) {
        xm = px[best];
        fm = pv[best];
    }
    res.argmin = xm;
    res.min_value = fm;
    return res;
}

}  // namespace resetq
