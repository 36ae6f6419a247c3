#pragma once

#include <cmath>
#include <functional>

#include "resetq/errors.hpp"

namespace resetq {

// Central differences with two Richardson extrapolation levels (kills the
// h^2 and h^4 terms). order 1 -> f', order 2 -> f''. Used as an independent
// cross-check on jet coefficients; target accuracy ~1e-5 relative.
//
// When x > 0 the step shrinks to stay inside (0, 2x), so derivatives of
// functions only defined on the positive half-line work near the origin.
inline double finite_difference(const std::function<double(double)> &f, double x, int order) {
    if (order != 1 && order != 2) throw ValidationError("finite_difference: order must be 1 or 2");
    double h = 1e-2 * (std::fabs(x) + 1.0);
    if (x > 0.0) h = std::min(h, 0.45 * x);
    auto eval = [&](double t) {
        double v = f(t);
        if (!std::isfinite(v)) throw NonFinite("finite_difference: function value not finite");
        return v;
    };
    double d[3];
    double fx = (order == 2) ? eval(x) : 0.0;
    for (int i = 0; i < 3; ++i) {
        double hi = h / (1 << i);
        double fp = eval(x + hi), fmv = eval(x - hi);
        d[i] = (order == 1) ? (fp - fmv) / (2.0 * hi) : (fp - 2.0 * fx + fmv) / (hi * hi);
    }
    double r1 = (4.0 * d[1] - d[0]) / 3.0;
    double r2 = (4.0 * d[2] - d[1]) / 3.0;
    return (16.0 * r2 - r1) / 15.0;
}

// One-sided counterpart for derivatives at a boundary point approached from
// the right (e.g. d/dr at r = 0+ where the function only exists for r > 0).
// Uses forward slopes (f(x+h) - base)/h on a halving sequence and a
// Richardson table that removes the O(h), O(h^2), O(h^3) terms.
inline double forward_difference_at(const std::function<double(double)> &f, double x, double base,
                                    double h0, int levels = 6) {
    if (!(h0 > 0.0) || levels < 2 || levels > 12)
        throw ValidationError("forward_difference_at: bad step or level count");
    double tab[12][12];
    for (int i = 0; i < levels; ++i) {
        double h = h0 / (1 << i);
        double v = f(x + h);
        if (!std::isfinite(v)) throw NonFinite("forward_difference_at: function value not finite");
        tab[i][0] = (v - base) / h;
        for (int m = 1; m <= i; ++m) {
            double p = static_cast<double>(1 << m);
            tab[i][m] = (p * tab[i][m - 1] - tab[i - 1][m - 1]) / (p - 1.0);
        }
    }
    return tab[levels - 1][levels - 1];
}

}  // namespace resetq
