#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "resetq/errors.hpp"

namespace resetq {

// Truncated Taylor series ("jet"): c[k] = f^(k)(anchor) / k!.  Keeping the
// coefficients factorial-normalized means they stay O(1) even at order
// several hundred, which is what the PGF coefficient extraction needs.
//
// Arithmetic is exact truncated power-series algebra (Cauchy products,
// series long division, exp/log/sqrt/pow recurrences), so combining
// transforms with +,-,*,/ and exp propagates all derivatives at once.
// Binary ops truncate to the shorter operand's order; the result keeps the
// left operand's anchor (mixing anchors is the caller's mistake).
class Jet {
public:
    Jet() : anchor_(0.0), c_(1, 0.0) {}
    Jet(double anchor, std::size_t order) : anchor_(anchor), c_(order + 1, 0.0) {}

    static Jet constant(double value, std::size_t order, double anchor = 0.0) {
        Jet j(anchor, order);
        j.c_[0] = value;
        return j;
    }

    // the identity map t -> t expanded around `anchor`
    static Jet variable(double anchor, std::size_t order) {
        Jet j(anchor, order);
        j.c_[0] = anchor;
        if (order >= 1) j.c_[1] = 1.0;
        return j;
    }

    // t -> value + slope*(t - anchor); the building block for arguments like
    // s + r or lambda*(1 - z)
    static Jet affine(double value, double slope, std::size_t order, double anchor = 0.0) {
        Jet j(anchor, order);
        j.c_[0] = value;
        if (order >= 1) j.c_[1] = slope;
        return j;
    }

    std::size_t order() const { return c_.size() - 1; }
    double anchor() const { return anchor_; }
    double value() const { return c_[0]; }
    double operator[](std::size_t k) const { return c_[k]; }
    double &operator[](std::size_t k) { return c_[k]; }

    // k-th derivative at the anchor (un-normalized): c[k] * k!
    double derivative(std::size_t k) const {
        double f = 1.0;
        for (std::size_t i = 2; i <= k; ++i) f *= static_cast<double>(i);
        return c_[k] * f;
    }

    // Reinterpret f(s) as g(z) = f(s0 + slope*z) expanded at z = new_anchor:
    // coefficients pick up slope^k.  This is the affine-compose used to turn
    // a transform jet in s into a PGF jet in z.
    Jet compose_affine(double slope, double new_anchor = 0.0) const {
        Jet j(new_anchor, order());
        double p = 1.0;
        for (std::size_t k = 0; k < c_.size(); ++k) {
            j.c_[k] = c_[k] * p;
            p *= slope;
        }
        return j;
    }

    Jet truncated(std::size_t new_order) const {
        Jet j(anchor_, new_order);
        for (std::size_t k = 0; k <= new_order && k <= order(); ++k) j.c_[k] = c_[k];
        return j;
    }

    // Drop the constant term and shift down: (f - f(anchor)) / (t - anchor).
    // Requires order >= 1; the workhorse for deflating removable 0/0 points
    // like (1 - U(s))/s.
    Jet deflated() const {
        Jet j(anchor_, order() - 1);
        for (std::size_t k = 1; k <= order(); ++k) j.c_[k - 1] = c_[k];
        return j;
    }

    Jet operator-() const {
        Jet j(*this);
        for (double &v : j.c_) v = -v;
        return j;
    }

    Jet &operator+=(double a) {
        c_[0] += a;
        return *this;
    }
    Jet &operator-=(double a) {
        c_[0] -= a;
        return *this;
    }
    Jet &operator*=(double a) {
        for (double &v : c_) v *= a;
        return *this;
    }
    Jet &operator/=(double a) { return (*this) *= (1.0 / a); }

    friend Jet operator+(const Jet &a, const Jet &b) {
        std::size_t n = std::min(a.order(), b.order());
        Jet j(a.anchor_, n);
        for (std::size_t k = 0; k <= n; ++k) j.c_[k] = a.c_[k] + b.c_[k];
        return j;
    }
    friend Jet operator-(const Jet &a, const Jet &b) {
        std::size_t n = std::min(a.order(), b.order());
        Jet j(a.anchor_, n);
        for (std::size_t k = 0; k <= n; ++k) j.c_[k] = a.c_[k] - b.c_[k];
        return j;
    }
    // Cauchy product
    friend Jet operator*(const Jet &a, const Jet &b) {
        std::size_t n = std::min(a.order(), b.order());
        Jet j(a.anchor_, n);
        for (std::size_t k = 0; k <= n; ++k) {
            double s = 0.0;
            for (std::size_t i = 0; i <= k; ++i) s += a.c_[i] * b.c_[k - i];
            j.c_[k] = s;
        }
        return j;
    }
    // series long division
    friend Jet operator/(const Jet &a, const Jet &b) {
        if (b.c_[0] == 0.0)
            throw ZeroConstantTermDivision("series division needs a nonzero constant term");
        std::size_t n = std::min(a.order(), b.order());
        Jet j(a.anchor_, n);
        for (std::size_t k = 0; k <= n; ++k) {
            double s = a.c_[k];
            for (std::size_t i = 1; i <= k; ++i) s -= b.c_[i] * j.c_[k - i];
            j.c_[k] = s / b.c_[0];
        }
        return j;
    }

    friend Jet operator+(const Jet &a, double s) {
        Jet j(a);
        j.c_[0] += s;
        return j;
    }
    friend Jet operator+(double s, const Jet &a) { return a + s; }
    friend Jet operator-(const Jet &a, double s) { return a + (-s); }
    friend Jet operator-(double s, const Jet &a) { return (-a) + s; }
    friend Jet operator*(const Jet &a, double s) {
        Jet j(a);
        j *= s;
        return j;
    }
    friend Jet operator*(double s, const Jet &a) { return a * s; }
    friend Jet operator/(const Jet &a, double s) { return a * (1.0 / s); }
    friend Jet operator/(double s, const Jet &a) { return constant(s, a.order(), a.anchor_) / a; }

private:
    double anchor_;
    std::vector<double> c_;
};

// exp of a series: h0 = e^{g0}, h_k = (1/k) sum_{j=1..k} j*g_j*h_{k-j}
inline Jet exp(const Jet &g) {
    Jet h(g.anchor(), g.order());
    h[0] = std::exp(g[0]);
    for (std::size_t k = 1; k <= g.order(); ++k) {
        double s = 0.0;
        for (std::size_t j = 1; j <= k; ++j) s += static_cast<double>(j) * g[j] * h[k - j];
        h[k] = s / static_cast<double>(k);
    }
    return h;
}

// log of a series (g0 > 0): h_k = (g_k - (1/k) sum_{j=1..k-1} j*h_j*g_{k-j}) / g0
inline Jet log(const Jet &g) {
    if (!(g[0] > 0.0)) throw ValidationError("series log needs a positive constant term");
    Jet h(g.anchor(), g.order());
    h[0] = std::log(g[0]);
    for (std::size_t k = 1; k <= g.order(); ++k) {
        double s = static_cast<double>(k) * g[k];
        for (std::size_t j = 1; j < k; ++j) s -= static_cast<double>(j) * h[j] * g[k - j];
        h[k] = s / (static_cast<double>(k) * g[0]);
    }
    return h;
}

// sqrt of a series (g0 > 0): h_k = (g_k - sum_{j=1..k-1} h_j*h_{k-j}) / (2*h0)
inline Jet sqrt(const Jet &g) {
    if (!(g[0] > 0.0)) throw ValidationError("series sqrt needs a positive constant term");
    Jet h(g.anchor(), g.order());
    h[0] = std::sqrt(g[0]);
    for (std::size_t k = 1; k <= g.order(); ++k) {
        double s = g[k];
        for (std::size_t j = 1; j < k; ++j) s -= h[j] * h[k - j];
        h[k] = s / (2.0 * h[0]);
    }
    return h;
}

// g^p for real p (g0 > 0): k*g0*h_k = sum_{j=1..k} ((p+1)j - k) g_j h_{k-j}
inline Jet pow(const Jet &g, double p) {
    if (!(g[0] > 0.0)) throw ValidationError("series pow needs a positive constant term");
    Jet h(g.anchor(), g.order());
    h[0] = std::pow(g[0], p);
    for (std::size_t k = 1; k <= g.order(); ++k) {
        double s = 0.0;
        for (std::size_t j = 1; j <= k; ++j)
            s += ((p + 1.0) * static_cast<double>(j) - static_cast<double>(k)) * g[j] * h[k - j];
        h[k] = s / (static_cast<double>(k) * g[0]);
    }
    return h;
}

}  // namespace resetq
