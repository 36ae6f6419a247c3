#pragma once

#include <cstddef>
#include <string>
#include <variant>

#include "resetq/jet.hpp"
#include "resetq/rng.hpp"

namespace resetq {

// The five service-time building blocks. Parameters follow the usual
// conventions: Gamma{shape, scale} has mean shape*scale; InverseGaussian
// {mean, shape} has variance mean^3/shape; LogNormal{mu, sigma} is
// exp(Normal(mu, sigma^2)).
struct Exponential {
    double rate;  // E[T] = 1/rate
};
struct Gamma {
    double shape, scale;
};
struct InverseGaussian {
    double mean, shape;
};
struct LogNormal {
    double mu, sigma;
};
struct Deterministic {
    double value;  // unit point mass at `value`
};

using DistributionSpec =
    std::variant<Exponential, Gamma, InverseGaussian, LogNormal, Deterministic>;

// throws ValidationError unless all parameters are valid
void validate(const DistributionSpec &d);
std::string family_name(const DistributionSpec &d);

bool is_atom(const DistributionSpec &d);
// infimum of the support: 0 for the continuous families, the atom for
// Deterministic (drives never-completes detection under sharp resetting)
double support_lower(const DistributionSpec &d);

// Density and CDF. density() on Deterministic is an error at the atom
// (no density exists there) and 0 elsewhere.
double density(const DistributionSpec &d, double t);
double cdf(const DistributionSpec &d, double t);
// inverse CDF for p in (0,1); closed forms where available, otherwise
// safeguarded bisection on the closed-form CDF
double quantile(const DistributionSpec &d, double p);

// raw moments E[T^k], closed form, k in 1..4
double moment(const DistributionSpec &d, int k);
double mean(const DistributionSpec &d);
double variance(const DistributionSpec &d);

// Laplace transform machinery. laplace(d, s, K) returns the jet of
// s' -> E[e^{-s' T}] at s: coeff[k] = (-1)^k E[T^k e^{-sT}] / k!.
// Negative s is allowed exactly when E[e^{-sT}] exists:
//   Exponential: -s < rate;  Gamma: -s < 1/scale;
//   InverseGaussian: -s <= shape/(2 mean^2) (boundary included, value only);
//   Deterministic: always;   LogNormal: never.
// Violations throw DivergentTransform (decided analytically, not by watching
// quadrature blow up). LogNormal has no closed form and is evaluated by
// Gauss-Hermite quadrature with node doubling to 1e-8 relative agreement.
Jet laplace(const DistributionSpec &d, double s, std::size_t K);
// directional variant: coeff[k] = L^(k)(s) * direction^k / k!, i.e. the jet
// of z -> L(s + direction*z) at z=0. Internal building block for PGFs where
// direction = -lambda keeps high-order coefficients bounded.
Jet laplace_jet(const DistributionSpec &d, double s, std::size_t K, double direction);
// scalar fast path, same domain rules
double laplace_value(const DistributionSpec &d, double s);
// L(s) - 1 computed without cancellation near s = 0 (expm1/log1p forms per
// family); the small-resetting-rate limits live and die by this
double laplace_minus_one(const DistributionSpec &d, double s);
// 1 - L(s), same guarantees
double one_minus_laplace(const DistributionSpec &d, double s);
// infimum of admissible transform arguments (-rate for Exponential, ...,
// -inf for Deterministic, 0 for LogNormal)
double laplace_domain_min(const DistributionSpec &d);

// one draw from the family's law
double sample(const DistributionSpec &d, RngStream &rng);

}  // namespace resetq
