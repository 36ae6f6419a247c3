#pragma once

#include <optional>

#include "resetq/jet.hpp"
#include "resetq/minimize.hpp"
#include "resetq/service_model.hpp"

namespace resetq {

// Mean service time with no resetting: E[S]E[X] or E[S]+E[X].
double mean_no_reset(const ServiceModel &m);

// Mean service time under Poisson resetting with rate r > 0. The additive
// model needs E[e^{rX}] finite and throws DivergentTransform otherwise.
double mean_poisson(const ServiceModel &m, double r);

// Jet (in s, at s >= 0, order K <= 128) of the Laplace transform of the
// service time under Poisson resetting with rate r.
Jet lt_poisson(const ServiceModel &m, double s, double r, std::size_t K);

// Directional variant used by the queueing layer: coefficient k carries
// direction^k, so composing with an affine map of s is free.
Jet lt_poisson_jet(const ServiceModel &m, double s, double r, std::size_t K, double direction);

// Jet of the no-reset service-time transform: multiplicative integrates
// S-transform jets over the jobsize law, additive multiplies the two jets.
Jet service_lt_jet_no_reset(const ServiceModel &m, double s, std::size_t K, double direction);

// Mean service time under sharp resetting every tau. Throws NonCompleting
// when some jobsize mass can never finish an attempt (additive tau <= x, or
// a slowdown atom at or above the per-attempt allowance).
double mean_sharp(const ServiceModel &m, double tau);

// Mean service time when each attempt is cut off after an independent copy
// of R. Exponential R reproduces mean_poisson, Deterministic R reproduces
// mean_sharp.
double mean_generic_reset(const ServiceModel &m, const DistributionSpec &reset_time);

// First-order analysis at rate 0: slope of the Poisson mean and the benefit
// condition in threshold form.
BenefitReport benefit_diagnosis(const ServiceModel &m);

// Minimizers over the policy parameter. When the benefit condition fails the
// mean is nondecreasing in the parameter, so the no-reset answer is returned
// with the monotone flag set instead of searching.
struct OptimalPolicy {
    double parameter;  // r* for poisson, tau* for sharp (inf when monotone)
    double mean;
    Monotone monotone;
    double mean_no_reset;
};

OptimalPolicy optimal_poisson_rate(const ServiceModel &m,
                                   std::optional<Bracket> bracket_hint = std::nullopt);
OptimalPolicy optimal_sharp_period(const ServiceModel &m,
                                   std::optional<Bracket> bracket_hint = std::nullopt);

}  // namespace resetq
