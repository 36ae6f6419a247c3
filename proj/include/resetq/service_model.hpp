#pragma once

#include <variant>

#include "resetq/distribution.hpp"

namespace resetq {

// How a job's service requirement combines the server slowdown S (redrawn on
// every attempt) with the job's inherent size X (drawn once per job):
// multiplicative service is S*X, additive service is S+X.
enum class Combiner { multiplicative, additive };

struct ServiceModel {
    Combiner combiner;
    DistributionSpec slowdown;  // S
    DistributionSpec jobsize;   // X
};

// Resetting policies. Every reset aborts the attempt in progress and restarts
// service with a fresh slowdown draw; the job size is kept.
struct ResetNone {};
struct ResetPoisson {
    double rate;  // resets arrive at exponential intervals with this rate
};
struct ResetSharp {
    double period;  // reset exactly this long into every attempt
};
struct ResetRenewal {
    DistributionSpec reset_time;  // fresh draw per attempt
};

using ResetPolicy = std::variant<ResetNone, ResetPoisson, ResetSharp, ResetRenewal>;

void validate(const ServiceModel &m);
void validate(const ResetPolicy &p);
std::string policy_name(const ResetPolicy &p);
std::string combiner_name(Combiner c);

// Whether introducing a vanishingly small Poisson resetting rate lowers the
// mean service time. The threshold compares condition_lhs against
// condition_rhs: coefficient of variation of S versus 1 in the multiplicative
// model, variance surplus sigma^2(S)-sigma^2(X) versus (E[X]+E[S])^2 in the
// additive model.
struct BenefitReport {
    double mean_no_reset;
    double slope_at_zero;  // d mean / d rate at rate -> 0+
    bool beneficial;
    double condition_lhs;
    double condition_rhs;
};

}  // namespace resetq
