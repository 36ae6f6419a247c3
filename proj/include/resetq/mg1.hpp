#pragma once

#include <cstddef>
#include <vector>

#include "resetq/service_model.hpp"

namespace resetq {

// Single-server queue with Poisson arrivals and S&X service under a
// resetting policy. Stationary quantities exist only when the utilization
// lambda * E[U] stays below 1.
struct QueueSpec {
    double arrival_rate = 0.0;
    ServiceModel service;
    ResetPolicy policy;
};

struct QueueLengthPMF {
    std::vector<double> probs;  // P(L = n) for n = 0..truncation
    double tail_mass = 0.0;     // 1 - sum(probs), never negative
    std::size_t truncation = 0;
};

void validate(const QueueSpec &q);

// rho = arrival_rate * mean service time under the policy. Works for every
// policy (only the mean is needed); throws Unstable at rho >= 1.
double utilization(const QueueSpec &q);

// Queue-length distribution from the probability generating function,
// truncated after N terms. Needs a transform-friendly policy (none or
// poisson). Coefficients more negative than -1e-6 raise SeriesIllConditioned;
// small negative rounding noise is clipped to zero.
QueueLengthPMF queue_length_pmf(const QueueSpec &q, std::size_t truncation);

// Doubles the truncation until tail_mass < 1e-6.
QueueLengthPMF queue_length_pmf_auto(const QueueSpec &q);

// Mean number in system (queue plus service), from the utilization and the
// squared coefficient of variation of the service time.
double mean_queue_length(const QueueSpec &q);

// Independent route to the same number: derivative of the generating
// function at z = 1. Used to cross-check mean_queue_length.
double pgf_derivative_at_one(const QueueSpec &q);

// Laplace transform of the stationary sojourn time at s > 0, and its mean
// (which satisfies Little's law: mean_queue_length = arrival_rate * mean).
double sojourn_lst(const QueueSpec &q, double s);
double mean_sojourn(const QueueSpec &q);

}  // namespace resetq
