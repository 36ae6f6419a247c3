#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "resetq/mg1.hpp"
#include "resetq/rng.hpp"
#include "resetq/service_model.hpp"

namespace resetq {

// Arrival stream feeding the simulated queue: Poisson (exponential
// interarrivals) or a general renewal process with the given law.
struct PoissonArrival {
    double rate;
};
struct RenewalArrival {
    DistributionSpec interarrival;
};
using ArrivalProcess = std::variant<PoissonArrival, RenewalArrival>;

struct SimScenario {
    ArrivalProcess arrival;
    ServiceModel service;
    ResetPolicy policy;
};

// view an analytic queue description as a simulation scenario
SimScenario as_scenario(const QueueSpec &q);

struct SimConfig {
    SimScenario scenario;
    double horizon = 0.0;          // simulated time per replication
    double warmup_fraction = 0.1;  // leading fraction of the horizon discarded
    std::size_t replications = 1;
    std::uint64_t seed = 0;
};

void validate(const SimConfig &cfg);

// Point estimate with a 95% confidence half-width (Student-t across
// replications; zero when there is a single replication, so `covers` then
// demands an exact match).
struct Estimate {
    double value = 0.0;
    double half_width = 0.0;

    bool covers(double target) const { return std::fabs(value - target) <= half_width; }
};

// Everything one replication measured. Per-job statistics average over the
// jobs that both arrive and depart inside the measurement window
// [warmup, horizon]; time averages integrate the queue-length step function
// over the same window.
struct ReplicationSummary {
    double mean_service = 0.0;
    double mean_queue_length = 0.0;
    double mean_sojourn = 0.0;
    double attempts_per_job = 0.0;
    std::vector<double> queue_length_histogram;  // time fraction at each level
    std::size_t completed_jobs = 0;              // jobs inside the window
    double backlog_at_horizon = 0.0;             // jobs still in system at the end
    bool growing = false;  // second half of the window much fuller than the first
};

struct SimStats {
    Estimate mean_service;
    Estimate mean_queue_length;
    Estimate mean_sojourn;
    Estimate attempts_per_job;
    std::vector<double> queue_length_histogram;  // across-replication average
    std::size_t completed_jobs = 0;              // summed across replications
    bool growing_queue = false;  // majority of replications flagged growth
    std::vector<ReplicationSummary> replications;
};

// Run `replications` independent copies of the queue, each over `horizon`
// simulated time with its own substream RngStream(seed, replication index).
// Queue length counts the job in service. Replications may run on several
// threads (RESETQ_THREADS caps the count); aggregation is ordered by
// replication index, so the result is bit-identical for a given
// (seed, replications) no matter the thread count.
SimStats simulate(const SimConfig &cfg);

// One complete service: job size drawn once, then per attempt a fresh
// slowdown and a fresh reset deadline until the requirement beats the
// deadline strictly. `total` is the sum of interrupted deadlines plus the
// final requirement.
struct ServiceSample {
    double total = 0.0;
    std::uint64_t attempts = 0;
};

// The budget parameter exists for tests that want the error path without
// spinning a billion iterations; production callers keep the default.
ServiceSample sample_service_time(const ServiceModel &m, const ResetPolicy &p, RngStream &rng,
                                  std::uint64_t attempt_budget = 1000000000ull);

// Simulation-versus-analytics scoreboard: one line per supplied reference
// value, matched by quantity name ("mean_service", "mean_queue_length",
// "mean_sojourn", "attempts_per_job").
struct NamedValue {
    std::string quantity;
    double value = 0.0;
};

struct ComparisonLine {
    std::string quantity;
    double simulated = 0.0;
    double half_width = 0.0;
    double analytic = 0.0;
    double z_score = 0.0;  // (simulated - analytic) / standard error
    bool pass = false;     // analytic value inside the 95% interval
};

struct ComparisonReport {
    std::vector<ComparisonLine> lines;
    bool all_pass = true;
};

ComparisonReport compare(const SimStats &stats, const std::vector<NamedValue> &analytic);

// Goodness of fit of the simulated time-averaged queue-length histogram
// against an analytic pmf. Levels with analytic mass below 1e-4 pool into
// one tail cell together with the pmf's own truncation tail; each kept cell
// is standardized by its across-replication variance and the squares summed.
struct ChiSquareReport {
    double statistic = 0.0;
    std::size_t dof = 0;
    double p_value = 0.0;
    bool pass = false;  // p_value above the requested level
};

ChiSquareReport histogram_vs_pmf(const SimStats &stats, const QueueLengthPMF &pmf, double level);

}  // namespace resetq
