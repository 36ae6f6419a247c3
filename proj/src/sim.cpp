#include "resetq/sim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <thread>

#include "resetq/errors.hpp"
#include "resetq/special.hpp"

namespace resetq {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double draw_interarrival(const ArrivalProcess &a, RngStream &rng) {
    if (const auto *p = std::get_if<PoissonArrival>(&a))
        return -std::log(rng.u01_open()) / p->rate;
    return sample(std::get<RenewalArrival>(a).interarrival, rng);
}

// sharp consumes no randomness, so the per-attempt draw sequence stays easy
// to reason about: job size, then (slowdown, deadline?) per attempt
double draw_deadline(const ResetPolicy &p, RngStream &rng) {
    if (std::holds_alternative<ResetNone>(p)) return kInf;
    if (const auto *po = std::get_if<ResetPoisson>(&p)) return -std::log(rng.u01_open()) / po->rate;
    if (const auto *sh = std::get_if<ResetSharp>(&p)) return sh->period;
    return sample(std::get<ResetRenewal>(p).reset_time, rng);
}

std::size_t worker_count(std::size_t replications) {
    if (const char *env = std::getenv("RESETQ_THREADS")) {
        char *end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v >= 1)
            return std::min(static_cast<std::size_t>(v), replications);
        // a malformed value falls back to the default rather than failing runs
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return std::min<std::size_t>(hw ? hw : 1, replications);
}

ReplicationSummary run_replication(const SimConfig &cfg, std::size_t index) {
    RngStream rng(cfg.seed, index);
    const double horizon = cfg.horizon;
    const double warmup = cfg.warmup_fraction * horizon;

    // FCFS single server: feed the waiting-time recursion job by job. Both
    // event lists come out sorted because departures are nondecreasing here.
    std::vector<double> arrivals, departures;
    double clock = 0.0, prev_departure = 0.0;
    double service_sum = 0.0, sojourn_sum = 0.0;
    std::uint64_t attempt_sum = 0;
    std::size_t in_window = 0;

    while (true) {
        clock += draw_interarrival(cfg.scenario.arrival, rng);
        if (!(clock <= horizon)) break;
        const ServiceSample job = sample_service_time(cfg.scenario.service, cfg.scenario.policy, rng);
        const double depart = std::max(prev_departure, clock) + job.total;
        arrivals.push_back(clock);
        departures.push_back(depart);
        if (clock >= warmup && depart <= horizon) {
            service_sum += job.total;
            sojourn_sum += depart - clock;
            attempt_sum += job.attempts;
            ++in_window;
        }
        prev_departure = depart;
    }
    if (in_window == 0) {
        char buf[96];
        std::snprintf(buf, sizeof buf,
                      "replication %zu completed no jobs inside the measurement window", index);
        throw NonConvergent(buf);
    }

    // integrate the queue-length step function over [warmup, horizon],
    // splitting at the midpoint so a persistent upward drift is visible
    std::vector<double> dwell;
    const double mid = 0.5 * (warmup + horizon);
    double area_first = 0.0, area_second = 0.0;
    auto account = [&](double t0, double t1, std::size_t level) {
        const double lo = std::max(t0, warmup), hi = std::min(t1, horizon);
        if (hi <= lo) return;
        if (dwell.size() <= level) dwell.resize(level + 1, 0.0);
        dwell[level] += hi - lo;
        const double first = std::min(hi, mid) - lo;
        if (first > 0.0) area_first += static_cast<double>(level) * first;
        const double second = hi - std::max(lo, mid);
        if (second > 0.0) area_second += static_cast<double>(level) * second;
    };

    std::size_t ia = 0, id = 0, level = 0;
    double t_prev = 0.0;
    while (id < departures.size()) {
        const double ta = ia < arrivals.size() ? arrivals[ia] : kInf;
        const double td = departures[id];
        const double t = std::min(ta, td);
        if (t > horizon) break;
        account(t_prev, t, level);
        // ties: the departing job leaves before the new one walks in, except
        // that an empty system must admit the arrival first (a zero-length
        // service can make a job depart at its own arrival instant)
        if (td <= ta && level > 0) {
            --level;
            ++id;
        } else {
            ++level;
            ++ia;
        }
        t_prev = t;
    }
    account(t_prev, horizon, level);

    double total_dwell = 0.0;
    for (double d : dwell) total_dwell += d;

    ReplicationSummary out;
    out.queue_length_histogram.resize(dwell.size());
    double area = 0.0;
    for (std::size_t n = 0; n < dwell.size(); ++n) {
        // normalizing by the accumulated total rather than horizon - warmup
        // makes the histogram sum to 1 exactly up to rounding
        out.queue_length_histogram[n] = dwell[n] / total_dwell;
        area += static_cast<double>(n) * dwell[n];
    }
    out.mean_queue_length = area / total_dwell;
    out.mean_service = service_sum / static_cast<double>(in_window);
    out.mean_sojourn = sojourn_sum / static_cast<double>(in_window);
    out.attempts_per_job = static_cast<double>(attempt_sum) / static_cast<double>(in_window);
    out.completed_jobs = in_window;
    out.backlog_at_horizon = static_cast<double>(level);
    const double half = 0.5 * (horizon - warmup);
    out.growing = area_second / half > 1.5 * (area_first / half) + 2.0;
    return out;
}

}  // namespace

SimScenario as_scenario(const QueueSpec &q) {
    return {PoissonArrival{q.arrival_rate}, q.service, q.policy};
}

void validate(const SimConfig &cfg) {
    std::visit(
        [](const auto &a) {
            using T = std::decay_t<decltype(a)>;
            if constexpr (std::is_same_v<T, PoissonArrival>) {
                if (!(a.rate > 0.0) || !std::isfinite(a.rate))
                    throw ValidationError("arrival rate must be positive and finite");
            } else {
                validate(a.interarrival);
                if (!(mean(a.interarrival) > 0.0))
                    throw ValidationError("interarrival law must have positive mean");
            }
        },
        cfg.scenario.arrival);
    validate(cfg.scenario.service);
    validate(cfg.scenario.policy);
    if (!(cfg.horizon > 0.0) || !std::isfinite(cfg.horizon))
        throw ValidationError("horizon must be positive and finite");
    if (!(cfg.warmup_fraction >= 0.0 && cfg.warmup_fraction <= 0.5))
        throw ValidationError("warmup_fraction must lie in [0, 0.5]");
    if (cfg.replications < 1) throw ValidationError("replications must be at least 1");
}

ServiceSample sample_service_time(const ServiceModel &m, const ResetPolicy &p, RngStream &rng,
                                  std::uint64_t attempt_budget) {
    const double x = sample(m.jobsize, rng);
    double total = 0.0;
    for (std::uint64_t attempt = 1; attempt <= attempt_budget; ++attempt) {
        const double s = sample(m.slowdown, rng);
        const double requirement = m.combiner == Combiner::multiplicative ? x * s : x + s;
        const double deadline = draw_deadline(p, rng);
        if (requirement < deadline) return {total + requirement, attempt};
        total += deadline;
    }
    char buf[112];
    std::snprintf(buf, sizeof buf, "no completion within %llu attempts",
                  static_cast<unsigned long long>(attempt_budget));
    throw AttemptBudgetExceeded(buf);
}

SimStats simulate(const SimConfig &cfg) {
    validate(cfg);
    const std::size_t R = cfg.replications;
    std::vector<ReplicationSummary> reps(R);
    std::vector<std::exception_ptr> errors(R);
    std::atomic<bool> give_up{false};
    std::atomic<std::size_t> next{0};

    auto body = [&]() {
        while (!give_up.load(std::memory_order_relaxed)) {
            const std::size_t i = next.fetch_add(1, std::memory_order_relaxed);
            if (i >= R) return;
            try {
                reps[i] = run_replication(cfg, i);
            } catch (...) {
                errors[i] = std::current_exception();
                give_up.store(true, std::memory_order_relaxed);
            }
        }
    };
    const std::size_t workers = worker_count(R);
    if (workers <= 1) {
        body();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (std::size_t k = 0; k < workers; ++k) pool.emplace_back(body);
        for (auto &t : pool) t.join();
    }
    for (std::size_t i = 0; i < R; ++i)
        if (errors[i]) std::rethrow_exception(errors[i]);

    SimStats stats;
    stats.replications = std::move(reps);
    const auto &rs = stats.replications;
    const double tcrit =
        R >= 2 ? student_t_critical(0.95, static_cast<double>(R - 1)) : 0.0;
    auto across = [&](auto pick) {
        double m = 0.0;
        for (const auto &r : rs) m += pick(r);
        m /= static_cast<double>(R);
        double ss = 0.0;
        for (const auto &r : rs) {
            const double d = pick(r) - m;
            ss += d * d;
        }
        Estimate e;
        e.value = m;
        if (R >= 2) e.half_width = tcrit * std::sqrt(ss / static_cast<double>(R - 1) / static_cast<double>(R));
        return e;
    };
    stats.mean_service = across([](const ReplicationSummary &r) { return r.mean_service; });
    stats.mean_queue_length = across([](const ReplicationSummary &r) { return r.mean_queue_length; });
    stats.mean_sojourn = across([](const ReplicationSummary &r) { return r.mean_sojourn; });
    stats.attempts_per_job = across([](const ReplicationSummary &r) { return r.attempts_per_job; });

    std::size_t levels = 0, growing = 0;
    for (const auto &r : rs) {
        levels = std::max(levels, r.queue_length_histogram.size());
        growing += r.growing ? 1 : 0;
        stats.completed_jobs += r.completed_jobs;
    }
    stats.queue_length_histogram.assign(levels, 0.0);
    for (const auto &r : rs)
        for (std::size_t n = 0; n < r.queue_length_histogram.size(); ++n)
            stats.queue_length_histogram[n] += r.queue_length_histogram[n];
    for (auto &v : stats.queue_length_histogram) v /= static_cast<double>(R);
    stats.growing_queue = 2 * growing > R;
    return stats;
}

ComparisonReport compare(const SimStats &stats, const std::vector<NamedValue> &analytic) {
    const std::size_t R = stats.replications.size();
    const double tcrit =
        R >= 2 ? student_t_critical(0.95, static_cast<double>(R - 1)) : 0.0;
    ComparisonReport report;
    for (const auto &ref : analytic) {
        const Estimate *est = nullptr;
        if (ref.quantity == "mean_service") est = &stats.mean_service;
        else if (ref.quantity == "mean_queue_length") est = &stats.mean_queue_length;
        else if (ref.quantity == "mean_sojourn") est = &stats.mean_sojourn;
        else if (ref.quantity == "attempts_per_job") est = &stats.attempts_per_job;
        else throw ValidationError("unknown comparison quantity '" + ref.quantity + "'");

        ComparisonLine line;
        line.quantity = ref.quantity;
        line.simulated = est->value;
        line.half_width = est->half_width;
        line.analytic = ref.value;
        const double se = tcrit > 0.0 ? est->half_width / tcrit : 0.0;
        const double diff = est->value - ref.value;
        line.z_score = se > 0.0 ? diff / se : (diff == 0.0 ? 0.0 : std::copysign(kInf, diff));
        line.pass = std::fabs(diff) <= est->half_width;
        report.all_pass = report.all_pass && line.pass;
        report.lines.push_back(std::move(line));
    }
    return report;
}

ChiSquareReport histogram_vs_pmf(const SimStats &stats, const QueueLengthPMF &pmf, double level) {
    const auto &reps = stats.replications;
    const std::size_t R = reps.size();
    if (R < 2) throw ValidationError("histogram comparison needs at least two replications");
    if (!(level > 0.0 && level < 1.0))
        throw ValidationError("significance level must lie in (0,1)");

    const double kMinMass = 1e-4;
    std::vector<std::size_t> kept;
    double tail_target = pmf.tail_mass;
    for (std::size_t n = 0; n < pmf.probs.size(); ++n) {
        if (pmf.probs[n] >= kMinMass) kept.push_back(n);
        else tail_target += pmf.probs[n];
    }
    if (kept.empty()) throw ValidationError("no pmf level carries enough mass to test");

    // cells 0..kept-1 are individual queue lengths, the last cell pools
    // everything else (thin levels plus the pmf's truncation tail)
    auto rep_cell = [&](const ReplicationSummary &r, std::size_t cell) {
        if (cell < kept.size()) {
            const std::size_t n = kept[cell];
            return n < r.queue_length_histogram.size() ? r.queue_length_histogram[n] : 0.0;
        }
        double rest = 1.0;
        for (std::size_t n : kept)
            if (n < r.queue_length_histogram.size()) rest -= r.queue_length_histogram[n];
        return rest;
    };

    const std::size_t cells = kept.size() + 1;
    ChiSquareReport report;
    report.dof = cells - 1;  // the cell fractions sum to one in every replication
    for (std::size_t c = 0; c < cells; ++c) {
        const double target = c < kept.size() ? pmf.probs[kept[c]] : tail_target;
        double m = 0.0;
        for (const auto &r : reps) m += rep_cell(r, c);
        m /= static_cast<double>(R);
        double ss = 0.0;
        for (const auto &r : reps) {
            const double d = rep_cell(r, c) - m;
            ss += d * d;
        }
        const double var_of_mean = ss / static_cast<double>(R - 1) / static_cast<double>(R);
        const double diff = m - target;
        // each standardized cell is nearer Student-t than normal, so the
        // chi-square reference is slightly permissive to reject at small
        // replication counts; immaterial at the 0.1% levels used here
        if (var_of_mean > 0.0) report.statistic += diff * diff / var_of_mean;
        else if (diff != 0.0) report.statistic = kInf;
    }
    report.p_value =
        std::isfinite(report.statistic)
            ? chi_square_sf(report.statistic, static_cast<double>(report.dof))
            : 0.0;
    report.pass = report.p_value > level;
    return report;
}

}  // namespace resetq
