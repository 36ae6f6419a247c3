#include "resetq/mg1.hpp"

#include <cmath>
#include <cstdio>

#include "resetq/errors.hpp"
#include "resetq/jet.hpp"
#include "resetq/sx_analytics.hpp"

namespace resetq {

namespace {

double policy_mean(const ServiceModel &m, const ResetPolicy &p) {
    return std::visit(
        [&](const auto &v) -> double {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, ResetNone>) return mean_no_reset(m);
            else if constexpr (std::is_same_v<T, ResetPoisson>) return mean_poisson(m, v.rate);
            else if constexpr (std::is_same_v<T, ResetSharp>) return mean_sharp(m, v.period);
            else return mean_generic_reset(m, v.reset_time);
        },
        p);
}

// jet of the service-time transform at s, under the queue's policy; the
// generating-function machinery below needs none or poisson
Jet service_jet(const QueueSpec &q, double s, std::size_t K, double direction) {
    if (std::holds_alternative<ResetNone>(q.policy))
        return service_lt_jet_no_reset(q.service, s, K, direction);
    if (const auto *p = std::get_if<ResetPoisson>(&q.policy))
        return lt_poisson_jet(q.service, s, p->rate, K, direction);
    throw ValidationError(
        "queue-length and sojourn transforms need a none or poisson resetting policy");
}

// first two moments of the service time under the policy
void service_moments(const QueueSpec &q, double *m1, double *m2) {
    if (std::holds_alternative<ResetNone>(q.policy)) {
        double es = mean(q.service.slowdown), es2 = moment(q.service.slowdown, 2);
        double ex = mean(q.service.jobsize), ex2 = moment(q.service.jobsize, 2);
        if (q.service.combiner == Combiner::multiplicative) {
            *m1 = es * ex;
            *m2 = es2 * ex2;
        } else {
            *m1 = es + ex;
            *m2 = es2 + 2.0 * es * ex + ex2;
        }
        return;
    }
    Jet u = service_jet(q, 0.0, 2, 1.0);
    *m1 = -u[1];
    *m2 = 2.0 * u[2];
}

[[noreturn]] void throw_unstable(double rho) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "utilization %.6g is not below 1", rho);
    throw Unstable(buf);
}

double stable_utilization(const QueueSpec &q) {
    double rho = q.arrival_rate * policy_mean(q.service, q.policy);
    if (!(rho < 1.0)) throw_unstable(rho);
    return rho;
}

}  // namespace

void validate(const QueueSpec &q) {
    if (!(q.arrival_rate > 0.0) || !std::isfinite(q.arrival_rate))
        throw ValidationError("arrival rate must be positive and finite");
    validate(q.service);
    validate(q.policy);
}

double utilization(const QueueSpec &q) {
    validate(q);
    return stable_utilization(q);
}

QueueLengthPMF queue_length_pmf(const QueueSpec &q, std::size_t truncation) {
    validate(q);
    double rho = stable_utilization(q);
    double lam = q.arrival_rate;
    std::size_t K = truncation;

    // G(z) = (1 - rho)(1 - z) U(lam(1 - z)) / (U(lam(1 - z)) - z) around z = 0
    Jet u = service_jet(q, lam, K, -lam);
    Jet one_minus_z = Jet::affine(1.0, -1.0, K, 0.0);
    Jet z = Jet::affine(0.0, 1.0, K, 0.0);
    Jet g = (one_minus_z * u * (1.0 - rho)) / (u - z);

    QueueLengthPMF out;
    out.truncation = truncation;
    out.probs.resize(K + 1);
    double sum = 0.0;
    for (std::size_t n = 0; n <= K; ++n) {
        double c = g[n];
        if (c < -1e-6) {
            char buf[112];
            std::snprintf(buf, sizeof buf,
                          "queue-length coefficient %zu is %.3e; series too ill-conditioned",
                          n, c);
            throw SeriesIllConditioned(buf);
        }
        out.probs[n] = c < 0.0 ? 0.0 : c;
        sum += out.probs[n];
    }
    double tail = 1.0 - sum;
    if (tail < -1e-8)
        throw SeriesIllConditioned("queue-length probabilities sum past 1");
    out.tail_mass = tail > 0.0 ? tail : 0.0;
    return out;
}

QueueLengthPMF queue_length_pmf_auto(const QueueSpec &q) {
    for (std::size_t n = 64; n <= 8192; n *= 2) {
        QueueLengthPMF pmf = queue_length_pmf(q, n);
        if (pmf.tail_mass < 1e-6) return pmf;
    }
    throw NonConvergent("queue-length tail mass stays above 1e-6 out to 8192 terms");
}

double mean_queue_length(const QueueSpec &q) {
    validate(q);
    double rho = stable_utilization(q);
    double m1 = 0.0, m2 = 0.0;
    service_moments(q, &m1, &m2);
    double cv2 = (m2 - m1 * m1) / (m1 * m1);
    return rho / (1.0 - rho) + rho * rho * (cv2 - 1.0) / (2.0 * (1.0 - rho));
}

double pgf_derivative_at_one(const QueueSpec &q) {
    validate(q);
    double rho = stable_utilization(q);
    double lam = q.arrival_rate;
    // both numerator and denominator vanish at z = 1; deflate the jets
    Jet u = service_jet(q, 0.0, 3, -lam);
    Jet one_minus_z = Jet::affine(0.0, -1.0, 3, 1.0);
    Jet z = Jet::affine(1.0, 1.0, 3, 1.0);
    Jet num = one_minus_z * u * (1.0 - rho);
    Jet den = u - z;
    Jet g = num.deflated() / den.deflated();
    return g[1];
}

double sojourn_lst(const QueueSpec &q, double s) {
    validate(q);
    if (!(s > 0.0) || !std::isfinite(s))
        throw ValidationError("sojourn transform needs s > 0");
    double rho = stable_utilization(q);
    double u = service_jet(q, s, 0, 1.0)[0];
    return (1.0 - rho) * s * u / (s - q.arrival_rate * (1.0 - u));
}

double mean_sojourn(const QueueSpec &q) {
    validate(q);
    double rho = stable_utilization(q);
    Jet u = service_jet(q, 0.0, 2, 1.0);
    Jet s = Jet::affine(0.0, 1.0, 2, 0.0);
    Jet num = s * u * (1.0 - rho);
    Jet den = s + (u - 1.0) * q.arrival_rate;
    Jet w = num.deflated() / den.deflated();
    return -w[1];
}

}  // namespace resetq
