#include "resetq/scenario.hpp"

#include <fstream>
#include <initializer_list>
#include <sstream>

#include "json.hpp"
#include "resetq/errors.hpp"

namespace resetq {

namespace {

using nlohmann::ordered_json;

[[noreturn]] void fail(const std::string &path, const std::string &msg) {
    throw ValidationError(path.empty() ? msg : path + ": " + msg);
}

const ordered_json &need(const ordered_json &j, const char *key, const std::string &path) {
    const auto it = j.find(key);
    if (it == j.end()) fail(path, std::string("missing field '") + key + "'");
    return *it;
}

void reject_unknown(const ordered_json &j, std::initializer_list<const char *> allowed,
                    const std::string &path) {
    for (const auto &item : j.items()) {
        bool known = false;
        for (const char *k : allowed)
            if (item.key() == k) {
                known = true;
                break;
            }
        if (!known) fail(path, "unknown field '" + item.key() + "'");
    }
}

const ordered_json &need_object(const ordered_json &j, const char *key, const std::string &path) {
    const auto &v = need(j, key, path);
    if (!v.is_object()) fail(path, std::string("field '") + key + "' must be an object");
    return v;
}

double need_number(const ordered_json &j, const char *key, const std::string &path) {
    const auto &v = need(j, key, path);
    if (!v.is_number()) fail(path, std::string("field '") + key + "' must be a number");
    return v.get<double>();
}

std::string need_string(const ordered_json &j, const char *key, const std::string &path) {
    const auto &v = need(j, key, path);
    if (!v.is_string()) fail(path, std::string("field '") + key + "' must be a string");
    return v.get<std::string>();
}

std::uint64_t need_unsigned(const ordered_json &j, const char *key, const std::string &path) {
    const auto &v = need(j, key, path);
    if (!v.is_number_unsigned())
        fail(path, std::string("field '") + key + "' must be a non-negative integer");
    return v.get<std::uint64_t>();
}

DistributionSpec parse_distribution(const ordered_json &j, const std::string &path) {
    if (!j.is_object()) fail(path, "must be an object");
    const std::string kind = need_string(j, "kind", path);
    DistributionSpec d;
    if (kind == "exponential") {
        reject_unknown(j, {"kind", "rate"}, path);
        d = Exponential{need_number(j, "rate", path)};
    } else if (kind == "gamma") {
        reject_unknown(j, {"kind", "shape", "scale"}, path);
        d = Gamma{need_number(j, "shape", path), need_number(j, "scale", path)};
    } else if (kind == "inverse_gaussian") {
        reject_unknown(j, {"kind", "mean", "shape"}, path);
        d = InverseGaussian{need_number(j, "mean", path), need_number(j, "shape", path)};
    } else if (kind == "lognormal") {
        reject_unknown(j, {"kind", "mu", "sigma"}, path);
        d = LogNormal{need_number(j, "mu", path), need_number(j, "sigma", path)};
    } else if (kind == "deterministic") {
        reject_unknown(j, {"kind", "value"}, path);
        d = Deterministic{need_number(j, "value", path)};
    } else {
        fail(path, "unknown distribution kind '" + kind + "'");
    }
    try {
        validate(d);
    } catch (const ValidationError &e) {
        fail(path, e.what());
    }
    return d;
}

ResetPolicy parse_policy(const ordered_json &j, const std::string &path) {
    if (!j.is_object()) fail(path, "must be an object");
    const std::string kind = need_string(j, "kind", path);
    ResetPolicy p;
    if (kind == "none") {
        reject_unknown(j, {"kind"}, path);
        p = ResetNone{};
    } else if (kind == "poisson") {
        reject_unknown(j, {"kind", "rate"}, path);
        p = ResetPoisson{need_number(j, "rate", path)};
    } else if (kind == "sharp") {
        reject_unknown(j, {"kind", "period"}, path);
        p = ResetSharp{need_number(j, "period", path)};
    } else if (kind == "renewal") {
        reject_unknown(j, {"kind", "reset_time"}, path);
        p = ResetRenewal{
            parse_distribution(need_object(j, "reset_time", path), path + ".reset_time")};
    } else {
        fail(path, "unknown policy kind '" + kind + "'");
    }
    try {
        validate(p);
    } catch (const ValidationError &e) {
        fail(path, e.what());
    }
    return p;
}

ArrivalProcess parse_arrival(const ordered_json &j, const std::string &path) {
    if (!j.is_object()) fail(path, "must be an object");
    const std::string kind = need_string(j, "kind", path);
    if (kind == "poisson") {
        reject_unknown(j, {"kind", "rate"}, path);
        const double rate = need_number(j, "rate", path);
        if (!(rate > 0.0) || !std::isfinite(rate))
            fail(path, "field 'rate' must be positive and finite");
        return PoissonArrival{rate};
    }
    if (kind == "renewal") {
        reject_unknown(j, {"kind", "law"}, path);
        auto law = parse_distribution(need_object(j, "law", path), path + ".law");
        if (!(mean(law) > 0.0)) fail(path, "interarrival law must have positive mean");
        return RenewalArrival{std::move(law)};
    }
    fail(path, "unknown arrival kind '" + kind + "'");
}

ordered_json distribution_json(const DistributionSpec &d) {
    ordered_json j;
    std::visit(
        [&j](const auto &f) {
            using T = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<T, Exponential>) {
                j["kind"] = "exponential";
                j["rate"] = f.rate;
            } else if constexpr (std::is_same_v<T, Gamma>) {
                j["kind"] = "gamma";
                j["shape"] = f.shape;
                j["scale"] = f.scale;
            } else if constexpr (std::is_same_v<T, InverseGaussian>) {
                j["kind"] = "inverse_gaussian";
                j["mean"] = f.mean;
                j["shape"] = f.shape;
            } else if constexpr (std::is_same_v<T, LogNormal>) {
                j["kind"] = "lognormal";
                j["mu"] = f.mu;
                j["sigma"] = f.sigma;
            } else {
                j["kind"] = "deterministic";
                j["value"] = f.value;
            }
        },
        d);
    return j;
}

}  // namespace

Scenario parse_scenario(const std::string &json_text) {
    ordered_json root;
    try {
        root = ordered_json::parse(json_text);
    } catch (const nlohmann::json::parse_error &e) {
        throw ValidationError(std::string("scenario is not valid JSON: ") + e.what());
    }
    if (!root.is_object()) fail("", "scenario must be a JSON object");
    reject_unknown(root, {"description", "model", "policy", "arrival", "sim"}, "");

    Scenario s;
    if (root.contains("description"))
        s.description = need_string(root, "description", "");

    const auto &model = need_object(root, "model", "");
    reject_unknown(model, {"combiner", "slowdown", "jobsize"}, "model");
    const std::string comb = need_string(model, "combiner", "model");
    if (comb == "multiplicative") s.model.combiner = Combiner::multiplicative;
    else if (comb == "additive") s.model.combiner = Combiner::additive;
    else fail("model", "combiner must be 'multiplicative' or 'additive'");
    s.model.slowdown =
        parse_distribution(need_object(model, "slowdown", "model"), "model.slowdown");
    s.model.jobsize = parse_distribution(need_object(model, "jobsize", "model"), "model.jobsize");
    validate(s.model);

    if (root.contains("policy")) s.policy = parse_policy(root["policy"], "policy");

    if (root.contains("arrival")) s.arrival = parse_arrival(root["arrival"], "arrival");

    if (root.contains("sim")) {
        const auto &sim = root["sim"];
        if (!sim.is_object()) fail("sim", "must be an object");
        reject_unknown(sim, {"horizon", "warmup_fraction", "replications", "seed"}, "sim");
        if (sim.contains("horizon")) {
            s.sim.horizon = need_number(sim, "horizon", "sim");
            if (!(s.sim.horizon > 0.0) || !std::isfinite(s.sim.horizon))
                fail("sim", "horizon must be positive and finite");
        }
        if (sim.contains("warmup_fraction")) {
            s.sim.warmup_fraction = need_number(sim, "warmup_fraction", "sim");
            if (!(s.sim.warmup_fraction >= 0.0 && s.sim.warmup_fraction <= 0.5))
                fail("sim", "warmup_fraction must lie in [0, 0.5]");
        }
        if (sim.contains("replications")) {
            const std::uint64_t r = need_unsigned(sim, "replications", "sim");
            if (r < 1) fail("sim", "replications must be at least 1");
            s.sim.replications = static_cast<std::size_t>(r);
        }
        if (sim.contains("seed")) s.sim.seed = need_unsigned(sim, "seed", "sim");
    }
    return s;
}

Scenario load_scenario(const std::string &path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot read scenario file '" + path + "'");
    std::ostringstream text;
    text << in.rdbuf();
    return parse_scenario(text.str());
}

std::string canonical_scenario(const Scenario &s) {
    ordered_json root;
    if (s.description) root["description"] = *s.description;

    ordered_json model;
    model["combiner"] = combiner_name(s.model.combiner);
    model["slowdown"] = distribution_json(s.model.slowdown);
    model["jobsize"] = distribution_json(s.model.jobsize);
    root["model"] = std::move(model);

    ordered_json policy;
    std::visit(
        [&policy](const auto &p) {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, ResetNone>) {
                policy["kind"] = "none";
            } else if constexpr (std::is_same_v<T, ResetPoisson>) {
                policy["kind"] = "poisson";
                policy["rate"] = p.rate;
            } else if constexpr (std::is_same_v<T, ResetSharp>) {
                policy["kind"] = "sharp";
                policy["period"] = p.period;
            } else {
                policy["kind"] = "renewal";
                policy["reset_time"] = distribution_json(p.reset_time);
            }
        },
        s.policy);
    root["policy"] = std::move(policy);

    if (s.arrival) {
        ordered_json arrival;
        if (const auto *p = std::get_if<PoissonArrival>(&*s.arrival)) {
            arrival["kind"] = "poisson";
            arrival["rate"] = p->rate;
        } else {
            arrival["kind"] = "renewal";
            arrival["law"] = distribution_json(std::get<RenewalArrival>(*s.arrival).interarrival);
        }
        root["arrival"] = std::move(arrival);
    }

    ordered_json sim;
    sim["horizon"] = s.sim.horizon;
    sim["warmup_fraction"] = s.sim.warmup_fraction;
    sim["replications"] = s.sim.replications;
    sim["seed"] = s.sim.seed;
    root["sim"] = std::move(sim);

    return root.dump(2) + "\n";
}

}  // namespace resetq
