#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <variant>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "resetq/errors.hpp"
#include "resetq/mg1.hpp"
#include "resetq/scenario.hpp"
#include "resetq/sim.hpp"
#include "resetq/sx_analytics.hpp"

namespace {

using nlohmann::ordered_json;
using namespace resetq;

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

struct Options {
    std::string scenario_path;
    std::string out_path;
    std::string format;  // empty = command default
    std::uint64_t seed = 0;
    bool seed_given = false;
    bool print_config = false;
};

void emit(const Options &opt, const std::string &text) {
    if (opt.out_path.empty()) {
        std::fputs(text.c_str(), stdout);
        return;
    }
    std::ofstream out(opt.out_path, std::ios::binary);
    if (!out) throw ValidationError("cannot open output file '" + opt.out_path + "'");
    out << text;
}

std::string pick_format(const Options &opt, const char *fallback) {
    return opt.format.empty() ? fallback : opt.format;
}

std::string csv_table(const std::vector<std::string> &header,
                      const std::vector<std::vector<std::string>> &rows) {
    std::string out;
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (i) out += ',';
        out += header[i];
    }
    out += '\n';
    for (const auto &row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out += ',';
            out += row[i];
        }
        out += '\n';
    }
    return out;
}

std::string json_text(const ordered_json &j) { return j.dump(2) + "\n"; }

SimConfig sim_config(const Scenario &scn, const Options &opt) {
    if (!scn.arrival)
        throw ValidationError("this command needs an 'arrival' section in the scenario");
    SimConfig cfg;
    cfg.scenario = {*scn.arrival, scn.model, scn.policy};
    cfg.horizon = scn.sim.horizon;
    cfg.warmup_fraction = scn.sim.warmup_fraction;
    cfg.replications = scn.sim.replications;
    cfg.seed = opt.seed_given ? opt.seed : scn.sim.seed;
    return cfg;
}

QueueSpec queue_spec(const Scenario &scn) {
    if (!scn.arrival)
        throw ValidationError("this command needs an 'arrival' section in the scenario");
    const auto *p = std::get_if<PoissonArrival>(&*scn.arrival);
    if (!p) throw ValidationError("queue-length statistics need poisson arrivals");
    return {p->rate, scn.model, scn.policy};
}

const char *monotone_name(Monotone m) {
    switch (m) {
        case Monotone::increasing: return "increasing";
        case Monotone::decreasing: return "decreasing";
        default: return "no";
    }
}

int cmd_mean_curve(const Options &opt, const Scenario &scn, const std::string &param,
                   const std::vector<double> &grid, bool with_sim) {
    if (grid.empty()) throw ValidationError("--grid needs at least one value");
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!(grid[i] >= 0.0) || !std::isfinite(grid[i]))
            throw ValidationError("grid values must be non-negative and finite");
        if (i && !(grid[i] > grid[i - 1]))
            throw ValidationError("grid values must be strictly ascending");
    }

    std::vector<std::vector<std::string>> rows;
    ordered_json jrows = ordered_json::array();
    for (double v : grid) {
        std::vector<std::string> row{num(v)};
        ordered_json jr;
        jr["param_value"] = v;
        // a failing row becomes an error cell and the sweep moves on
        try {
            double m;
            if (param == "rate")
                m = v == 0.0 ? mean_no_reset(scn.model) : mean_poisson(scn.model, v);
            else
                m = mean_sharp(scn.model, v);
            row.push_back(num(m));
            jr["mean_analytic"] = m;
            jr["error"] = nullptr;
        } catch (const Error &e) {
            row.push_back(e.name());
            jr["mean_analytic"] = nullptr;
            jr["error"] = e.name();
        }
        if (with_sim) {
            try {
                SimConfig cfg = sim_config(scn, opt);
                if (param == "rate")
                    cfg.scenario.policy = v == 0.0 ? ResetPolicy{ResetNone{}}
                                                   : ResetPolicy{ResetPoisson{v}};
                else
                    cfg.scenario.policy = ResetSharp{v};
                const SimStats stats = simulate(cfg);
                row.push_back(num(stats.mean_service.value));
                row.push_back(num(stats.mean_service.half_width));
                jr["mean_sim"] = stats.mean_service.value;
                jr["sim_ci"] = stats.mean_service.half_width;
            } catch (const Error &e) {
                row.push_back(e.name());
                row.push_back("");
                jr["mean_sim"] = nullptr;
                jr["sim_ci"] = nullptr;
            }
        } else {
            row.push_back("");
            row.push_back("");
        }
        rows.push_back(std::move(row));
        jrows.push_back(std::move(jr));
    }

    if (pick_format(opt, "csv") == "csv")
        emit(opt, csv_table({"param_value", "mean_analytic", "mean_sim", "sim_ci"}, rows));
    else
        emit(opt, json_text(jrows));
    return 0;
}

struct Sweep {
    bool on_slowdown = true;
    std::string field;
    std::vector<double> values;
};

Sweep parse_sweep(const std::string &text) {
    const auto eq = text.find('=');
    if (eq == std::string::npos || eq == 0)
        throw ValidationError("sweep must look like slowdown.shape=0.1,0.2,0.3");
    const std::string path = text.substr(0, eq);
    Sweep sweep;
    if (path.rfind("slowdown.", 0) == 0) {
        sweep.on_slowdown = true;
        sweep.field = path.substr(9);
    } else if (path.rfind("jobsize.", 0) == 0) {
        sweep.on_slowdown = false;
        sweep.field = path.substr(8);
    } else {
        throw ValidationError("sweep target must be slowdown.<field> or jobsize.<field>");
    }
    std::string rest = text.substr(eq + 1);
    std::size_t pos = 0;
    while (pos <= rest.size()) {
        const auto comma = std::min(rest.find(',', pos), rest.size());
        const std::string piece = rest.substr(pos, comma - pos);
        std::size_t used = 0;
        double v;
        try {
            v = std::stod(piece, &used);
        } catch (const std::exception &) {
            throw ValidationError("sweep value '" + piece + "' is not a number");
        }
        if (used != piece.size())
            throw ValidationError("sweep value '" + piece + "' is not a number");
        sweep.values.push_back(v);
        pos = comma + 1;
    }
    if (sweep.values.empty()) throw ValidationError("sweep needs at least one value");
    return sweep;
}

void set_field(DistributionSpec &d, const std::string &field, double v) {
    bool ok = false;
    std::visit(
        [&](auto &f) {
            using T = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<T, Exponential>) {
                if (field == "rate") { f.rate = v; ok = true; }
            } else if constexpr (std::is_same_v<T, Gamma>) {
                if (field == "shape") { f.shape = v; ok = true; }
                if (field == "scale") { f.scale = v; ok = true; }
            } else if constexpr (std::is_same_v<T, InverseGaussian>) {
                if (field == "mean") { f.mean = v; ok = true; }
                if (field == "shape") { f.shape = v; ok = true; }
            } else if constexpr (std::is_same_v<T, LogNormal>) {
                if (field == "mu") { f.mu = v; ok = true; }
                if (field == "sigma") { f.sigma = v; ok = true; }
            } else {
                if (field == "value") { f.value = v; ok = true; }
            }
        },
        d);
    if (!ok)
        throw ValidationError("the " + family_name(d) + " family has no field '" + field + "'");
}

int cmd_condition(const Options &opt, const Scenario &scn, const std::string &sweep_a,
                  const std::string &sweep_b) {
    if (sweep_a.empty()) {
        const BenefitReport rep = benefit_diagnosis(scn.model);
        if (pick_format(opt, "json") == "json") {
            ordered_json j;
            j["mean_no_reset"] = rep.mean_no_reset;
            j["slope_at_zero"] = rep.slope_at_zero;
            j["beneficial"] = rep.beneficial;
            j["condition_lhs"] = rep.condition_lhs;
            j["condition_rhs"] = rep.condition_rhs;
            emit(opt, json_text(j));
        } else {
            emit(opt, csv_table({"mean_no_reset", "slope_at_zero", "beneficial",
                                 "condition_lhs", "condition_rhs"},
                                {{num(rep.mean_no_reset), num(rep.slope_at_zero),
                                  rep.beneficial ? "1" : "0", num(rep.condition_lhs),
                                  num(rep.condition_rhs)}}));
        }
        return 0;
    }

    const Sweep a = parse_sweep(sweep_a);
    const Sweep b = parse_sweep(sweep_b);
    std::vector<std::vector<std::string>> rows;
    ordered_json jrows = ordered_json::array();
    for (double va : a.values) {
        for (double vb : b.values) {
            ServiceModel m = scn.model;
            set_field(a.on_slowdown ? m.slowdown : m.jobsize, a.field, va);
            set_field(b.on_slowdown ? m.slowdown : m.jobsize, b.field, vb);
            const BenefitReport rep = benefit_diagnosis(m);
            rows.push_back({num(va), num(vb), rep.beneficial ? "1" : "0",
                            num(rep.slope_at_zero), num(rep.condition_lhs),
                            num(rep.condition_rhs)});
            ordered_json jr;
            jr["value_a"] = va;
            jr["value_b"] = vb;
            jr["beneficial"] = rep.beneficial;
            jr["slope_at_zero"] = rep.slope_at_zero;
            jr["condition_lhs"] = rep.condition_lhs;
            jr["condition_rhs"] = rep.condition_rhs;
            jrows.push_back(std::move(jr));
        }
    }
    if (pick_format(opt, "csv") == "csv")
        emit(opt, csv_table({"value_a", "value_b", "beneficial", "slope_at_zero",
                             "condition_lhs", "condition_rhs"},
                            rows));
    else
        emit(opt, json_text(jrows));
    return 0;
}

int cmd_optimize(const Options &opt, const Scenario &scn, std::string which) {
    if (which.empty()) {
        if (std::holds_alternative<ResetPoisson>(scn.policy)) which = "poisson";
        else if (std::holds_alternative<ResetSharp>(scn.policy)) which = "sharp";
        else
            throw ValidationError(
                "the scenario policy is neither poisson nor sharp; pass --policy");
    }
    const OptimalPolicy best =
        which == "poisson" ? optimal_poisson_rate(scn.model) : optimal_sharp_period(scn.model);

    if (pick_format(opt, "json") == "json") {
        ordered_json j;
        j["policy"] = which;
        if (std::isfinite(best.parameter)) j["parameter"] = best.parameter;
        else j["parameter"] = nullptr;  // sharp resetting never helps: no finite period
        j["mean"] = best.mean;
        j["mean_no_reset"] = best.mean_no_reset;
        j["monotone"] = monotone_name(best.monotone);
        emit(opt, json_text(j));
    } else {
        emit(opt, csv_table({"policy", "parameter", "mean", "mean_no_reset", "monotone"},
                            {{which, num(best.parameter), num(best.mean),
                              num(best.mean_no_reset), monotone_name(best.monotone)}}));
    }
    return 0;
}

int cmd_queue_pmf(const Options &opt, const Scenario &scn, std::size_t truncate, bool with_sim) {
    const QueueSpec q = queue_spec(scn);
    const QueueLengthPMF pmf =
        truncate == 0 ? queue_length_pmf_auto(q) : queue_length_pmf(q, truncate);

    std::vector<double> sim_hist;
    if (with_sim) sim_hist = simulate(sim_config(scn, opt)).queue_length_histogram;
    auto sim_at = [&](std::size_t n) { return n < sim_hist.size() ? sim_hist[n] : 0.0; };

    if (pick_format(opt, "csv") == "csv") {
        std::vector<std::vector<std::string>> rows;
        for (std::size_t n = 0; n < pmf.probs.size(); ++n) {
            std::vector<std::string> row{std::to_string(n), num(pmf.probs[n])};
            row.push_back(with_sim ? num(sim_at(n)) : std::string());
            rows.push_back(std::move(row));
        }
        emit(opt, csv_table({"n", "p_analytic", "p_sim"}, rows));
    } else {
        ordered_json j;
        j["truncation"] = pmf.truncation;
        j["tail_mass"] = pmf.tail_mass;
        j["probs"] = pmf.probs;
        if (with_sim) j["sim_histogram"] = sim_hist;
        emit(opt, json_text(j));
    }
    return 0;
}

ordered_json estimate_json(const Estimate &e) {
    ordered_json j;
    j["value"] = e.value;
    j["half_width"] = e.half_width;
    return j;
}

int cmd_simulate(const Options &opt, const Scenario &scn) {
    const SimConfig cfg = sim_config(scn, opt);
    const SimStats stats = simulate(cfg);

    if (pick_format(opt, "json") == "json") {
        ordered_json j;
        j["replications"] = cfg.replications;
        j["horizon"] = cfg.horizon;
        j["warmup_fraction"] = cfg.warmup_fraction;
        j["seed"] = cfg.seed;
        j["mean_service"] = estimate_json(stats.mean_service);
        j["mean_queue_length"] = estimate_json(stats.mean_queue_length);
        j["mean_sojourn"] = estimate_json(stats.mean_sojourn);
        j["attempts_per_job"] = estimate_json(stats.attempts_per_job);
        j["completed_jobs"] = stats.completed_jobs;
        j["growing_queue"] = stats.growing_queue;
        j["queue_length_histogram"] = stats.queue_length_histogram;
        emit(opt, json_text(j));
    } else {
        emit(opt, csv_table(
                      {"mean_service", "mean_service_hw", "mean_queue_length",
                       "mean_queue_length_hw", "mean_sojourn", "mean_sojourn_hw",
                       "attempts_per_job", "attempts_per_job_hw", "completed_jobs",
                       "growing_queue"},
                      {{num(stats.mean_service.value), num(stats.mean_service.half_width),
                        num(stats.mean_queue_length.value),
                        num(stats.mean_queue_length.half_width), num(stats.mean_sojourn.value),
                        num(stats.mean_sojourn.half_width), num(stats.attempts_per_job.value),
                        num(stats.attempts_per_job.half_width),
                        std::to_string(stats.completed_jobs),
                        stats.growing_queue ? "1" : "0"}}));
    }
    return 0;
}

}  // namespace

int main(int argc, char **argv) {
    CLI::App app{"Service times and queues under service resetting"};
    app.fallthrough();
    Options opt;
    app.add_option("--scenario", opt.scenario_path, "scenario JSON file");
    auto *seed_opt = app.add_option("--seed", opt.seed, "override the scenario's simulation seed");
    app.add_option("--out", opt.out_path, "write output to this file instead of stdout");
    app.add_option("--format", opt.format, "output format (default depends on the command)")
        ->check(CLI::IsMember({"csv", "json"}));
    app.add_flag("--print-config", opt.print_config,
                 "echo the canonical scenario instead of running");

    std::string mc_param;
    std::vector<double> mc_grid;
    bool mc_sim = false;
    auto *mean_curve =
        app.add_subcommand("mean-curve", "mean service time across a resetting parameter grid");
    mean_curve->add_option("--param", mc_param, "which parameter the grid varies")
        ->required()
        ->check(CLI::IsMember({"rate", "period"}));
    mean_curve->add_option("--grid", mc_grid, "comma-separated ascending values")
        ->required()
        ->delimiter(',');
    mean_curve->add_flag("--sim", mc_sim, "add simulated columns");

    std::string sweep_a, sweep_b;
    auto *condition =
        app.add_subcommand("condition", "does a vanishing resetting rate lower the mean");
    auto *oa = condition->add_option("--sweep-a", sweep_a,
                                     "outer sweep, e.g. slowdown.shape=0.1,0.2,0.4");
    auto *ob = condition->add_option("--sweep-b", sweep_b,
                                     "inner sweep, e.g. jobsize.value=0.5,1.0");
    oa->needs(ob);
    ob->needs(oa);

    std::string opt_policy;
    auto *optimize = app.add_subcommand("optimize", "minimize the mean service time");
    optimize->add_option("--policy", opt_policy, "poisson or sharp (default: scenario policy)")
        ->check(CLI::IsMember({"poisson", "sharp"}));

    std::size_t truncate = 0;
    bool pmf_sim = false;
    auto *queue_pmf =
        app.add_subcommand("queue-pmf", "stationary queue-length distribution");
    queue_pmf->add_option("--truncate", truncate, "series order (0 = automatic)");
    queue_pmf->add_flag("--sim", pmf_sim, "add a simulated column");

    auto *sim_cmd = app.add_subcommand("simulate", "run the discrete-event simulator");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp &e) {
        return app.exit(e);
    } catch (const CLI::ParseError &e) {
        app.exit(e);
        return 2;
    }
    opt.seed_given = seed_opt->count() > 0;

    try {
        if (opt.scenario_path.empty()) throw ValidationError("--scenario is required");
        const Scenario scn = load_scenario(opt.scenario_path);
        if (opt.print_config) {
            Scenario effective = scn;
            if (opt.seed_given) effective.sim.seed = opt.seed;
            emit(opt, canonical_scenario(effective));
            return 0;
        }
        if (mean_curve->parsed()) return cmd_mean_curve(opt, scn, mc_param, mc_grid, mc_sim);
        if (condition->parsed()) return cmd_condition(opt, scn, sweep_a, sweep_b);
        if (optimize->parsed()) return cmd_optimize(opt, scn, opt_policy);
        if (queue_pmf->parsed()) return cmd_queue_pmf(opt, scn, truncate, pmf_sim);
        if (sim_cmd->parsed()) return cmd_simulate(opt, scn);
        std::cerr << app.help();
        return 2;
    } catch (const ValidationError &e) {
        std::cerr << e.what() << '\n';
        return 2;
    } catch (const Error &e) {
        std::cerr << e.what() << '\n';
        return 3;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
