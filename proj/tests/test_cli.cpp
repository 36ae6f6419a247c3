#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "doctest.h"
#include "json.hpp"
#include "resetq/errors.hpp"
#include "resetq/scenario.hpp"

using namespace resetq;

namespace {

constexpr const char *kCli = RESETQ_CLI_PATH;
constexpr const char *kScenarioDir = RESETQ_SCENARIO_DIR;

struct RunResult {
    int code = -1;
    std::string out;
    std::string err;
};

RunResult run_cli(const std::string &args) {
    static int counter = 0;
    const std::string err_path = "/tmp/resetq_cli_stderr_" + std::to_string(++counter) + ".txt";
    const std::string cmd = std::string(kCli) + " " + args + " 2>" + err_path;
    FILE *pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    RunResult r;
    char buf[4096];
    std::size_t n;
    while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
    const int status = pclose(pipe);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    std::ifstream ef(err_path);
    std::ostringstream es;
    es << ef.rdbuf();
    r.err = es.str();
    std::remove(err_path.c_str());
    return r;
}

std::string bundled(const std::string &name) { return std::string(kScenarioDir) + "/" + name; }

void write_file(const std::string &path, const std::string &text) {
    std::ofstream out(path, std::ios::binary);
    REQUIRE(out.good());
    out << text;
}

const char *kMinimalModel = R"({
  "model": {
    "combiner": "additive",
    "slowdown": {"kind": "exponential", "rate": 1.0},
    "jobsize": {"kind": "deterministic", "value": 1.0}
  }
})";

}  // namespace

TEST_CASE("a complete scenario file parses to the expected value") {
    const Scenario s = load_scenario(bundled("gamma_additive.json"));
    CHECK(s.model.combiner == Combiner::additive);
    const auto *g = std::get_if<Gamma>(&s.model.slowdown);
    REQUIRE(g != nullptr);
    CHECK(g->shape == 0.01);
    CHECK(g->scale == 50.0);
    CHECK(std::get<Deterministic>(s.model.jobsize).value == doctest::Approx(2.0 / 3.0));
    CHECK(std::get<ResetPoisson>(s.policy).rate == 0.2424183451739);
    REQUIRE(s.arrival.has_value());
    CHECK(std::get<PoissonArrival>(*s.arrival).rate == 0.5);
    CHECK(s.sim.horizon == 223000.0);
    CHECK(s.sim.replications == 20);
    CHECK(s.sim.seed == 20260815);
}

TEST_CASE("omitted sections fall back to defaults") {
    const Scenario s = parse_scenario(kMinimalModel);
    CHECK(std::holds_alternative<ResetNone>(s.policy));
    CHECK_FALSE(s.arrival.has_value());
    CHECK_FALSE(s.description.has_value());
    CHECK(s.sim.horizon == 10000.0);
    CHECK(s.sim.warmup_fraction == 0.1);
    CHECK(s.sim.replications == 10);
    CHECK(s.sim.seed == 1);
}

TEST_CASE("malformed scenarios are rejected with a path in the message") {
    auto message_of = [](const std::string &text) {
        try {
            parse_scenario(text);
        } catch (const ValidationError &e) {
            return std::string(e.what());
        }
        return std::string("(no error)");
    };

    CHECK(message_of("{ not json").find("not valid JSON") != std::string::npos);
    CHECK(message_of("[1,2]").find("must be a JSON object") != std::string::npos);
    CHECK(message_of(R"({"mdoel": {}})").find("unknown field 'mdoel'") != std::string::npos);
    CHECK(message_of(R"({})").find("missing field 'model'") != std::string::npos);

    const std::string base = kMinimalModel;
    auto patched = [&](const std::string &from, const std::string &to) {
        std::string t = base;
        t.replace(t.find(from), from.size(), to);
        return t;
    };
    CHECK(message_of(patched("\"rate\": 1.0", "\"rte\": 1.0"))
              .find("model.slowdown: unknown field 'rte'") != std::string::npos);
    CHECK(message_of(patched("\"rate\": 1.0", "\"rate\": \"fast\""))
              .find("model.slowdown") != std::string::npos);
    CHECK(message_of(patched("exponential", "normal")).find("unknown distribution kind") !=
          std::string::npos);
    CHECK(message_of(patched("\"rate\": 1.0", "\"rate\": -2.0")).find("model.slowdown") !=
          std::string::npos);
    CHECK(message_of(patched("additive", "subtractive")).find("combiner") != std::string::npos);

    // policy, arrival and sim sections get the same treatment
    auto with_section = [&](const std::string &extra) {
        std::string t = base;
        t.insert(t.rfind('}'), extra);
        return t;
    };
    CHECK(message_of(with_section(R"(, "policy": {"kind": "often"})"))
              .find("unknown policy kind") != std::string::npos);
    CHECK(message_of(with_section(R"(, "policy": {"kind": "sharp"})"))
              .find("missing field 'period'") != std::string::npos);
    CHECK(message_of(with_section(R"(, "policy": {"kind": "none", "rate": 1.0})"))
              .find("unknown field 'rate'") != std::string::npos);
    CHECK(message_of(with_section(R"(, "arrival": {"kind": "poisson", "rate": 0.0})"))
              .find("positive") != std::string::npos);
    CHECK(message_of(with_section(
              R"(, "arrival": {"kind": "renewal", "law": {"kind": "deterministic", "value": 0.0}})"))
              .find("positive mean") != std::string::npos);
    CHECK(message_of(with_section(R"(, "sim": {"replications": 0})"))
              .find("replications") != std::string::npos);
    CHECK(message_of(with_section(R"(, "sim": {"replications": 2.5})"))
              .find("non-negative integer") != std::string::npos);
    CHECK(message_of(with_section(R"(, "sim": {"seed": -4})"))
              .find("non-negative integer") != std::string::npos);
    CHECK(message_of(with_section(R"(, "sim": {"warmup_fraction": 0.6})"))
              .find("warmup_fraction") != std::string::npos);
    CHECK(message_of(with_section(R"(, "sim": {"horizon": 0})")).find("horizon") !=
          std::string::npos);
}

TEST_CASE("the canonical form is a fixed point of parse and emit") {
    for (const char *name : {"gamma_additive.json", "ig_multiplicative.json", "mm1.json", "webpage.json"}) {
        CAPTURE(name);
        const Scenario first = load_scenario(bundled(name));
        const std::string canon = canonical_scenario(first);
        const Scenario second = parse_scenario(canon);
        CHECK(canonical_scenario(second) == canon);
    }
}

TEST_CASE("exit codes separate success, usage errors and domain errors") {
    CHECK(run_cli("--scenario " + bundled("gamma_additive.json") + " condition").code == 0);
    CHECK(run_cli("--help").code == 0);

    // usage problems: exit 2
    CHECK(run_cli("condition").code == 2);                       // no scenario
    CHECK(run_cli("--scenario /no/such/file.json condition").code == 2);
    CHECK(run_cli("--scenario " + bundled("gamma_additive.json") + " mean-curve --param rate").code == 2);
    CHECK(run_cli("--scenario " + bundled("gamma_additive.json") + " --bogus-flag condition").code == 2);
    CHECK(run_cli("--scenario " + bundled("gamma_additive.json")).code == 2);  // no subcommand
    write_file("/tmp/resetq_bad.json", "{ nope");
    const auto bad = run_cli("--scenario /tmp/resetq_bad.json condition");
    CHECK(bad.code == 2);
    CHECK(bad.err.find("ValidationError") != std::string::npos);

    // domain problems: exit 3 with the error name on stderr
    write_file("/tmp/resetq_unstable.json", R"({
      "model": {
        "combiner": "multiplicative",
        "slowdown": {"kind": "exponential", "rate": 1.0},
        "jobsize": {"kind": "deterministic", "value": 1.0}
      },
      "arrival": {"kind": "poisson", "rate": 1.5}
    })");
    const auto unstable = run_cli("--scenario /tmp/resetq_unstable.json queue-pmf");
    CHECK(unstable.code == 3);
    CHECK(unstable.err.find("Unstable") != std::string::npos);

    write_file("/tmp/resetq_noncompleting.json", R"({
      "model": {
        "combiner": "additive",
        "slowdown": {"kind": "exponential", "rate": 1.0},
        "jobsize": {"kind": "lognormal", "mu": 0.0, "sigma": 0.5}
      }
    })");
    write_file("/tmp/resetq_sharp_stuck.json", R"({
      "model": {
        "combiner": "additive",
        "slowdown": {"kind": "exponential", "rate": 1.0},
        "jobsize": {"kind": "deterministic", "value": 1.0}
      },
      "policy": {"kind": "sharp", "period": 0.8},
      "arrival": {"kind": "poisson", "rate": 0.25}
    })");
    const auto stuck = run_cli("--scenario /tmp/resetq_sharp_stuck.json queue-pmf");
    CHECK(stuck.code == 3);
    CHECK(stuck.err.find("NonCompleting") != std::string::npos);

    // with an unbounded jobsize no finite period completes every job, so the
    // sharp optimizer lands on "never reset" instead of failing
    const auto sharp = run_cli("--scenario /tmp/resetq_noncompleting.json optimize --policy sharp");
    CHECK(sharp.code == 0);
    const auto sj = nlohmann::json::parse(sharp.out);
    CHECK(sj["parameter"].is_null());
    CHECK(sj["mean"] == sj["mean_no_reset"]);

    // per-row analytics errors do not kill a sweep
    const auto curve = run_cli("--scenario /tmp/resetq_noncompleting.json mean-curve --param rate --grid 0.5,2.0");
    CHECK(curve.code == 0);
    CHECK(curve.out.find("DivergentTransform") != std::string::npos);
}

TEST_CASE("csv output is deterministic with line-feed endings and 12 digits") {
    const std::string args = "--scenario " + bundled("gamma_additive.json") +
                             " mean-curve --param rate --grid 0,0.1,0.5";
    const auto first = run_cli(args);
    const auto second = run_cli(args);
    CHECK(first.code == 0);
    CHECK(first.out == second.out);
    CHECK(first.out.find('\r') == std::string::npos);
    CHECK(first.out.rfind("param_value,mean_analytic,mean_sim,sim_ci\n", 0) == 0);
    // 7/6 printed to 12 significant digits
    CHECK(first.out.find("1.16666666667") != std::string::npos);
    CHECK(first.out.back() == '\n');
}

TEST_CASE("simulate emits byte-identical JSON given the same seed") {
    const std::string args = "--scenario " + bundled("mm1.json") + " simulate";
    const auto first = run_cli(args);
    const auto second = run_cli(args);
    CHECK(first.code == 0);
    CHECK(first.out == second.out);

    const auto reseeded = run_cli(args + " --seed 99");
    CHECK(reseeded.code == 0);
    CHECK(reseeded.out != first.out);

    const auto j = nlohmann::json::parse(first.out);
    CHECK(j["seed"] == 7);
    CHECK(j["replications"] == 10);
    CHECK(j["attempts_per_job"]["value"] == 1.0);
    CHECK(j["growing_queue"] == false);
    CHECK(nlohmann::json::parse(reseeded.out)["seed"] == 99);
}

TEST_CASE("print-config echoes exactly the canonical scenario") {
    for (const char *name : {"gamma_additive.json", "webpage.json"}) {
        CAPTURE(name);
        const auto echoed = run_cli("--scenario " + bundled(name) + " --print-config");
        CHECK(echoed.code == 0);
        CHECK(echoed.out == canonical_scenario(load_scenario(bundled(name))));
    }
    // the seed override shows up in the effective config
    const auto reseeded = run_cli("--scenario " + bundled("mm1.json") + " --print-config --seed 31");
    Scenario expect = load_scenario(bundled("mm1.json"));
    expect.sim.seed = 31;
    CHECK(reseeded.out == canonical_scenario(expect));
}

TEST_CASE("--out routes the table into a file") {
    const std::string path = "/tmp/resetq_out_test.csv";
    std::remove(path.c_str());
    const auto r = run_cli("--scenario " + bundled("gamma_additive.json") +
                           " queue-pmf --truncate 4 --out " + path);
    CHECK(r.code == 0);
    CHECK(r.out.empty());
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream text;
    text << in.rdbuf();
    CHECK(text.str().rfind("n,p_analytic,p_sim\n", 0) == 0);
    CHECK(text.str().back() == '\n');
    std::remove(path.c_str());
}

TEST_CASE("--format flips between table and record shapes") {
    const auto csv = run_cli("--scenario " + bundled("gamma_additive.json") + " condition --format csv");
    CHECK(csv.code == 0);
    CHECK(csv.out.rfind("mean_no_reset,slope_at_zero,beneficial,condition_lhs,condition_rhs\n",
                        0) == 0);
    CHECK(csv.out.find(",1,") != std::string::npos);  // beneficial flag

    const auto js = run_cli("--scenario " + bundled("gamma_additive.json") +
                            " mean-curve --param rate --grid 0,0.1 --format json");
    CHECK(js.code == 0);
    const auto rows = nlohmann::json::parse(js.out);
    REQUIRE(rows.is_array());
    REQUIRE(rows.size() == 2);
    CHECK(rows[0]["param_value"] == 0.0);
    CHECK(rows[0]["error"].is_null());
    CHECK(rows[0]["mean_analytic"].get<double>() == doctest::Approx(7.0 / 6.0).epsilon(1e-12));

    const auto pmf = run_cli("--scenario " + bundled("gamma_additive.json") +
                             " queue-pmf --truncate 8 --format json");
    const auto pj = nlohmann::json::parse(pmf.out);
    CHECK(pj["truncation"] == 8);
    CHECK(pj["probs"].size() == 9);  // levels 0 through 8 inclusive
    CHECK(pj["tail_mass"].get<double>() >= 0.0);
}

TEST_CASE("condition sweeps map out the benefit boundary") {
    // inverse-gaussian slowdown: beneficial exactly when mean > shape
    write_file("/tmp/resetq_sweep.json", R"({
      "model": {
        "combiner": "multiplicative",
        "slowdown": {"kind": "inverse_gaussian", "mean": 1.5, "shape": 0.75},
        "jobsize": {"kind": "deterministic", "value": 0.6666666666666666}
      }
    })");
    const auto r = run_cli(
        "--scenario /tmp/resetq_sweep.json condition"
        " --sweep-a slowdown.shape=1.2,1.4,1.6,1.8 --sweep-b jobsize.value=0.5 --format json");
    CHECK(r.code == 0);
    const auto rows = nlohmann::json::parse(r.out);
    REQUIRE(rows.size() == 4);
    for (const auto &row : rows) {
        const bool expect = row["value_a"].get<double>() < 1.5;
        CHECK(row["beneficial"].get<bool>() == expect);
    }

    // one sweep flag without the other is a usage error
    CHECK(run_cli("--scenario /tmp/resetq_sweep.json condition"
                  " --sweep-a slowdown.shape=1.0,2.0").code == 2);
    // a sweep over a field the family lacks is reported, not ignored
    const auto bad = run_cli("--scenario /tmp/resetq_sweep.json condition"
                             " --sweep-a slowdown.scale=1.0 --sweep-b jobsize.value=0.5");
    CHECK(bad.code == 2);
    CHECK(bad.err.find("no field 'scale'") != std::string::npos);
}
