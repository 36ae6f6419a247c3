#pragma once

#include <optional>
#include <string>

#include "resetq/sim.hpp"

namespace resetq {

// A scenario file bundles a service model with the optional queue context
// around it. Times are plain numbers in a consistent unit of the author's
// choice (the bundled examples say which); nothing here rescales them.
struct SimSettings {
    double horizon = 10000.0;
    double warmup_fraction = 0.1;
    std::size_t replications = 10;
    std::uint64_t seed = 1;
};

struct Scenario {
    std::optional<std::string> description;
    ServiceModel model;
    ResetPolicy policy = ResetNone{};
    std::optional<ArrivalProcess> arrival;
    SimSettings sim;
};

// Strict JSON parse: every field checked for type, unknown fields rejected,
// all domain validation applied. Errors are ValidationError with a JSON-path
// prefix ("model.slowdown: ...").
Scenario parse_scenario(const std::string &json_text);

// parse_scenario on the contents of `path`
Scenario load_scenario(const std::string &path);

// Canonical JSON form: fixed key order, defaults made explicit, two-space
// indent, trailing newline. Re-parsing the output reproduces the same value.
std::string canonical_scenario(const Scenario &s);

}  // namespace resetq
