#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace resetq {

// Base of everything thrown by this library. `name()` is the stable
// machine-readable identifier (printed on stderr by the CLI and matched by
// tests); what() prepends it to the human-readable detail.
class Error : public std::runtime_error {
public:
    Error(std::string name, const std::string &detail)
        : std::runtime_error(name + ": " + detail), name_(std::move(name)) {}

    const std::string &name() const { return name_; }

private:
    std::string name_;
};

// Bad arguments, malformed scenario files, out-of-contract calls.
// The CLI maps these to exit code 2 (usage); everything below to 3 (domain).
struct ValidationError : Error {
    explicit ValidationError(const std::string &d) : Error("ValidationError", d) {}
};

// E[e^{-sT}] does not exist for the requested argument (heavy tail or s
// beyond the family's abscissa of convergence).
struct DivergentTransform : Error {
    explicit DivergentTransform(const std::string &d) : Error("DivergentTransform", d) {}
};

// An iterative numeric routine ran out of budget before meeting its tolerance.
struct NonConvergent : Error {
    explicit NonConvergent(const std::string &d) : Error("NonConvergent", d) {}
};

// An integrand or objective returned NaN/Inf.
struct NonFinite : Error {
    explicit NonFinite(const std::string &d) : Error("NonFinite", d) {}
};

// A resetting policy gives the job zero probability of ever finishing,
// so the mean service time is infinite.
struct NonCompleting : Error {
    explicit NonCompleting(const std::string &d) : Error("NonCompleting", d) {}
};

// Queue utilization at or above 1: no stationary regime.
struct Unstable : Error {
    explicit Unstable(const std::string &d) : Error("Unstable", d) {}
};

// Power-series coefficient extraction produced trailing coefficients too
// negative to be float noise; the truncation order is not trustworthy.
struct SeriesIllConditioned : Error {
    explicit SeriesIllConditioned(const std::string &d) : Error("SeriesIllConditioned", d) {}
};

// Series division by a jet whose constant term is zero.
struct ZeroConstantTermDivision : Error {
    explicit ZeroConstantTermDivision(const std::string &d) : Error("ZeroConstantTermDivision", d) {}
};

// The simulator's per-job attempt cap was hit; the configuration is
// practically non-completing.
struct AttemptBudgetExceeded : Error {
    explicit AttemptBudgetExceeded(const std::string &d) : Error("AttemptBudgetExceeded", d) {}
};

}  // namespace resetq
