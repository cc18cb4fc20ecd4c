#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace certdp {

// Base of every error the library throws. The CLI maps subclasses onto exit
// codes: ContractViolation/ConfigError -> 2, numerical failures -> 3,
// IoError -> 4.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ContractViolation : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

class NumericalError : public Error {
public:
    using Error::Error;
};

class NonConvergence : public NumericalError {
public:
    NonConvergence(int max_iter, double last_delta)
        : NumericalError("value iteration did not converge within " + std::to_string(max_iter) +
                         " iterations (last sup-norm delta " + std::to_string(last_delta) + ")"),
          max_iter_(max_iter),
          last_delta_(last_delta) {}

    int max_iter() const noexcept { return max_iter_; }
    double last_delta() const noexcept { return last_delta_; }

private:
    int max_iter_;
    double last_delta_;
};

class DegenerateBound : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class EmptyAnchorSet : public ContractViolation {
public:
    EmptyAnchorSet() : ContractViolation("anchor set must be nonempty") {}
};

class RefinementStalled : public NumericalError {
public:
    RefinementStalled(int rounds, double gap, double tau)
        : NumericalError("anchor refinement stalled after " + std::to_string(rounds) +
                         " rounds (gap " + std::to_string(gap) + " > tau " + std::to_string(tau) + ")"),
          rounds_(rounds) {}

    int rounds() const noexcept { return rounds_; }

private:
    int rounds_;
};

class OptimizerFailed : public NumericalError {
public:
    using NumericalError::NumericalError;
};

// Throws ContractViolation with `what` when `ok` is false.
inline void require(bool ok, const std::string& what) {
    if (!ok) throw ContractViolation(what);
}

}  // namespace certdp
