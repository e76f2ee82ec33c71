#pragma once

#include <stdexcept>
#include <string>

namespace uvm {

// Precondition and configuration violations throw std::invalid_argument
// (or std::domain_error for values outside a function's domain). Failures
// that arise while computing (overflow, non-finite losses) use the types below.

class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A failure inside the backward training loop, tagged with where it happened.
class TrainingError : public std::runtime_error {
public:
    TrainingError(int step, int epoch, const std::string& what)
        : std::runtime_error("step " + std::to_string(step) + ", epoch " +
                             std::to_string(epoch) + ": " + what),
          step_(step), epoch_(epoch) {}

    int step() const noexcept { return step_; }
    int epoch() const noexcept { return epoch_; }

private:
    int step_;
    int epoch_;
};

class PsdRepairError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace uvm
