#pragma once

#include <stdexcept>
#include <string>

namespace vtsim {

struct SimError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bad or inconsistent model/config parameters.
struct CardError : SimError {
    using SimError::SimError;
};

// A circuit failed validation before simulation.
struct CircuitError : SimError {
    using SimError::SimError;
};

// Gate/bias construction outside the allowed range (bias above supply).
struct BiasLimitError : SimError {
    using SimError::SimError;
};

// Newton failed after all continuation fallbacks.
struct NonConvergence : SimError {
    std::string stage;       // "newton", "gmin-step" or "source-step"
    int iteration = 0;
    std::string worst_node;
    double time = -1.0;      // transient time, -1 for DC

    NonConvergence(std::string stage_, int iteration_, std::string worst_node_,
                   double time_ = -1.0);
};

// Adaptive step fell below min_step.
struct StepUnderflow : SimError {
    double time;
    explicit StepUnderflow(double t);
};

struct SingularSystem : SimError {
    using SimError::SimError;
};

// Measurement preconditions.
struct MeasureError : SimError {
    using SimError::SimError;
};
struct NoTransition : MeasureError {
    using MeasureError::MeasureError;
};
struct WindowTooShort : MeasureError {
    using MeasureError::MeasureError;
};
struct NotInverting : MeasureError {
    using MeasureError::MeasureError;
};

}  // namespace vtsim
