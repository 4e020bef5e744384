#pragma once

#include <stdexcept>
#include <string>

namespace mfd {

struct ContractViolation : std::logic_error {
  using std::logic_error::logic_error;
};

struct DegenerateCoefficient : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct OutOfBounds : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InvalidKernel : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct EmptyNeighborhood : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SolverBreakdown : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct StencilFailure : std::runtime_error {
  StencilFailure(long pointId, double delta)
      : std::runtime_error("no positive stencil at point " + std::to_string(pointId) +
                           " (delta=" + std::to_string(delta) + ")"),
        pointId(pointId), delta(delta) {}
  long pointId;
  double delta;
};

struct AdjustmentFailed : std::runtime_error {
  explicit AdjustmentFailed(std::string condition)
      : std::runtime_error("point cloud adjustment failed: " + condition),
        condition(std::move(condition)) {}
  std::string condition;
};

}  // namespace mfd
