#pragma once

#include "mqcont/linalg.hpp"

namespace mqcont {

/// Minimal interface the continuation engine needs: a smooth map
/// G : R^order x R -> R^order with derivatives in the state and the parameter.
class ContinuationProblem {
 public:
  virtual ~ContinuationProblem() = default;
  virtual int order() const = 0;
  virtual Vector residual(const Vector& u, double alpha) const = 0;
  virtual Matrix jacobian_u(const Vector& u, double alpha) const = 0;
  virtual Vector jacobian_alpha(const Vector& u, double alpha) const = 0;
};

} // namespace mqcont
