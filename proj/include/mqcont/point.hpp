#pragma once

namespace mqcont {

/// A point in the unit interval or unit square; 1D problems keep y = 0.
struct Point {
  double x = 0.0;
  double y = 0.0;
};

} // namespace mqcont
