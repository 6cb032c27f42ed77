#pragma once

#include <optional>
#include <vector>

#include "mqcont/point.hpp"

namespace mqcont {

/// Collocation nodes on the unit interval (dim 1) or unit square (dim 2).
///
/// Interior nodes come first in any flattened ordering; boundary nodes carry
/// outward unit normals (corner normals are the normalized average of the two
/// adjacent side normals).
struct NodeSet {
  int dim = 1;
  int ns = 0;                     ///< grid parameter: spacing h = 1/ns
  double h = 0.0;
  std::vector<Point> interior;    ///< (ns-1)^dim nodes
  std::vector<Point> boundary;    ///< 2 (1D) or 4*ns (2D) nodes
  std::vector<Point> normals;     ///< outward unit normal per boundary node
  std::optional<double> h1;       ///< set when boundary-adjacent nodes were pulled in

  int interior_count() const { return static_cast<int>(interior.size()); }
  int boundary_count() const { return static_cast<int>(boundary.size()); }
};

/// One shape parameter per node, interior first then boundary.
struct ShapeParameters {
  double s = 6.0;
  std::vector<double> c;
};

/// Tensor grid with spacing h = 1/ns; interior nodes at the (ns-1)^dim inner
/// grid points, boundary nodes at the remaining grid points (corners once).
NodeSet generate_uniform_nodes(int dim, int ns);

/// Same grid, but every interior node adjacent to a boundary is moved so its
/// distance to that boundary becomes h1*h.  In 2D the rule applies to each
/// coordinate independently, so corner-adjacent nodes move in both.
/// Requires ns >= 3 and h1 in [0.1, 0.5].
NodeSet generate_adapted_nodes(int dim, int ns, double h1);

/// Constant shape parameter c = s/(ns-1) for every node.  The usable range of
/// the scale factor s is [4, 12]; 6 is a solid default.
ShapeParameters shape_params(const NodeSet& nodes, double s = 6.0);

} // namespace mqcont
