#include "mqcont/nodes.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace mqcont {

namespace {

bool on_edge(int k, int ns) { return k == 0 || k == ns; }

Point corner_normal(double sx, double sy) {
  const double inv = 1.0 / std::sqrt(sx * sx + sy * sy);
  return {sx * inv, sy * inv};
}

} // namespace

NodeSet generate_uniform_nodes(int dim, int ns) {
  if (dim != 1 && dim != 2)
    throw std::invalid_argument("generate_uniform_nodes: dim must be 1 or 2");
  if (ns < 2)
    throw std::invalid_argument("generate_uniform_nodes: ns must be >= 2");

  NodeSet set;
  set.dim = dim;
  set.ns = ns;
  set.h = 1.0 / ns;

  if (dim == 1) {
    for (int k = 1; k < ns; ++k) set.interior.push_back({k * set.h, 0.0});
    set.boundary.push_back({0.0, 0.0});
    set.boundary.push_back({1.0, 0.0});
    set.normals.push_back({-1.0, 0.0});
    set.normals.push_back({1.0, 0.0});
    return set;
  }

  // 2D: walk the full tensor grid once, classifying as we go.  Interior
  // ordering is row-major (y outer, x inner), which also fixes which node
  // plays the reference role in the expansion.
  for (int l = 0; l <= ns; ++l) {
    for (int k = 0; k <= ns; ++k) {
      const Point p{k * set.h, l * set.h};
      if (!on_edge(k, ns) && !on_edge(l, ns)) {
        set.interior.push_back(p);
        continue;
      }
      set.boundary.push_back(p);
      const double sx = (k == 0) ? -1.0 : (k == ns ? 1.0 : 0.0);
      const double sy = (l == 0) ? -1.0 : (l == ns ? 1.0 : 0.0);
      if (sx != 0.0 && sy != 0.0)
        set.normals.push_back(corner_normal(sx, sy));
      else
        set.normals.push_back({sx, sy});
    }
  }
  return set;
}

NodeSet generate_adapted_nodes(int dim, int ns, double h1) {
  if (ns < 3)
    throw std::invalid_argument("generate_adapted_nodes: ns must be >= 3");
  if (!(h1 >= 0.1 && h1 <= 0.5))
    throw std::invalid_argument("generate_adapted_nodes: h1 must lie in [0.1, 0.5], got " +
                                std::to_string(h1));

  NodeSet set = generate_uniform_nodes(dim, ns);
  set.h1 = h1;
  const double h = set.h;
  const double lo = h1 * h;        // new distance to the near boundary
  const double eps = 0.25 * h;

  auto pull_in = [&](double& coord) {
    if (std::abs(coord - h) < eps) coord = lo;
    else if (std::abs(coord - (1.0 - h)) < eps) coord = 1.0 - lo;
  };

  for (Point& p : set.interior) {
    pull_in(p.x);
    if (dim == 2) pull_in(p.y);
  }
  return set;
}

ShapeParameters shape_params(const NodeSet& nodes, double s) {
  if (nodes.ns < 2)
    throw std::invalid_argument("shape_params: node set has no grid parameter");
  ShapeParameters sp;
  sp.s = s;
  const double c = s / (nodes.ns - 1);
  sp.c.assign(nodes.interior.size() + nodes.boundary.size(), c);
  return sp;
}

} // namespace mqcont
