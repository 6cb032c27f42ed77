#include "mqcont/basis.hpp"

#include <cmath>

namespace mqcont {

double mq_value(const Point& center, double c, const Point& p) {
  const double dx = p.x - center.x;
  const double dy = p.y - center.y;
  return std::sqrt(dx * dx + dy * dy + c * c);
}

Point mq_gradient(const Point& center, double c, const Point& p) {
  const double g = mq_value(center, c, p);
  return {(p.x - center.x) / g, (p.y - center.y) / g};
}

double mq_second_derivative(const Point& center, double c, const Point& p, int axis) {
  const double dx = p.x - center.x;
  const double dy = p.y - center.y;
  const double g2 = dx * dx + dy * dy + c * c;
  const double g = std::sqrt(g2);
  const double other2 = (axis == 0) ? dy * dy : dx * dx;
  return (other2 + c * c) / (g2 * g);
}

double mq_laplacian(const Point& center, double c, const Point& p, int dim) {
  const double dx = p.x - center.x;
  const double dy = p.y - center.y;
  const double r2 = dx * dx + dy * dy;
  const double g2 = r2 + c * c;
  const double g = std::sqrt(g2);
  if (dim == 1) return c * c / (g2 * g);
  return (r2 + 2.0 * c * c) / (g2 * g);
}

double mq_normal_derivative(const Point& center, double c, const Point& p,
                            const Point& normal) {
  const Point grad = mq_gradient(center, c, p);
  return normal.x * grad.x + normal.y * grad.y;
}

} // namespace mqcont
