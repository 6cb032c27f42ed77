#pragma once

#include "mqcont/point.hpp"

namespace mqcont {

/// Multiquadric g(x) = sqrt(|x - center|^2 + c^2).  Strictly positive, smooth,
/// radially symmetric about its center; c > 0 is the shape parameter.
double mq_value(const Point& center, double c, const Point& p);

/// Gradient of the multiquadric, (p - center)/g componentwise.  Vanishes at
/// the center.
Point mq_gradient(const Point& center, double c, const Point& p);

/// Second derivative along one axis (0 = x, 1 = y).
/// d2g/dx2 = ((y-yc)^2 + c^2)/g^3 and symmetrically for y.
double mq_second_derivative(const Point& center, double c, const Point& p, int axis);

/// Laplacian: c^2/g^3 in 1D, (r^2 + 2c^2)/g^3 in 2D.
double mq_laplacian(const Point& center, double c, const Point& p, int dim);

/// Directional derivative n . grad g, used for boundary normal derivatives.
double mq_normal_derivative(const Point& center, double c, const Point& p,
                            const Point& normal);

} // namespace mqcont
