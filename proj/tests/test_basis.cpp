#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "mqcont/basis.hpp"

using namespace mqcont;

namespace {

// deterministic sample points around a center
std::vector<Point> sample_points(const Point& c, int count, unsigned seed) {
  std::mt19937 gen(seed);
  std::uniform_real_distribution<double> d(-1.5, 1.5);
  std::vector<Point> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) out.push_back({c.x + d(gen), c.y + d(gen)});
  return out;
}

} // namespace

TEST_CASE("value equals the closed form and is bounded below by c") {
  const Point c{0.3, 0.7};
  for (double shape : {0.05, 0.4, 1.0})
    for (const Point& p : sample_points(c, 25, 11)) {
      const double r2 = (p.x - c.x) * (p.x - c.x) + (p.y - c.y) * (p.y - c.y);
      const double g = mq_value(c, shape, p);
      CHECK(g == doctest::Approx(std::sqrt(r2 + shape * shape)).epsilon(1e-15));
      CHECK(g >= shape);
    }
  CHECK(mq_value(c, 0.25, c) == doctest::Approx(0.25).epsilon(1e-16));
}

TEST_CASE("radial symmetry") {
  const Point c{0.42, -0.13};
  const double shape = 0.3;
  std::mt19937 gen(7);
  std::uniform_real_distribution<double> ang(0.0, 2.0 * M_PI);
  for (double r : {0.1, 0.57, 1.3}) {
    const double ref = mq_value(c, shape, {c.x + r, c.y});
    for (int i = 0; i < 20; ++i) {
      const double t = ang(gen);
      const Point p{c.x + r * std::cos(t), c.y + r * std::sin(t)};
      CHECK(std::abs(mq_value(c, shape, p) - ref) <= 1e-14);
    }
  }
}

TEST_CASE("gradient matches central differences and vanishes at the center") {
  const Point c{0.1, 0.9};
  const double shape = 0.35;
  const double h = 1e-6;
  for (const Point& p : sample_points(c, 30, 23)) {
    const Point g = mq_gradient(c, shape, p);
    const double fx = (mq_value(c, shape, {p.x + h, p.y}) - mq_value(c, shape, {p.x - h, p.y})) /
                      (2 * h);
    const double fy = (mq_value(c, shape, {p.x, p.y + h}) - mq_value(c, shape, {p.x, p.y - h})) /
                      (2 * h);
    CHECK(g.x == doctest::Approx(fx).epsilon(1e-7));
    CHECK(g.y == doctest::Approx(fy).epsilon(1e-7));
  }
  const Point g0 = mq_gradient(c, shape, c);
  CHECK(g0.x == 0.0);
  CHECK(g0.y == 0.0);
}

TEST_CASE("second derivatives match central differences") {
  const Point c{-0.2, 0.4};
  const double shape = 0.5;
  const double h = 1e-5;
  for (const Point& p : sample_points(c, 30, 31)) {
    const double gxx = mq_second_derivative(c, shape, p, 0);
    const double gyy = mq_second_derivative(c, shape, p, 1);
    const double f0 = mq_value(c, shape, p);
    const double fxx =
        (mq_value(c, shape, {p.x + h, p.y}) - 2 * f0 + mq_value(c, shape, {p.x - h, p.y})) /
        (h * h);
    const double fyy =
        (mq_value(c, shape, {p.x, p.y + h}) - 2 * f0 + mq_value(c, shape, {p.x, p.y - h})) /
        (h * h);
    CHECK(gxx == doctest::Approx(fxx).epsilon(1e-5));
    CHECK(gyy == doctest::Approx(fyy).epsilon(1e-5));
  }
}

TEST_CASE("1D laplacian is the closed form c^2/g^3") {
  const Point c{0.6, 0.0};
  const double shape = 0.2;
  for (double x : {-0.3, 0.1, 0.6, 0.99, 2.0}) {
    const Point p{x, 0.0};
    const double g = mq_value(c, shape, p);
    CHECK(mq_laplacian(c, shape, p, 1) ==
          doctest::Approx(shape * shape / (g * g * g)).epsilon(1e-14));
    CHECK(mq_laplacian(c, shape, p, 1) ==
          doctest::Approx(mq_second_derivative(c, shape, p, 0)).epsilon(1e-14));
  }
}

TEST_CASE("2D laplacian is the closed form and the sum of second derivatives") {
  const Point c{0.25, 0.75};
  const double shape = 0.45;
  for (const Point& p : sample_points(c, 25, 41)) {
    const double r2 = (p.x - c.x) * (p.x - c.x) + (p.y - c.y) * (p.y - c.y);
    const double g = mq_value(c, shape, p);
    const double lap = mq_laplacian(c, shape, p, 2);
    CHECK(lap == doctest::Approx((r2 + 2 * shape * shape) / (g * g * g)).epsilon(1e-13));
    CHECK(lap == doctest::Approx(mq_second_derivative(c, shape, p, 0) +
                                 mq_second_derivative(c, shape, p, 1))
                     .epsilon(1e-13));
  }
}

TEST_CASE("normal derivative is the directional derivative") {
  const Point c{0.5, 0.5};
  const double shape = 0.3;
  const Point normals[] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}, {M_SQRT1_2, M_SQRT1_2}};
  for (const Point& p : sample_points(c, 10, 53))
    for (const Point& n : normals) {
      const Point g = mq_gradient(c, shape, p);
      CHECK(mq_normal_derivative(c, shape, p, n) ==
            doctest::Approx(n.x * g.x + n.y * g.y).epsilon(1e-14));
    }
}
