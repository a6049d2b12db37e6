#pragma once

// Built-in problem factories: planar and spatial n-center problems,
// gravitating wires, and the rotating-frame restricted problem.

#include "degbill/geometry.hpp"

namespace degbill {

inline Component point_component(const Vec& pos, double mass) {
  Component c;
  c.kind = ChartKind::Point;
  c.ambient_dim = static_cast<int>(pos.size());
  c.alpha = mass;
  c.base = pos;
  return c;
}

inline Component line_component(const Vec& point, const Vec& direction,
                                double mass) {
  Component c;
  c.kind = ChartKind::Line;
  c.ambient_dim = static_cast<int>(point.size());
  c.alpha = mass;
  c.base = point;
  c.dir = direction;
  return c;
}

inline Component circle_component(const Vec& center, const Vec& axis,
                                  double radius, double mass) {
  Component c;
  c.kind = ChartKind::Circle;
  c.ambient_dim = static_cast<int>(center.size());
  c.alpha = mass;
  c.base = center;
  c.dir = axis;
  c.radius = radius;
  return c;
}

/// n fixed attracting/repelling centers in the plane; free motion between
/// collisions (H_0 = |p|^2/2).
inline Problem n_centers_2d(const std::vector<Vec>& centers,
                            const std::vector<double>& masses,
                            double rho = 0.0) {
  Problem pb;
  pb.kind = "n-centers-2d";
  pb.m = 2;
  for (std::size_t i = 0; i < centers.size(); ++i)
    pb.comps.push_back(point_component(centers[i], masses[i]));
  pb.rho = rho;
  pb.finish_setup();
  return pb;
}

inline Problem n_centers_3d(const std::vector<Vec>& centers,
                            const std::vector<double>& masses,
                            double rho = 0.0) {
  Problem pb;
  pb.kind = "n-centers-3d";
  pb.m = 3;
  for (std::size_t i = 0; i < centers.size(); ++i)
    pb.comps.push_back(point_component(centers[i], masses[i]));
  pb.rho = rho;
  pb.finish_setup();
  return pb;
}

/// Gravitating straight wires in R^3 (codimension-2 scatterer components).
inline Problem wires_3d(const std::vector<std::pair<Vec, Vec>>& wires,
                        const std::vector<double>& masses, double rho = 0.0) {
  Problem pb;
  pb.kind = "wires-3d";
  pb.m = 3;
  for (std::size_t i = 0; i < wires.size(); ++i)
    pb.comps.push_back(
        line_component(wires[i].first, wires[i].second, masses[i]));
  pb.rho = rho;
  pb.finish_setup();
  return pb;
}

/// Rotating-frame restricted problem: a Kepler center of strength k at the
/// origin plus n small bodies fixed in the frame rotating at rate omega.
inline Problem rc_restricted_3bp(const std::vector<Vec>& bodies,
                                 const std::vector<double>& masses,
                                 double omega, double kepler_k = 1.0,
                                 double rho = 0.0) {
  Problem pb;
  pb.kind = "rc-restricted-3bp";
  pb.m = 2;
  pb.omega = omega;
  pb.kepler_k = kepler_k;
  for (std::size_t i = 0; i < bodies.size(); ++i)
    pb.comps.push_back(point_component(bodies[i], masses[i]));
  pb.rho = rho;
  pb.finish_setup();
  return pb;
}

// -- ready-made test geometries ---------------------------------------------

/// Three unit-mass centers at the vertices of an equilateral triangle with
/// unit side.
inline Problem triangle_centers(double rho = 0.0) {
  std::vector<Vec> cs(3, Vec(2));
  cs[0] << 0.0, 0.0;
  cs[1] << 1.0, 0.0;
  cs[2] << 0.5, std::sqrt(3.0) / 2.0;
  return n_centers_2d(cs, {1.0, 1.0, 1.0}, rho);
}

/// Two skew wires at distance h: the x-axis and a line parallel to the
/// rotated y-axis through (0,0,h). angle = pi/2 gives the perpendicular pair.
inline Problem skew_wires(double h = 1.0, double angle = M_PI / 2,
                          double rho = 0.0) {
  Vec p1(3), d1(3), p2(3), d2(3);
  p1 << 0, 0, 0;
  d1 << 1, 0, 0;
  p2 << 0, 0, h;
  d2 << std::cos(angle), std::sin(angle), 0;
  return wires_3d({{p1, d1}, {p2, d2}}, {1.0, 1.0}, rho);
}

/// Two parallel wires along x at distance h.
inline Problem parallel_wires(double h = 1.0, double rho = 0.0) {
  Vec p1(3), d(3), p2(3);
  p1 << 0, 0, 0;
  d << 1, 0, 0;
  p2 << 0, 0, h;
  return wires_3d({{p1, d}, {p2, d}}, {1.0, 1.0}, rho);
}

/// Four unit-mass centers on the unit square (for word families).
inline Problem square_centers(double rho = 0.0) {
  std::vector<Vec> cs(4, Vec(2));
  cs[0] << 0.0, 0.0;
  cs[1] << 1.0, 0.0;
  cs[2] << 1.0, 1.0;
  cs[3] << 0.0, 1.0;
  return n_centers_2d(cs, {1.0, 1.0, 1.0, 1.0}, rho);
}

} // namespace degbill
