#include "helpers.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace degbill;
using namespace degbill::testing;

namespace {
Problem wire_problem() {
  Vec p(3), d(3);
  p << 0, 0, 0;
  d << 1, 0, 0;
  return wires_3d({{p, d}}, {1.0}, 0.05);
}
} // namespace

TEST_CASE("exp_map on affine charts") {
  Problem pb = wire_problem();
  Vec x(1), u(2);
  x << 2.0;
  u << 0.3, 0.4;
  pb.rho = 1.0;
  const Vec q = exp_map(pb, 0, x, u);
  Vec expect(3);
  expect << 2.0, 0.3, 0.4;
  REQUIRE((q - expect).norm() < 1e-14);

  Vec c1(2);
  c1 << 1.0, 0.0;
  Problem pc = n_centers_2d({c1}, {1.0}, 0.1);
  const Vec q0 = exp_map(pc, 0, Vec(0), Vec::Zero(2));
  REQUIRE((q0 - c1).norm() == 0.0);

  Vec ur(2);
  ur << pc.rho, 0.0;
  const Vec qr = exp_map(pc, 0, Vec(0), ur);
  REQUIRE(std::abs(brute_force_dist(pc, qr) - pc.rho) < 1e-12);

  Vec ubad(2);
  ubad << 2 * pc.rho, 0.0;
  REQUIRE_THROWS_AS(exp_map(pc, 0, Vec(0), ubad), DomainError);
}

TEST_CASE("tube coordinates invert exp_map") {
  Problem pb = wire_problem();
  pb.rho = 1.0;
  Vec q(3);
  q << 2.0, 0.3, 0.4;
  const TubeCoords tc = tube_coordinates(pb, q);
  REQUIRE(tc.comp == 0);
  REQUIRE(std::abs(tc.x[0] - 2.0) < 1e-14);
  REQUIRE(std::abs(tc.u[0] - 0.3) < 1e-14);
  REQUIRE(std::abs(tc.u[1] - 0.4) < 1e-14);

  SECTION("round trip at 0.9 rho on random problems") {
    Problem tri = triangle_centers();
    for (int trial = 0; trial < 50; ++trial) {
      const int comp = static_cast<int>(uniform(0, 3));
      const Vec u = 0.9 * tri.rho * random_unit(2);
      const Vec q2 = exp_map(tri, comp, Vec(0), u);
      const TubeCoords t2 = tube_coordinates(tri, q2);
      REQUIRE(t2.comp == comp);
      REQUIRE((exp_map(tri, t2.comp, t2.x, t2.u) - q2).norm() < 1e-10);
      REQUIRE(std::abs(t2.u.norm() - brute_force_dist(tri, q2)) < 1e-8);
    }
  }

  SECTION("outside tube and cut locus are rejected") {
    Problem tri = triangle_centers();
    Vec far(2);
    far << 10.0, 10.0;
    REQUIRE_THROWS_AS(tube_coordinates(tri, far), DomainError);

    // a tube radius larger than half the separation exposes the cut locus
    std::vector<Vec> two(2, Vec(2));
    two[0] << 0, 0;
    two[1] << 0.01, 0;
    Problem overlap = n_centers_2d(two, {1.0, 1.0}, 0.05);
    Vec mid(2);
    mid << 0.005, 0.001;
    REQUIRE_THROWS_AS(tube_coordinates(overlap, mid), DomainError);
  }
}

TEST_CASE("exp_map distance identity against brute force") {
  std::vector<Problem> pbs = {triangle_centers(), skew_wires(), wire_problem()};
  Vec c3(3);
  c3 << 0.2, -0.1, 0.4;
  pbs.push_back(n_centers_3d({c3}, {1.0}, 0.1));
  for (auto& pb : pbs) {
    for (int trial = 0; trial < 20; ++trial) {
      const int comp = static_cast<int>(uniform(0, (double)pb.comps.size()));
      const auto& c = pb.comps[comp];
      Vec x(c.intrinsic_dim());
      if (x.size()) x[0] = uniform(-1.0, 1.0);
      const Vec u = uniform(0.05, 1.0) * pb.rho * random_unit(c.codim());
      const Vec q = exp_map(pb, comp, x, u);
      REQUIRE(std::abs(brute_force_dist(pb, q) - u.norm()) < 1e-8);
    }
  }
}

TEST_CASE("normal frames are orthonormal and smooth") {
  Problem pb = skew_wires();
  Vec center(3), axis(3);
  center << 0, 0, 0;
  axis << 0, 0, 1;
  Component circ = circle_component(center, axis, 2.0, 1.0);
  circ.finish_setup();

  for (double s = -2.0; s <= 2.0; s += 0.25) {
    Vec x(1);
    x[0] = s;
    for (const auto& comp : pb.comps) {
      const Mat E = comp.normal_frame(x);
      REQUIRE((E.transpose() * E - Mat::Identity(2, 2)).norm() < 1e-12);
      // orthogonal to the tangent space
      if (comp.intrinsic_dim() == 1)
        REQUIRE((E.transpose() * comp.chart_jac(x)).norm() < 1e-12);
    }
    const Mat Ec = circ.normal_frame(x);
    REQUIRE((Ec.transpose() * Ec - Mat::Identity(2, 2)).norm() < 1e-12);
    REQUIRE((Ec.transpose() * circ.chart_jac(x)).norm() < 1e-12);
    // finite-difference smoothness of the frame
    Vec x2(1);
    x2[0] = s + 1e-6;
    REQUIRE((circ.normal_frame(x2) - Ec).norm() < 1e-5);
  }
}

TEST_CASE("induced metric blocks vanish to the stated order in u") {
  // g(x,u) from finite differences of the exponential map; the cross block
  // C = O_1(u) and the normal block correction B = O_2(u).
  Vec center(3), axis(3);
  center << 0.5, 0, 0;
  axis << 0, 0, 1;
  Component circ = circle_component(center, axis, 2.0, 1.0);
  circ.finish_setup();
  Problem pb;
  pb.m = 3;
  pb.comps = {circ};
  pb.rho = 0.25;

  auto fmap = [&](double x0, const Vec& u) {
    Vec x(1);
    x[0] = x0;
    return exp_map(pb, 0, x, u);
  };
  const double h = 1e-6;
  for (double scale : {1e-2, 1e-4, 1e-6}) {
    const Vec u = scale * pb.rho * random_unit(2);
    const double x0 = 0.7;
    const Vec fx = (fmap(x0 + h, u) - fmap(x0 - h, u)) / (2 * h);
    Mat fu(3, 2);
    for (int i = 0; i < 2; ++i) {
      Vec up = u, um = u;
      up[i] += h;
      um[i] -= h;
      fu.col(i) = (fmap(x0, up) - fmap(x0, um)) / (2 * h);
    }
    // bounded ratios up to the finite-difference noise floor
    const Mat Bblk = fu.transpose() * fu - Mat::Identity(2, 2);
    const Vec Cblk = fu.transpose() * fx;
    REQUIRE(Bblk.norm() < 10.0 * sqr(u.norm()) + 1e-9);
    REQUIRE(Cblk.norm() < 10.0 * u.norm() + 1e-9);
  }
}

TEST_CASE("tangent Hamiltonian matches constrained minimization") {
  SECTION("examples") {
    Problem tri = triangle_centers();
    const TangentState t0 =
        tangent_hamiltonian(tri, 0, Vec(0), Vec(0), 0.5);
    REQUIRE(t0.F == 0.0);
    REQUIRE(t0.inside_ME);

    Problem pw = wire_problem();
    Vec x(1), y(1);
    x << 0.3;
    y << 0.6;
    const TangentState t1 = tangent_hamiltonian(pw, 0, x, y, 0.5);
    REQUIRE(std::abs(t1.F - 0.18) < 1e-14);
    REQUIRE(t1.inside_ME);

    y << std::sqrt(2.0 * (0.5 - 1e-6));
    const TangentState t2 = tangent_hamiltonian(pw, 0, x, y, 0.5);
    REQUIRE(t2.inside_ME);
    REQUIRE(t2.F < 0.5);
    y << std::sqrt(2.0 * 0.5) + 1e-6;
    REQUIRE_FALSE(tangent_hamiltonian(pw, 0, x, y, 0.5).inside_ME);
  }

  SECTION("F equals min over full momenta on random instances") {
    // one rotating-frame problem (nonzero gyro) and one wire problem
    Vec body(2);
    body << 1.0, 0.0;
    Problem rc = rc_restricted_3bp({body}, {1e-3}, 1.0);
    Problem pw = wire_problem();
    for (int trial = 0; trial < 100; ++trial) {
      const bool use_rc = trial % 2 == 0;
      const Problem& pb = use_rc ? rc : pw;
      const int comp = 0;
      const auto& c = pb.comps[comp];
      Vec x(c.intrinsic_dim());
      if (x.size()) x[0] = uniform(-0.5, 0.5);
      Vec y(c.intrinsic_dim());
      if (y.size()) y[0] = uniform(-0.7, 0.7);
      const double F = tangent_hamiltonian(pb, comp, x, y, 0.5).F;

      // minimize H(q,p) over p with the tangential component pinned to y
      const Vec q = c.chart(x);
      const Mat E = c.normal_frame(x);
      const int d = c.codim();
      auto Hofv = [&](const Vec& v) {
        Vec p = E * v;
        if (c.intrinsic_dim() == 1) {
          const Vec tau = c.chart_jac(x).col(0);
          p += (y[0] / tau.squaredNorm()) * tau;
        }
        return pb.H(q, p, 0.0);
      };
      // H is quadratic in v: one exact Newton step from finite differences
      Vec g(d);
      Mat Hh(d, d);
      const double h = 1e-4;
      const Vec v0 = Vec::Zero(d);
      for (int i = 0; i < d; ++i) {
        Vec ei = Vec::Zero(d);
        ei[i] = h;
        g[i] = (Hofv(v0 + ei) - Hofv(v0 - ei)) / (2 * h);
        Hh(i, i) = (Hofv(v0 + ei) - 2 * Hofv(v0) + Hofv(v0 - ei)) / (h * h);
        for (int j = i + 1; j < d; ++j) {
          Vec ej = Vec::Zero(d);
          ej[j] = h;
          Hh(i, j) = Hh(j, i) =
              (Hofv(v0 + ei + ej) - Hofv(v0 + ei - ej) - Hofv(v0 - ei + ej) +
               Hofv(v0 - ei - ej)) /
              (4 * h * h);
        }
      }
      const Vec vstar = -Hh.ldlt().solve(g);
      REQUIRE(std::abs(Hofv(vstar) - F) < 1e-8);
    }
  }
}

TEST_CASE("jacobi norm") {
  Problem tri = triangle_centers();
  Vec q(2), v(2);
  q << 5.0, 5.0;
  v << 1.0, 0.0;
  REQUIRE(std::abs(jacobi_norm(tri, q, v, 0.5) - 1.0) < 1e-14);
  REQUIRE(std::abs(jacobi_norm(tri, q, v, 2.0) - 2.0) < 1e-14);

  Vec body(2);
  body << 1.0, 0.0;
  Problem rc = rc_restricted_3bp({body}, {1e-3}, 0.7);
  Vec qr(2), vr(2);
  qr << 0.9, 0.3;
  vr << -0.2, 0.5;
  const double g = jacobi_norm(rc, qr, vr, 0.5);
  const double expect = std::sqrt(2.0 * (0.5 - rc.W(qr))) * vr.norm() +
                        rc.gyro(qr).dot(vr);
  REQUIRE(std::abs(g - expect) < 1e-14);

  // outside the domain of possible motion
  Vec qq(2);
  qq << 0.05, 0.0;
  REQUIRE_THROWS_AS(jacobi_norm(rc, qq, vr, -20.0), DomainError);
}

TEST_CASE("mixed codimension components are accepted") {
  // one wire and one point in R^3 in a single problem (smoke test)
  Problem pb;
  pb.m = 3;
  Vec p0(3), d0(3), a(3);
  p0 << 0, 0, 0;
  d0 << 1, 0, 0;
  a << 0, 3, 0;
  pb.comps = {line_component(p0, d0, 1.0), point_component(a, 1.0)};
  pb.finish_setup();
  REQUIRE(pb.comps[0].codim() == 2);
  REQUIRE(pb.comps[1].codim() == 3);
  Vec q(3);
  q << 0.1, 3.0, pb.rho * 0.5;
  const TubeCoords tc = tube_coordinates(pb, q);
  REQUIRE(tc.comp == 1);
}
