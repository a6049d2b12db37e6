#include "helpers.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace degbill;
using namespace degbill::testing;

namespace {
Problem free_plane() {
  Vec far(2);
  far << 100.0, 100.0;
  return n_centers_2d({far}, {1.0}, 0.05);
}
} // namespace

TEST_CASE("straight free-particle connection") {
  Problem pb = free_plane();
  Vec qm(2), qp(2);
  qm << 0, 0;
  qp << 3, 4;
  const ActionFunction af = connect_fixed_energy(pb, 0.0, qm, qp, 0.5);
  REQUIRE(std::abs(af.S - 5.0) < 1e-9);
  Vec pexp(2);
  pexp << 0.6, 0.8;
  REQUIRE((af.p_minus - pexp).norm() < 1e-9);
  REQUIRE((af.p_plus - pexp).norm() < 1e-9);
  REQUIRE(af.nondegenerate);

  SECTION("twist degeneracy along boundary velocities") {
    REQUIRE((af.B * boundary_velocity_minus(pb, af)).norm() < 1e-6);
    REQUIRE((af.B.transpose() * boundary_velocity_plus(pb, af)).norm() < 1e-6);
  }
}

TEST_CASE("Kepler arc action against the Jacobi quadrature oracle") {
  Problem kp = rc_restricted_3bp({}, {}, 0.0, 1.0, 0.05);
  Vec qm(2), qp(2);
  qm << 1.0, 0.0;
  qp << 0.6, 0.9;
  const double E = -0.3; // bound short arc
  const ActionFunction af = connect_fixed_energy(kp, 0.0, qm, qp, E);
  REQUIRE((af.orbit.q(af.orbit.t1) - qp).norm() < 1e-10);
  REQUIRE(std::abs(jacobi_length(kp, af.orbit, E, 0.0) - af.S) < 1e-7);

  SECTION("twist degeneracy holds on the curved connection too") {
    REQUIRE((af.B * boundary_velocity_minus(kp, af)).norm() < 1e-6);
    REQUIRE((af.B.transpose() * boundary_velocity_plus(kp, af)).norm() < 1e-6);
  }
}

TEST_CASE("gradient consistency with finite differences of S") {
  Vec body(2);
  body << 1.0, 0.0;
  Problem rc = rc_restricted_3bp({body}, {1e-3}, 0.8);
  Vec qm(2), qp(2);
  qm << 0.4, 1.1;
  qp << -0.8, 0.7;
  const double E = 0.5, mu = 1e-4;
  const ActionFunction af = connect_fixed_energy(rc, mu, qm, qp, E);

  const double h = 1e-6;
  for (int j = 0; j < 2; ++j) {
    Vec e = Vec::Zero(2);
    e[j] = h;
    const double dSm =
        (connect_fixed_energy(rc, mu, qm + e, qp, E, {af.p_minus, 0}).S -
         connect_fixed_energy(rc, mu, qm - e, qp, E, {af.p_minus, 0}).S) /
        (2 * h);
    REQUIRE(std::abs(dSm - (-af.p_minus[j])) /
                std::max(1.0, std::abs(af.p_minus[j])) <
            1e-5);
    const double dp =
        (connect_fixed_energy(rc, mu, qm, qp + e, E, {af.p_minus, 0}).S -
         connect_fixed_energy(rc, mu, qm, qp - e, E, {af.p_minus, 0}).S) /
        (2 * h);
    REQUIRE(std::abs(dp - af.p_plus[j]) /
                std::max(1.0, std::abs(af.p_plus[j])) <
            1e-5);
  }
}

TEST_CASE("second derivatives of S match finite differences") {
  Problem kp = rc_restricted_3bp({}, {}, 0.0, 1.0, 0.05);
  Vec qm(2), qp(2);
  qm << 1.0, -0.2;
  qp << 0.5, 0.8;
  const double E = 0.1;
  const ActionFunction af = connect_fixed_energy(kp, 0.0, qm, qp, E);

  const double h = 1e-5;
  auto pplus = [&](const Vec& a, const Vec& b) {
    return connect_fixed_energy(kp, 0.0, a, b, E, {af.p_minus, af.orbit.t1})
        .p_plus;
  };
  auto pminus = [&](const Vec& a, const Vec& b) {
    return connect_fixed_energy(kp, 0.0, a, b, E, {af.p_minus, af.orbit.t1})
        .p_minus;
  };
  for (int j = 0; j < 2; ++j) {
    Vec e = Vec::Zero(2);
    e[j] = h;
    const Vec bcol = (pplus(qm + e, qp) - pplus(qm - e, qp)) / (2 * h);
    REQUIRE((bcol - af.B.col(j)).norm() < 1e-5 * std::max(1.0, af.B.norm()));
    const Vec mcol = -(pminus(qm + e, qp) - pminus(qm - e, qp)) / (2 * h);
    REQUIRE((mcol - af.S_mm.col(j)).norm() <
            1e-5 * std::max(1.0, af.S_mm.norm()));
    const Vec pcol = (pplus(qm, qp + e) - pplus(qm, qp - e)) / (2 * h);
    REQUIRE((pcol - af.S_pp.col(j)).norm() <
            1e-5 * std::max(1.0, af.S_pp.norm()));
  }
}

TEST_CASE("restricted twist blocks") {
  SECTION("discrete components give an empty, vacuously invertible block") {
    Problem tri = triangle_centers();
    const Vec a0 = tri.comps[0].base, a1 = tri.comps[1].base;
    const ActionFunction af = connect_fixed_energy(tri, 0.0, a0, a1, 0.5);
    const RestrictedTwist rt = restricted_twist(tri, af, 0, Vec(0), 1, Vec(0));
    REQUIRE(rt.block.size() == 0);
    REQUIRE(rt.invertible);
    REQUIRE(rt.v_minus_transversal);
  }

  SECTION("skew perpendicular wires: twist vanishes at the symmetric chord") {
    Problem pb = skew_wires();
    Vec x0(1), x1(1);
    x0 << 0.0;
    x1 << 0.0;
    const Vec qm = pb.comps[0].chart(x0), qp = pb.comps[1].chart(x1);
    const ActionFunction af = connect_fixed_energy(pb, 0.0, qm, qp, 0.5);
    const RestrictedTwist rt = restricted_twist(pb, af, 0, x0, 1, x1);
    // oracle: d^2/ds dt of c sqrt(s^2 + t^2 + h^2) at s = t = 0 is 0
    REQUIRE(std::abs(rt.block(0, 0)) < 1e-8);
    REQUIRE_FALSE(rt.invertible);
    REQUIRE(rt.v_minus_transversal);
    REQUIRE(rt.v_plus_transversal);
  }

  SECTION("parallel wires, oblique chord: nonzero 1x1 block") {
    Problem pb = parallel_wires();
    Vec x0(1), x1(1);
    x0 << 0.0;
    x1 << 0.7;
    const Vec qm = pb.comps[0].chart(x0), qp = pb.comps[1].chart(x1);
    const ActionFunction af = connect_fixed_energy(pb, 0.0, qm, qp, 0.5);
    const RestrictedTwist rt = restricted_twist(pb, af, 0, x0, 1, x1);
    // oracle: finite differences of S restricted to the charts
    const double h = 1e-5;
    auto Sof = [&](double s, double t) {
      Vec xs(1), xt(1);
      xs << s;
      xt << t;
      return connect_fixed_energy(pb, 0.0, pb.comps[0].chart(xs),
                                  pb.comps[1].chart(xt), 0.5)
          .S;
    };
    const double fd = (Sof(h, 0.7 + h) - Sof(h, 0.7 - h) - Sof(-h, 0.7 + h) +
                       Sof(-h, 0.7 - h)) /
                      (4 * h * h);
    REQUIRE(std::abs(rt.block(0, 0) - fd) < 1e-5);
    REQUIRE(std::abs(rt.block(0, 0)) > 0.1);
    REQUIRE(rt.invertible);
  }
}

TEST_CASE("nondegenerate connections depend smoothly on endpoints") {
  Problem kp = rc_restricted_3bp({}, {}, 0.0, 1.0, 0.05);
  Vec qm(2), qp(2);
  qm << 1.0, 0.0;
  qp << 0.6, 0.9;
  const double E = -0.3;
  const ActionFunction af = connect_fixed_energy(kp, 0.0, qm, qp, E);
  for (int trial = 0; trial < 10; ++trial) {
    const Vec dm = 1e-6 * random_unit(2), dp = 1e-6 * random_unit(2);
    const ActionFunction af2 = connect_fixed_energy(
        kp, 0.0, qm + dm, qp + dp, E,
        {(af.p_minus - kp.gyro(qm)).normalized(), af.orbit.t1});
    REQUIRE(af2.newton_iters <= 3);
  }
}

TEST_CASE("error paths") {
  Problem pb = free_plane();
  Vec qm(2), qp(2);
  qm << 0, 0;
  qp << 3, 4;
  SECTION("hopeless guess diverges to no-connection") {
    BvpGuess g;
    g.dir = Vec(2);
    g.dir << -1, 0; // aimed away with a tiny time budget
    g.T = 1e-3;
    REQUIRE_THROWS_AS(connect_fixed_energy(pb, 0.0, qm, qp, 0.5, g, 1e-10),
                      ConvergenceError);
  }
  SECTION("endpoint outside the domain of possible motion") {
    Problem kp = rc_restricted_3bp({}, {}, 0.0, 1.0, 0.05);
    Vec q0(2);
    q0 << 3.0, 0.0; // W = -1/3 > E for E = -0.5
    REQUIRE_THROWS_AS(connect_fixed_energy(kp, 0.0, q0, qp, -0.5),
                      DomainError);
  }
}
