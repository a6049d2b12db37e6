#include "helpers.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace degbill;
using namespace degbill::testing;

namespace {
Problem free_plane() {
  Vec far(2);
  far << 100.0, 100.0; // center far outside every orbit used below
  return n_centers_2d({far}, {1.0}, 0.05);
}
Problem kepler() { return rc_restricted_3bp({}, {}, 0.0, 1.0, 0.05); }
} // namespace

TEST_CASE("free particle flows in straight lines") {
  Problem pb = free_plane();
  Vec q0(2), p0(2);
  q0 << 0, 0;
  p0 << 1, 0;
  const Trajectory tr = integrate(pb, 0.0, make_state(pb, q0, p0, 0.0), 2.0);
  Vec expect(2);
  expect << 2, 0;
  REQUIRE((tr.q(2.0) - expect).norm() < 1e-12);
  REQUIRE(std::abs(pb.H(tr.q(2.0), tr.p(2.0), 0.0) - 0.5) < 1e-13);
}

TEST_CASE("Kepler circular orbit stays circular") {
  Problem pb = kepler();
  Vec q0(2), p0(2);
  q0 << 1, 0;
  p0 << 0, 1;
  const double T = 2 * M_PI;
  const Trajectory tr = integrate(pb, 0.0, make_state(pb, q0, p0, 0.0), T);
  for (double t = 0; t <= T; t += T / 17)
    REQUIRE(std::abs(tr.q(t).norm() - 1.0) < 1e-11);
  REQUIRE((tr.q(T) - q0).norm() < 1e-9);
}

TEST_CASE("energy drift stays below 1e-9 over t in [0,50]") {
  struct Case {
    Problem pb;
    Vec q0, p0;
    double mu;
  };
  std::vector<Case> cases;
  {
    Problem pb = triangle_centers();
    Vec q0(2), p0(2);
    q0 << 3.0, 0.2;
    p0 << 0.9, 0.45;
    cases.push_back({pb, q0, p0, -1e-4});
  }
  {
    Problem pb = skew_wires();
    Vec q0(3), p0(3);
    q0 << 0.0, 2.0, 0.5;
    p0 << 0.3, 0.9, 0.4;
    cases.push_back({pb, q0, p0, 1e-4});
  }
  {
    Vec c(3);
    c << 0, 0, 0;
    Problem pb = n_centers_3d({c}, {1.0}, 0.05);
    Vec q0(3), p0(3);
    q0 << 2.0, 0.0, 0.0;
    p0 << 0.0, 0.7, 0.4;
    cases.push_back({pb, q0, p0, 1e-3});
  }
  {
    Vec body(2);
    body << 1.0, 0.0;
    Problem pb = rc_restricted_3bp({body}, {1e-3}, 1.0);
    Vec q0(2), p0(2);
    q0 << 0.0, 2.0;
    p0 << 0.6, 0.8;
    cases.push_back({pb, q0, p0, -1e-4});
  }
  for (auto& c : cases) {
    const PhaseState s0 = make_state(c.pb, c.q0, c.p0, c.mu);
    const Trajectory tr = integrate_flow(c.pb, c.mu, s0, 50.0, 1e-12, {},
                                         /*monitor_handoff=*/false)
                              .traj;
    double drift = 0;
    for (double t = 0; t <= 50.0; t += 2.5)
      drift = std::max(drift,
                       std::abs(c.pb.H(tr.q(t), tr.p(t), c.mu) - s0.H));
    REQUIRE(drift < 1e-9);
  }
}

TEST_CASE("maupertuis action of straight segment") {
  Problem pb = free_plane();
  Vec q0(2), p0(2);
  q0 << 0, 0;
  p0 << 0.6, 0.8; // E = 1/2, aimed at (3,4)
  const Trajectory tr = integrate(pb, 0.0, make_state(pb, q0, p0, 0.0), 5.0);
  REQUIRE(std::abs(maupertuis_action(tr) - 5.0) < 1e-9);

  SECTION("additivity over concatenation") {
    const Trajectory a = integrate(pb, 0.0, make_state(pb, q0, p0, 0.0), 2.2);
    const Trajectory b =
        integrate(pb, 0.0, make_state(pb, a.q(2.2), a.p(2.2), 0.0, 2.2), 2.8);
    REQUIRE(std::abs(a.action() + b.action() - tr.action()) < 1e-10);
  }

  SECTION("time reversal with p -> -p reproduces the value") {
    Problem kp = kepler();
    Vec qk(2), pk(2);
    qk << 1.3, 0.0;
    pk << 0.1, 0.9;
    const Trajectory fwd = integrate(kp, 0.0, make_state(kp, qk, pk, 0.0), 1.7);
    const Trajectory rev = integrate(
        kp, 0.0, make_state(kp, fwd.q(1.7), Vec(-fwd.p(1.7)), 0.0), 1.7);
    REQUIRE(std::abs(rev.action() - fwd.action()) < 1e-10);
    REQUIRE((rev.q(1.7) - qk).norm() < 1e-9);
  }

  SECTION("Kepler arc action matches the Jacobi length quadrature") {
    Problem kp = kepler();
    Vec qk(2), pk(2);
    qk << 1.0, 0.0;
    pk << 0.2, 1.05;
    const PhaseState s0 = make_state(kp, qk, pk, 0.0);
    const Trajectory tr2 = integrate(kp, 0.0, s0, 2.0);
    REQUIRE(std::abs(jacobi_length(kp, tr2, s0.H, 0.0) - tr2.action()) < 1e-7);
  }
}

TEST_CASE("needs-regularization signal near a center") {
  Problem pb = triangle_centers();
  Vec q0(2), p0(2);
  q0 << -1.0, 0.0;
  p0 << 1.0, 0.0; // aimed straight at the center at the origin
  REQUIRE_THROWS_AS(
      integrate(pb, -1e-4, make_state(pb, q0, p0, -1e-4), 3.0),
      NeedsRegularization);
}

TEST_CASE("state transition matrices") {
  SECTION("free particle = identity blocks with T coupling") {
    Problem pb = free_plane();
    Vec q0(2), p0(2);
    q0 << 0, 0;
    p0 << 0.3, 0.4;
    const double T = 2.0;
    const Trajectory tr = integrate(pb, 0.0, make_state(pb, q0, p0, 0.0), T);
    const Mat M = sensitivity(pb, 0.0, tr);
    Mat expect = Mat::Identity(4, 4);
    expect(0, 2) = T;
    expect(1, 3) = T;
    REQUIRE((M - expect).norm() < 1e-10);
  }

  SECTION("symplectic within 1e-8 and matches finite differences") {
    Problem kp = kepler();
    Vec q0(2), p0(2);
    q0 << 1.0, 0.1;
    p0 << 0.15, 0.95;
    const double T = 2.3;
    const Trajectory tr = integrate(kp, 0.0, make_state(kp, q0, p0, 0.0), T);
    const Mat M = sensitivity(kp, 0.0, tr);
    const Mat Om = symplectic_form(2);
    REQUIRE((M.transpose() * Om * M - Om).cwiseAbs().maxCoeff() < 1e-8);

    // finite-difference columns
    const double h = 1e-6;
    for (int j = 0; j < 4; ++j) {
      Vec qp0(4);
      qp0 << q0, p0;
      Vec plus = qp0, minus = qp0;
      plus[j] += h;
      minus[j] -= h;
      auto endpoint = [&](const Vec& s) {
        const Trajectory t2 = integrate(
            kp, 0.0, make_state(kp, s.head(2), s.tail(2), 0.0), T);
        Vec e(4);
        e << t2.q(T), t2.p(T);
        return e;
      };
      const Vec col = (endpoint(plus) - endpoint(minus)) / (2 * h);
      REQUIRE((col - M.col(j)).norm() / M.col(j).norm() < 1e-5);
    }
  }

  SECTION("rotating frame keeps symplectic structure") {
    Vec body(2);
    body << 1.0, 0.0;
    Problem rc = rc_restricted_3bp({body}, {1e-3}, 1.0);
    Vec q0(2), p0(2);
    q0 << 0.0, 1.8;
    p0 << 0.4, 0.3;
    const Trajectory tr =
        integrate(rc, 1e-4, make_state(rc, q0, p0, 1e-4), 1.5);
    const Mat M = sensitivity(rc, 1e-4, tr);
    const Mat Om = symplectic_form(2);
    REQUIRE((M.transpose() * Om * M - Om).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("determinism: identical inputs give identical trajectories") {
  Problem pb = triangle_centers();
  Vec q0(2), p0(2);
  q0 << 3.0, 0.2;
  p0 << 0.9, 0.45;
  const Trajectory a = integrate(pb, -1e-4, make_state(pb, q0, p0, -1e-4), 10.0);
  const Trajectory b = integrate(pb, -1e-4, make_state(pb, q0, p0, -1e-4), 10.0);
  for (double t = 0; t <= 10.0; t += 0.7) {
    REQUIRE((a.q(t) - b.q(t)).norm() == 0.0);
    REQUIRE((a.p(t) - b.p(t)).norm() == 0.0);
  }
}
