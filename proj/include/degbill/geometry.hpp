#pragma once

// Scatterer components with analytic charts (points, lines, circles),
// orthonormal normal frames, tube (semigeodesic) coordinates, the Jacobi
// metric and the tangent Hamiltonian F on T*N.
//
// Ambient geometry is Euclidean; the metric evaluator interface stays in
// ProblemDefinition so curved backends can be added without touching callers.

#include "degbill/core.hpp"

#include <optional>
#include <string>
#include <vector>

namespace degbill {

enum class ChartKind { Point, Line, Circle };

/// One connected component of the scatterer N.
///
/// Invariants: the normal frame is orthonormal and orthogonal to the
/// component's tangent space at every chart point; for Line/Circle the frame
/// is parallel along the chart, so the induced metric has no cross terms.
struct Component {
  ChartKind kind = ChartKind::Point;
  int ambient_dim = 2;
  double alpha = 1.0; // singular strength (mass) of this component
  Vec base;           // point position / a point on the line / circle center
  Vec dir;            // line direction (unit); circle axis (unit, 3-D)
  double radius = 0;  // circle radius

  int intrinsic_dim() const { return kind == ChartKind::Point ? 0 : 1; }
  int codim() const { return ambient_dim - intrinsic_dim(); }

  /// Chart map x -> ambient point.
  Vec chart(const Vec& x) const {
    switch (kind) {
    case ChartKind::Point:
      return base;
    case ChartKind::Line:
      return base + x[0] * dir;
    case ChartKind::Circle: {
      Vec q = base;
      q += radius * (std::cos(x[0]) * frame_e1_ + std::sin(x[0]) * frame_e2_);
      return q;
    }
    }
    throw Error("bad chart kind");
  }

  /// d(chart)/dx, an m x n_c matrix.
  Mat chart_jac(const Vec& x) const {
    Mat J(ambient_dim, intrinsic_dim());
    switch (kind) {
    case ChartKind::Point:
      break;
    case ChartKind::Line:
      J.col(0) = dir;
      break;
    case ChartKind::Circle:
      J.col(0) =
          radius * (-std::sin(x[0]) * frame_e1_ + std::cos(x[0]) * frame_e2_);
      break;
    }
    return J;
  }

  /// Second derivative of the chart along the single intrinsic direction.
  Vec chart_hess(const Vec& x) const {
    switch (kind) {
    case ChartKind::Point:
    case ChartKind::Line:
      return Vec::Zero(ambient_dim);
    case ChartKind::Circle:
      return radius *
             (-std::cos(x[0]) * frame_e1_ - std::sin(x[0]) * frame_e2_);
    }
    throw Error("bad chart kind");
  }

  /// Orthonormal normal frame e_1(x),...,e_d(x) as matrix columns.
  Mat normal_frame(const Vec& x) const {
    const int m = ambient_dim, d = codim();
    Mat E(m, d);
    switch (kind) {
    case ChartKind::Point:
      E = Mat::Identity(m, m);
      break;
    case ChartKind::Line:
      E.col(0) = frame_e1_;
      E.col(1) = frame_e2_;
      break;
    case ChartKind::Circle:
      E.col(0) = std::cos(x[0]) * frame_e1_ + std::sin(x[0]) * frame_e2_;
      E.col(1) = dir;
      break;
    }
    return E;
  }

  /// Induced tangential metric coefficient (n_c = 1 components), including
  /// the normal offset: line -> 1, circle -> (R + u_radial)^2.
  double metric_coeff(const Vec& x, const Vec& u) const {
    (void)x;
    switch (kind) {
    case ChartKind::Point:
      return 0.0;
    case ChartKind::Line:
      return 1.0;
    case ChartKind::Circle:
      return sqr(radius + (u.size() ? u[0] : 0.0));
    }
    throw Error("bad chart kind");
  }

  /// Nearest chart point and distance; empty when the projection is
  /// undefined (circle axis).
  std::optional<std::pair<Vec, double>> project(const Vec& q) const {
    switch (kind) {
    case ChartKind::Point:
      return std::make_pair(Vec(0), (q - base).norm());
    case ChartKind::Line: {
      Vec x(1);
      x[0] = (q - base).dot(dir);
      return std::make_pair(x, (q - chart(x)).norm());
    }
    case ChartKind::Circle: {
      const Vec rel = q - base;
      const double c1 = rel.dot(frame_e1_), c2 = rel.dot(frame_e2_);
      const double rr = std::hypot(c1, c2);
      if (rr < 1e-12) return std::nullopt; // on the axis: no unique nearest
      Vec x(1);
      x[0] = std::atan2(c2, c1);
      return std::make_pair(x, (q - chart(x)).norm());
    }
    }
    throw Error("bad chart kind");
  }

  void finish_setup() {
    if (kind == ChartKind::Line || kind == ChartKind::Circle) {
      dir.normalize();
      // deterministic parallel normal frame: complete dir to an orthonormal
      // basis starting from the least-aligned coordinate axis
      int k = 0;
      for (int i = 1; i < ambient_dim; ++i)
        if (std::abs(dir[i]) < std::abs(dir[k])) k = i;
      Vec e = Vec::Zero(ambient_dim);
      e[k] = 1.0;
      frame_e1_ = (e - e.dot(dir) * dir).normalized();
      if (ambient_dim == 3) {
        frame_e2_ = Vec(3);
        frame_e2_ << dir[1] * frame_e1_[2] - dir[2] * frame_e1_[1],
            dir[2] * frame_e1_[0] - dir[0] * frame_e1_[2],
            dir[0] * frame_e1_[1] - dir[1] * frame_e1_[0];
      }
    }
    if (kind == ChartKind::Circle) {
      // frame_e1_/frame_e2_ span the circle plane (dir = axis)
      if (ambient_dim != 3) throw DomainError("circle components need m = 3");
    }
  }

  Vec frame_e1_, frame_e2_; // constant frame legs (line: normals; circle: plane)
};

/// Problem definition: Euclidean ambient metric, optional rotating-frame
/// gyroscopic term w(q) = omega x q, optional Kepler term W = -k/|q|, and a
/// singular potential mu*V with V(q) = -sum_c alpha_c / d(q, N_c).
struct Problem {
  std::string kind;
  int m = 2;
  std::vector<Component> comps;
  double omega = 0.0;      // rotating-frame angular rate (axis = z for m=3)
  double kepler_k = 0.0;   // strength of the central smooth term -k/|q|
  double rho = 0.0;        // tube radius (set by finish_setup if 0)
  double mu_max = 1e-2;    // |mu| range accepted by solvers

  // -- smooth scalar potential W ------------------------------------------
  double W(const Vec& q) const {
    return kepler_k != 0.0 ? -kepler_k / q.norm() : 0.0;
  }
  Vec gradW(const Vec& q) const {
    if (kepler_k == 0.0) return Vec::Zero(m);
    const double r = q.norm();
    return kepler_k * q / (r * r * r);
  }
  Mat hessW(const Vec& q) const {
    if (kepler_k == 0.0) return Mat::Zero(m, m);
    const double r = q.norm();
    return kepler_k *
           (Mat::Identity(m, m) / (r * r * r) - 3.0 * q * q.transpose() / std::pow(r, 5));
  }

  // -- gyroscopic covector w(q) (linear in q) ------------------------------
  Vec gyro(const Vec& q) const {
    Vec w = Vec::Zero(m);
    if (omega != 0.0) {
      w[0] = -omega * q[1];
      w[1] = omega * q[0];
    }
    return w;
  }
  Mat gyro_jac() const {
    Mat J = Mat::Zero(m, m);
    if (omega != 0.0) {
      J(0, 1) = -omega;
      J(1, 0) = omega;
    }
    return J;
  }

  // -- singular potential ---------------------------------------------------
  double comp_dist(int c, const Vec& q) const {
    auto pr = comps[c].project(q);
    if (!pr) throw DomainError("projection undefined (component cut locus)");
    return pr->second;
  }

  double Vsing(const Vec& q) const {
    double v = 0;
    for (int c = 0; c < (int)comps.size(); ++c)
      v -= comps[c].alpha / comp_dist(c, q);
    return v;
  }
  Vec gradVsing(const Vec& q) const {
    Vec g = Vec::Zero(m);
    for (const auto& comp : comps) g += comp.alpha * grad_invdist(comp, q);
    return -g;
  }
  Mat hessVsing(const Vec& q) const {
    Mat h = Mat::Zero(m, m);
    for (const auto& comp : comps) h += comp.alpha * hess_invdist(comp, q);
    return -h;
  }

  /// Smooth remainder of V on the tube of component c.
  double V_other(int c, const Vec& q) const {
    return Vsing(q) + comps[c].alpha / comp_dist(c, q);
  }
  Vec gradV_other(int c, const Vec& q) const {
    return gradVsing(q) + comps[c].alpha * grad_invdist(comps[c], q);
  }

  /// Singular strength phi on the tube of component c:
  /// V = -phi/d(q,N) with phi(q) = alpha_c - d * V_other(q).
  double phi(int c, const Vec& q) const {
    return comps[c].alpha - comp_dist(c, q) * V_other(c, q);
  }
  double phi0(int c) const { return comps[c].alpha; }

  // -- Hamiltonian ----------------------------------------------------------
  double H(const Vec& q, const Vec& p, double mu) const {
    const Vec pw = p - gyro(q);
    double h = 0.5 * pw.squaredNorm() + W(q);
    if (mu != 0.0) h += mu * Vsing(q);
    return h;
  }

  double dist_scatterer(const Vec& q) const {
    double best = std::numeric_limits<double>::infinity();
    for (int c = 0; c < (int)comps.size(); ++c) {
      auto pr = comps[c].project(q);
      if (pr) best = std::min(best, pr->second);
    }
    return best;
  }

  /// Separation-based default tube radius.
  void finish_setup() {
    for (auto& c : comps) c.finish_setup();
    if (rho > 0) return;
    double sep = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < comps.size(); ++i)
      for (std::size_t j = i + 1; j < comps.size(); ++j) {
        // sampled inter-component distance
        for (double s = -2.0; s <= 2.0; s += 0.125) {
          Vec xi(comps[i].intrinsic_dim());
          if (xi.size()) xi[0] = s;
          auto pr = comps[j].project(comps[i].chart(xi));
          if (pr) sep = std::min(sep, pr->second);
        }
      }
    rho = std::isfinite(sep) ? 0.05 * sep : 0.05;
  }

private:
  static Vec grad_invdist(const Component& c, const Vec& q) {
    // gradient of 1/d(q, component)
    switch (c.kind) {
    case ChartKind::Point: {
      const Vec r = q - c.base;
      return -r / std::pow(r.norm(), 3);
    }
    case ChartKind::Line: {
      Vec r = q - c.base;
      r -= r.dot(c.dir) * c.dir;
      return -r / std::pow(r.norm(), 3);
    }
    case ChartKind::Circle:
      throw DomainError("circle components carry no singular strength here");
    }
    throw Error("bad chart kind");
  }
  static Mat hess_invdist(const Component& c, const Vec& q) {
    switch (c.kind) {
    case ChartKind::Point: {
      const Vec r = q - c.base;
      const double d = r.norm();
      return 3.0 * r * r.transpose() / std::pow(d, 5) -
             Mat::Identity(q.size(), q.size()) / std::pow(d, 3);
    }
    case ChartKind::Line: {
      Vec r = q - c.base;
      r -= r.dot(c.dir) * c.dir;
      const double d = r.norm();
      const Mat P = Mat::Identity(q.size(), q.size()) -
                    c.dir * c.dir.transpose();
      return 3.0 * r * r.transpose() / std::pow(d, 5) - P / std::pow(d, 3);
    }
    case ChartKind::Circle:
      throw DomainError("circle components carry no singular strength here");
    }
    throw Error("bad chart kind");
  }
};

// ---------------------------------------------------------------------------
// tube coordinates

struct TubeCoords {
  int comp;
  Vec x; // chart coordinates (may be empty)
  Vec u; // normal offsets in the frame, |u| = d(q, N)
};

/// exp map f(x,u) = chart(x) + sum u_i e_i(x). Requires |u| <= rho.
inline Vec exp_map(const Problem& pb, int comp, const Vec& x, const Vec& u) {
  if (u.norm() > pb.rho * (1 + 1e-12))
    throw DomainError("exp_map: point outside the tube (|u| > rho)");
  const Component& c = pb.comps[comp];
  return c.chart(x) + c.normal_frame(x) * u;
}

/// Inverse of exp_map. Rejects points outside the tube and points whose
/// nearest scatterer point is ambiguous.
inline TubeCoords tube_coordinates(const Problem& pb, const Vec& q) {
  struct Cand {
    int comp;
    Vec x;
    double d;
  };
  std::vector<Cand> cands;
  for (int c = 0; c < (int)pb.comps.size(); ++c) {
    auto pr = pb.comps[c].project(q);
    if (pr) cands.push_back({c, pr->first, pr->second});
  }
  if (cands.empty()) throw DomainError("tube_coordinates: no projection");
  std::sort(cands.begin(), cands.end(),
            [](const Cand& a, const Cand& b) { return a.d < b.d; });
  const Cand& best = cands[0];
  if (best.d > pb.rho * (1 + 1e-12))
    throw DomainError("tube_coordinates: point outside the tube");
  if (cands.size() > 1) {
    const Cand& next = cands[1];
    const Vec p0 = pb.comps[best.comp].chart(best.x);
    const Vec p1 = pb.comps[next.comp].chart(next.x);
    if (next.d - best.d < 1e-9 * std::max(1.0, best.d) &&
        (p1 - p0).norm() > 1e-6)
      throw DomainError("tube_coordinates: ambiguous nearest point (cut locus)");
  }
  const Component& c = pb.comps[best.comp];
  const Mat E = c.normal_frame(best.x);
  const Vec rel = q - c.chart(best.x);
  TubeCoords tc;
  tc.comp = best.comp;
  tc.x = best.x;
  tc.u = E.transpose() * rel;
  if ((rel - E * tc.u).norm() > 1e-9)
    throw DomainError("tube_coordinates: residual normal decomposition error");
  return tc;
}

// ---------------------------------------------------------------------------
// Jacobi metric and tangent Hamiltonian

/// g_E(q,v) = sqrt(2(E - W_mu(q))) |v| + <w(q), v>, defined on {W_mu < E}.
inline double jacobi_norm(const Problem& pb, const Vec& q, const Vec& v,
                          double E, double mu = 0.0) {
  double Wq = pb.W(q);
  if (mu != 0.0) Wq += mu * pb.Vsing(q);
  if (Wq >= E)
    throw DomainError("jacobi_norm: outside the domain of possible motion");
  return std::sqrt(2.0 * (E - Wq)) * v.norm() + pb.gyro(q).dot(v);
}

struct TangentState {
  int comp;
  Vec x, y;
  double F;
  bool inside_ME;
};

/// Tangential gyro component a(x) = w(chart(x)) restricted to T_xN, in the
/// chart basis (scaled by the induced metric).
inline double tangential_gyro(const Problem& pb, int comp, const Vec& x) {
  const Component& c = pb.comps[comp];
  if (c.intrinsic_dim() == 0) return 0.0;
  return pb.gyro(c.chart(x)).dot(c.chart_jac(x).col(0));
}

/// F(x,y) = 1/2 |y - a(x)|^2 (induced metric) + W(x); the Hamiltonian on T*N.
inline TangentState tangent_hamiltonian(const Problem& pb, int comp,
                                        const Vec& x, const Vec& y,
                                        double E) {
  const Component& c = pb.comps[comp];
  TangentState ts;
  ts.comp = comp;
  ts.x = x;
  ts.y = y;
  const double Wx = pb.W(c.chart(x));
  if (c.intrinsic_dim() == 0) {
    ts.F = Wx;
  } else {
    const double g = c.metric_coeff(x, Vec::Zero(c.codim()));
    const double a = tangential_gyro(pb, comp, x);
    ts.F = 0.5 * sqr(y[0] - a) / g + Wx;
  }
  ts.inside_ME = ts.F < E;
  return ts;
}

/// nu(z) = sqrt(2(E - F0(z))), the collision speed normal to N.
inline double collision_speed(const Problem& pb, int comp, const Vec& x,
                              const Vec& y, double E) {
  const double F = tangent_hamiltonian(pb, comp, x, y, E).F;
  if (F >= E) throw DomainError("collision_speed: z outside M_E");
  return std::sqrt(2.0 * (E - F));
}

} // namespace degbill
