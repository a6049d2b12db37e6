#pragma once

// Fixed-energy Hamiltonian integration away from the scatterer: dense
// trajectories with accumulated Maupertuis action, first-order sensitivities
// (state-transition matrices), and the handoff monitor that refuses to
// integrate through the tube core in physical coordinates.

#include "degbill/dop853.hpp"
#include "degbill/geometry.hpp"

#include <functional>

namespace degbill {

struct PhaseState {
  Vec q, p;
  double t = 0;
  double H = std::numeric_limits<double>::quiet_NaN();
};

inline PhaseState make_state(const Problem& pb, const Vec& q, const Vec& p,
                             double mu, double t = 0) {
  PhaseState s;
  s.q = q;
  s.p = p;
  s.t = t;
  s.H = pb.H(q, p, mu);
  if (!s.q.allFinite() || !s.p.allFinite())
    throw DomainError("phase state has non-finite entries");
  return s;
}

/// Handoff radius below which physical integration refuses to continue for
/// mu != 0 (regularized coordinates take over there).
inline double handoff_radius(const Problem& pb, double mu) {
  return std::max(10.0 * std::sqrt(std::abs(mu)) * pb.rho, 1e-3 * pb.rho);
}

/// A fixed-energy trajectory with dense output. State layout: (q, p, J)
/// where J accumulates the Maupertuis action integral <p, qdot> dt.
class Trajectory {
public:
  int m = 0;
  double E = 0, mu = 0;
  double t0 = 0, t1 = 0;
  DenseOutput<WorkVec> dense;
  double min_scatterer_distance = std::numeric_limits<double>::infinity();

  Vec q(double t) const { return dense(t).head(m); }
  Vec p(double t) const { return dense(t).segment(m, m); }
  double action_at(double t) const { return dense(t)[2 * m]; }
  double action() const { return action_at(t1) - action_at(t0); }
  PhaseState state(double t) const {
    const WorkVec s = dense(t);
    PhaseState ps;
    ps.q = s.head(m);
    ps.p = s.segment(m, m);
    ps.t = t;
    return ps;
  }
  double duration() const { return t1 - t0; }
};

namespace detail {

inline void flow_rhs(const Problem& pb, double mu, const WorkVec& s,
                     WorkVec& ds) {
  const int m = pb.m;
  const Vec q = s.head(m), p = s.segment(m, m);
  const Vec pw = p - pb.gyro(q);
  Vec pdot = -pb.gradW(q);
  if (pb.omega != 0.0) pdot += pb.gyro_jac().transpose() * pw;
  if (mu != 0.0) pdot -= mu * pb.gradVsing(q);
  ds.head(m) = pw;              // qdot
  ds.segment(m, m) = pdot;      // pdot
  ds[2 * m] = p.dot(pw);        // action integrand <p, qdot>
}

inline void scan_min_distance(const Problem& pb, Trajectory& tr) {
  double best = std::numeric_limits<double>::infinity();
  double targ = tr.t0;
  for (const auto& seg : tr.dense.segs)
    for (int i = 0; i <= 6; ++i) {
      const double t = seg.t0 + seg.h * i / 6.0;
      const double d = pb.dist_scatterer(seg.eval(t).head(pb.m));
      if (d < best) {
        best = d;
        targ = t;
      }
    }
  // golden-section polish around the sampled minimum
  double a = std::max(tr.t0, targ - 0.2 * std::abs(tr.t1 - tr.t0));
  double b = std::min(tr.t1, targ + 0.2 * std::abs(tr.t1 - tr.t0));
  if (tr.t1 < tr.t0) std::swap(a, b);
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - gr * (b - a), d = a + gr * (b - a);
  auto f = [&](double t) { return pb.dist_scatterer(tr.q(t)); };
  double fc = f(c), fd = f(d);
  for (int it = 0; it < 80 && std::abs(b - a) > 1e-13; ++it) {
    if (fc < fd) {
      b = d; d = c; fd = fc;
      c = b - gr * (b - a);
      fc = f(c);
    } else {
      a = c; c = d; fc = fd;
      d = a + gr * (b - a);
      fd = f(d);
    }
  }
  tr.min_scatterer_distance = std::min(best, std::min(fc, fd));
}

/// Orthonormal completion of a unit vector (columns span its complement).
inline Mat unit_complement(const Vec& dir) {
  const int m = static_cast<int>(dir.size());
  Mat Q = dir * dir.transpose();
  Eigen::JacobiSVD<Mat> svd(Mat::Identity(m, m) - Q,
                            Eigen::ComputeFullU);
  return svd.matrixU().leftCols(m - 1);
}

} // namespace detail

struct FlowEvent {
  std::function<double(double, const Vec&, const Vec&)> g; // (t, q, p)
  int direction = 0;
};

struct FlowResult {
  Trajectory traj;
  StopReason reason = StopReason::ReachedEnd;
  int event_index = -1; // index into the user event list
};

/// Integrates the system (M \ N, H_mu) from state0 over [t0, t0 + t_span].
/// Raises NeedsRegularization if the orbit enters the handoff radius while
/// mu != 0. Extra events stop the integration at their first root.
inline FlowResult integrate_flow(const Problem& pb, double mu,
                                 const PhaseState& state0, double t_span,
                                 double tol = 1e-12,
                                 const std::vector<FlowEvent>& user_events = {},
                                 bool monitor_handoff = true) {
  const int m = pb.m;
  WorkVec y0(2 * m + 1);
  y0.head(m) = state0.q;
  y0.segment(m, m) = state0.p;
  y0[2 * m] = 0.0;

  std::vector<EventSpec<WorkVec>> events;
  const bool monitored = monitor_handoff && mu != 0.0;
  const double rh = handoff_radius(pb, mu);
  if (monitored)
    events.push_back({[&pb, rh](double, const WorkVec& s) {
                        return pb.dist_scatterer(s.head(pb.m)) - rh;
                      },
                      -1});
  for (const auto& ev : user_events)
    events.push_back({[&pb, g = ev.g](double t, const WorkVec& s) {
                        return g(t, s.head(pb.m), s.segment(pb.m, pb.m));
                      },
                      ev.direction});

  OdeOptions opt;
  opt.rtol = tol;
  opt.atol = tol;
  auto rhs = [&pb, mu](double, const WorkVec& s, WorkVec& ds) {
    ds.resize(s.size());
    detail::flow_rhs(pb, mu, s, ds);
  };
  auto r = integrate_ode(rhs, state0.t, y0, state0.t + t_span, opt, events);

  if (r.reason == StopReason::Event && monitored && r.event_index == 0) {
    Vec s(2 * m);
    s.head(m) = r.y_end.head(m);
    s.segment(m, m) = r.y_end.segment(m, m);
    throw NeedsRegularization("trajectory entered the regularization handoff "
                              "radius in physical coordinates",
                              s, r.t_end);
  }

  FlowResult out;
  out.traj.m = m;
  out.traj.mu = mu;
  out.traj.E = state0.H;
  out.traj.t0 = state0.t;
  out.traj.t1 = r.t_end;
  out.traj.dense = std::move(r.dense);
  out.reason = r.reason;
  out.event_index =
      r.reason == StopReason::Event ? r.event_index - (monitored ? 1 : 0) : -1;
  detail::scan_min_distance(pb, out.traj);
  return out;
}

inline Trajectory integrate(const Problem& pb, double mu,
                            const PhaseState& state0, double t_span,
                            double tol = 1e-12) {
  return integrate_flow(pb, mu, state0, t_span, tol).traj;
}

inline double maupertuis_action(const Trajectory& tr) { return tr.action(); }

/// State-transition matrix of the flow linearized along a trajectory:
/// re-integrates (q, p, vec(M)) with the analytic variational equations.
inline Mat sensitivity(const Problem& pb, double mu, const Trajectory& tr,
                       double tol = 1e-12) {
  const int m = pb.m, n2 = 2 * m;
  WorkVec y0(n2 + n2 * n2);
  y0.head(m) = tr.q(tr.t0);
  y0.segment(m, m) = tr.p(tr.t0);
  Eigen::Map<Mat>(y0.data() + n2, n2, n2) = Mat::Identity(n2, n2);

  const Mat Om = pb.gyro_jac();
  auto rhs = [&](double, const WorkVec& s, WorkVec& ds) {
    ds.resize(s.size());
    const Vec q = s.head(m), p = s.segment(m, m);
    const Vec pw = p - pb.gyro(q);
    Vec pdot = -pb.gradW(q);
    if (pb.omega != 0.0) pdot += Om.transpose() * pw;
    if (mu != 0.0) pdot -= mu * pb.gradVsing(q);
    ds.head(m) = pw;
    ds.segment(m, m) = pdot;
    Mat A(n2, n2);
    A.topLeftCorner(m, m) = -Om;
    A.topRightCorner(m, m) = Mat::Identity(m, m);
    Mat dpq = -pb.hessW(q);
    if (pb.omega != 0.0) dpq -= Om.transpose() * Om;
    if (mu != 0.0) dpq -= mu * pb.hessVsing(q);
    A.bottomLeftCorner(m, m) = dpq;
    A.bottomRightCorner(m, m) = Om.transpose();
    Eigen::Map<const Mat> M(s.data() + n2, n2, n2);
    Eigen::Map<Mat>(ds.data() + n2, n2, n2) = A * M;
  };
  OdeOptions opt;
  opt.rtol = tol;
  opt.atol = tol;
  auto r = integrate_ode(rhs, tr.t0, y0, tr.t1, opt);
  return Eigen::Map<const Mat>(r.y_end.data() + n2, n2, n2);
}

/// Canonical symplectic form matrix Omega = [[0, I], [-I, 0]].
inline Mat symplectic_form(int m) {
  Mat J = Mat::Zero(2 * m, 2 * m);
  J.topRightCorner(m, m) = Mat::Identity(m, m);
  J.bottomLeftCorner(m, m) = -Mat::Identity(m, m);
  return J;
}

} // namespace degbill
