#include "semiwave/integrate.hpp"

#include <cmath>
#include <sstream>

namespace semiwave {

std::string to_string(Integrator i) { return i == Integrator::midpoint ? "midpoint" : "rk4"; }

Integrator integrator_from_string(const std::string& name) {
  if (name == "midpoint" || name == "implicit_midpoint") return Integrator::midpoint;
  if (name == "rk4") return Integrator::rk4;
  throw std::invalid_argument("unknown integrator '" + name + "' (expected midpoint or rk4)");
}

std::vector<double> Trajectory::times() const {
  std::vector<double> t;
  t.reserve(states.size());
  for (const auto& s : states) t.push_back(s.t);
  return t;
}

State initial_state(const GalerkinSystem& sys, std::optional<double> truncation) {
  const auto& rule = sys.rule();
  const auto& init = sys.spec().initial;
  std::vector<double> u0(rule.size()), u1(rule.size());
  for (std::size_t q = 0; q < rule.size(); ++q) {
    u0[q] = init.u0(0.0, rule.node(q));
    u1[q] = init.u1(0.0, rule.node(q));
  }
  if (truncation) u0 = truncate(u0, *truncation);
  State s;
  s.t = 0.0;
  s.d = project_H(u0, sys.table(), rule);
  s.e = project_H(u1, sys.table(), rule);
  return s;
}

namespace {

Eigen::LLT<Eigen::MatrixXd> factor_mass(const Eigen::MatrixXd& C, double t) {
  Eigen::LLT<Eigen::MatrixXd> llt(C);
  if (llt.info() != Eigen::Success) {
    std::ostringstream os;
    os << "mass matrix C(" << t << ") is not positive definite";
    throw StepFailure(os.str());
  }
  return llt;
}

}  // namespace

std::pair<Eigen::VectorXd, Eigen::VectorXd> rhs(const GalerkinSystem& sys, double t, const State& s) {
  const auto llt = factor_mass(sys.assemble_C(t), t);
  const Eigen::VectorXd force = sys.assemble_load(t) - sys.assemble_M(t).M * s.d -
                                sys.assemble_C_dt(t) * s.e - sys.assemble_nonlinear(s.d);
  return {s.e, llt.solve(force)};
}

Eigen::MatrixXd rhs_jacobian(const GalerkinSystem& sys, double t, const State& s) {
  const auto m = static_cast<Eigen::Index>(sys.size());
  const auto llt = factor_mass(sys.assemble_C(t), t);
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(2 * m, 2 * m);
  J.topRightCorner(m, m).setIdentity();
  J.bottomLeftCorner(m, m) = -llt.solve(sys.assemble_M(t).M + sys.nonlinear_jacobian(s.d));
  J.bottomRightCorner(m, m) = -llt.solve(sys.assemble_C_dt(t));
  return J;
}

State step_midpoint(const GalerkinSystem& sys, const State& s, double dt, double newton_tol, int max_iter,
                    StepStats* stats) {
  if (dt == 0.0) return s;
  const double tm = s.t + 0.5 * dt;
  const Eigen::MatrixXd C = sys.assemble_C(tm);
  const Eigen::MatrixXd Cdt = sys.assemble_C_dt(tm);
  const Eigen::MatrixXd M = sys.assemble_M(tm).M;
  const Eigen::VectorXd v = sys.assemble_load(tm);
  const auto llt = factor_mass(C, tm);

  // Unknown: midpoint velocity em. Then
  //   dm = d0 + dt/2 em,  d1 = d0 + dt em,  e1 = 2 em - e0,
  // and the velocity equation 2 C (em - e0) = dt (v - M dm - C' em - F(dm))
  // is the only one left to solve. Velocities never pass through a
  // division by dt, so the residual floor stays at rounding level.
  Eigen::VectorXd em = s.e;
  const bool nonlinear = !sys.nonlinearity().is_zero();
  const double h = 0.5 * dt;
  Eigen::MatrixXd J = 2.0 * C + dt * h * M + dt * Cdt;
  if (nonlinear) J += dt * h * sys.nonlinear_jacobian(s.d + h * em);
  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(J);

  State next;
  next.t = s.t + dt;
  double res_norm = 0.0;
  for (int iter = 0;; ++iter) {
    const Eigen::VectorXd dm = s.d + h * em;
    next.d = s.d + dt * em;
    next.e = 2.0 * em - s.e;
    const Eigen::VectorXd R =
        C * (next.e - s.e) - dt * (v - M * dm - Cdt * em - sys.assemble_nonlinear(dm));
    res_norm = llt.solve(R).norm();
    const double scale = 1.0 + std::sqrt(next.d.squaredNorm() + next.e.squaredNorm());
    if (!std::isfinite(res_norm)) throw StepFailure("non-finite Newton residual at t = " + std::to_string(s.t));
    if (res_norm <= newton_tol * scale) {
      if (stats) *stats = {iter, res_norm};
      return next;
    }
    if (iter >= max_iter) {
      std::ostringstream os;
      os.precision(6);
      os << "Newton did not converge in " << max_iter << " iterations at t = " << s.t
         << " (residual " << res_norm << ", tolerance " << newton_tol * scale << ")";
      throw StepFailure(os.str());
    }
    em -= lu.solve(R);
  }
}

State step_rk4(const GalerkinSystem& sys, const State& s, double dt) {
  if (dt == 0.0) return s;
  auto stage = [&](double t, const Eigen::VectorXd& d, const Eigen::VectorXd& e) {
    return rhs(sys, t, State{t, d, e});
  };
  const auto [k1d, k1e] = stage(s.t, s.d, s.e);
  const auto [k2d, k2e] = stage(s.t + 0.5 * dt, s.d + 0.5 * dt * k1d, s.e + 0.5 * dt * k1e);
  const auto [k3d, k3e] = stage(s.t + 0.5 * dt, s.d + 0.5 * dt * k2d, s.e + 0.5 * dt * k2e);
  const auto [k4d, k4e] = stage(s.t + dt, s.d + dt * k3d, s.e + dt * k3e);
  State next;
  next.t = s.t + dt;
  next.d = s.d + dt / 6.0 * (k1d + 2.0 * k2d + 2.0 * k3d + k4d);
  next.e = s.e + dt / 6.0 * (k1e + 2.0 * k2e + 2.0 * k3e + k4e);
  return next;
}

Trajectory solve(const GalerkinSystem& sys, const SolveOptions& options, std::optional<double> truncation) {
  return solve_from(sys, options, initial_state(sys, truncation));
}

Trajectory solve_from(const GalerkinSystem& sys, const SolveOptions& options, State initial) {
  if (!sys.integrable())
    throw std::invalid_argument(
        "nonlinearity is not Lipschitz continuous: set the Lipschitz-approximation index (approx.k / --k) "
        "to integrate with the piecewise-linear approximant F_k");
  if (!(options.dt > 0.0)) throw std::invalid_argument("time step dt must be positive");
  if (options.sample_every < 1) throw std::invalid_argument("sample_every must be >= 1");
  const double T = sys.spec().T;
  const long steps = std::lround(T / options.dt);
  if (steps < 1 || std::fabs(steps * options.dt - T) > 1e-12 * std::max(1.0, T))
    throw std::invalid_argument("dt does not divide T");

  Trajectory traj;
  traj.integrator = to_string(options.integrator);
  traj.dt = options.dt;
  traj.newton_tol = options.newton_tol;

  State s = std::move(initial);
  s.t = 0.0;
  traj.states.push_back(s);
  for (long n = 0; n < steps; ++n) {
    try {
      if (options.integrator == Integrator::midpoint) {
        StepStats st;
        s = step_midpoint(sys, s, options.dt, options.newton_tol, options.max_iter, &st);
        traj.newton_iterations += st.iterations;
        traj.newton_max_iterations = std::max(traj.newton_max_iterations, st.iterations);
      } else {
        s = step_rk4(sys, s, options.dt);
      }
    } catch (const StepFailure& e) {
      traj.complete = false;
      traj.failure = "step " + std::to_string(n + 1) + ": " + e.what();
      return traj;
    }
    // times are n*dt, not accumulated sums; the last one is T exactly
    s.t = n + 1 == steps ? T : static_cast<double>(n + 1) * options.dt;
    ++traj.steps;
    if ((n + 1) % options.sample_every == 0 || n + 1 == steps) traj.states.push_back(s);
  }
  return traj;
}

}  // namespace semiwave
