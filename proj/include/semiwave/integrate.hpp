#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "semiwave/assembly.hpp"

namespace semiwave {

/// Galerkin coefficients of u (d) and u' (e) at time t.
struct State {
  double t = 0.0;
  Eigen::VectorXd d;
  Eigen::VectorXd e;
};

struct EnergyRecord {
  double t = 0.0;
  double kinetic = 0.0;    // 1/2 (R u', u')
  double potential = 0.0;  // 1/2 <A0 u, u>
  double gpart = 0.0;      // int G(u)
  double total = 0.0;
  std::optional<double> second;  // 1/2 (R u'', u'') + 1/2 <A0 u', u'>
};

enum class Integrator { midpoint, rk4 };

std::string to_string(Integrator i);
Integrator integrator_from_string(const std::string& name);

class StepFailure : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct StepStats {
  int iterations = 0;
  double residual = 0.0;
};

struct SolveOptions {
  Integrator integrator = Integrator::midpoint;
  double dt = 1e-3;
  int sample_every = 1;
  double newton_tol = 1e-12;
  int max_iter = 25;
};

struct Trajectory {
  std::vector<State> states;  // sampled; first at t = 0, last at t = T when complete
  std::vector<EnergyRecord> energies;
  std::string integrator;
  double dt = 0.0;
  double newton_tol = 0.0;
  long newton_iterations = 0;
  int newton_max_iterations = 0;
  long steps = 0;
  bool complete = true;
  std::string failure;

  std::vector<double> times() const;
};

/// d(0) = P(xi_j o u0), e(0) = P(u1); xi_j is the identity when no level is set.
State initial_state(const GalerkinSystem& sys, std::optional<double> truncation = {});

/// d' = e, C e' = v - M d - C' e - F(d).
std::pair<Eigen::VectorXd, Eigen::VectorXd> rhs(const GalerkinSystem& sys, double t, const State& s);

/// Jacobian of (d', e') with respect to (d, e), 2m x 2m, using the
/// finite-difference Jacobian of the nonlinear load.
Eigen::MatrixXd rhs_jacobian(const GalerkinSystem& sys, double t, const State& s);

/// Implicit midpoint step solved by chord Newton on the midpoint velocity.
/// Throws StepFailure when the residual does not reach
/// newton_tol * (1 + |s_{n+1}|) within max_iter iterations.
State step_midpoint(const GalerkinSystem& sys, const State& s, double dt, double newton_tol = 1e-12,
                    int max_iter = 25, StepStats* stats = nullptr);

State step_rk4(const GalerkinSystem& sys, const State& s, double dt);

/// Fixed-step march from initial_state to T. A failing step ends the march
/// with `complete == false` and the states reached so far.
Trajectory solve(const GalerkinSystem& sys, const SolveOptions& options,
                 std::optional<double> truncation = {});
Trajectory solve_from(const GalerkinSystem& sys, const SolveOptions& options, State initial);

}  // namespace semiwave
