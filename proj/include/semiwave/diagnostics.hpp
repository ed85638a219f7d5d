#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "semiwave/assembly.hpp"
#include "semiwave/expr.hpp"
#include "semiwave/integrate.hpp"

namespace semiwave {

/// E = 1/2 e^T C e + 1/2 d^T K_s d (+ int G(u)). The second energy uses
/// u'' from the right-hand side: 1/2 u''^T C u'' + 1/2 e^T K_s e.
EnergyRecord energy(const GalerkinSystem& sys, const State& s, bool include_G = true,
                    bool include_second = false);

/// Fills traj.energies, one record per sampled state.
void fill_energies(const GalerkinSystem& sys, Trajectory& traj, bool include_G = true,
                   bool include_second = false);

/// (2/alpha) (|rho_t| + ||A_s,t|| + A1 + ||f||_H + Lip), from the
/// coefficient norm bounds at t. `lip` is the Lipschitz constant in use.
double phi(const GalerkinSystem& sys, double t, double lip);
/// phi + (2/alpha) ||g'(t)||_{V'} surrogate.
double phi_tilde(const GalerkinSystem& sys, double t, double lip);

/// Lipschitz constant entering phi: the global one when known, otherwise
/// the local one over the largest |u| seen at the quadrature nodes. Scaled
/// by max(1, 1/(2 sqrt(lambda_1))) so it also dominates the H-to-V
/// conversion of the F term.
double lipschitz_in_use(const GalerkinSystem& sys, const Trajectory& traj);

struct BoundSample {
  double t = 0.0;
  double phi = 0.0;        // phi (no g) or phi-tilde (with g)
  double g_dt_Vp = 0.0;    // ||g'||_{V'} surrogate
  double f_H = 0.0;
  double int_phi = 0.0;    // right-endpoint cumulative integral
  double data = 0.0;       // E(0) plus source terms
  double bound = 0.0;
  double energy = 0.0;
  double margin = 0.0;     // bound - energy
};

struct BoundReport {
  std::vector<BoundSample> samples;
  double lip = 0.0;
  bool with_g = false;
  bool passed = true;
  double worst_margin = 0.0;  // min over samples of margin / (1 + B)
  std::string message;

  std::string to_text() const;
};

/// A priori bound along a sampled trajectory. Without g:
///   B(t) = (E(0) + int_0^t ||f||_H) exp(int_0^t phi).
/// With g (kappa = 1/alpha):
///   B(t) = (3E(0) + (2/alpha)(max_{s<=t} ||g(s)||^2 + ||g(0)||^2)
///           + 2 int ||g'|| + 2 int ||f||) exp(2 int_0^t phi-tilde).
/// Integrals take the larger endpoint value on each sample interval. The
/// report fails when some margin < -1e-8 (1 + B).
BoundReport gronwall_check(const GalerkinSystem& sys, const Trajectory& traj);

struct ResidualSample {
  double t = 0.0;
  double max_abs = 0.0;
};

/// r = (C e)' + M d + F(d) - v at interior samples, with (C e)' from the
/// three-point difference over neighbouring samples. Max norm per sample.
std::vector<ResidualSample> residual_check(const GalerkinSystem& sys, const Trajectory& traj);

struct ConvergenceReference {
  std::optional<Expr> exact;  // closed form in t and x; otherwise a computed run
  std::size_t m = 64;
  double dt = 1e-4;
};

struct StudyOptions {
  SolveOptions solve;  // integrator, tolerances; dt and sample_every are set per run
  int quad_order = 0;
  std::optional<int> approx_k;
  std::optional<double> truncation;
  int threads = 1;
};

struct ConvergenceRow {
  std::size_t m = 0;
  double dt = 0.0;
  double err_H = 0.0;  // max over samples
  double err_V = 0.0;
  bool complete = true;
};

/// Errors of every (m, dt) run against the reference at common sample
/// times spaced by the largest dt. Runs are compared in coefficient space
/// on the reference basis; the smaller bases are its prefixes. Rows are
/// ordered m-major. Independent runs are spread over `threads` workers;
/// the table does not depend on the thread count.
std::vector<ConvergenceRow> convergence_study(const ProblemSpec& spec, const std::vector<std::size_t>& m_list,
                                              const std::vector<double>& dt_list,
                                              const ConvergenceReference& reference,
                                              const StudyOptions& options);

/// Source f making u_exact solve the problem with nonlinearity F (the
/// spec's when null). Derivatives are flux-form second differences with
/// step eps^(1/4) (scaled by max(1,|t|) in time and L_i in space) and
/// central first differences with step eps^(1/3). Throws
/// std::invalid_argument when u_exact does not vanish on the boundary.
SourceSet mms_source(const ProblemSpec& spec, const Expr& u_exact, const Nonlinearity* F = nullptr);

/// Copy of spec with the manufactured source, g removed, u0 = u_exact(0)
/// and u1 = d/dt u_exact(0).
ProblemSpec manufactured_problem(const ProblemSpec& spec, const Expr& u_exact,
                                 std::optional<int> approx_k = {});

struct MmsResult {
  Trajectory trajectory;
  std::vector<double> t, err_H, err_V;  // quadrature L2 and gradient errors
  double max_err_H = 0.0;
  double max_err_V = 0.0;
};

MmsResult mms_run(const ProblemSpec& spec, const Expr& u_exact, std::size_t m, const StudyOptions& options);

struct UniquenessResult {
  std::vector<double> t, diff_H;
  double delta = 0.0;
  double ratio = 0.0;  // max_t ||u1 - u2||_H / delta, 0 when delta = 0
  bool theorem_applies = false;
  bool complete = true;
};

/// Solves from u0 and from u0 + delta w_1 and records ||u1 - u2||_H.
UniquenessResult uniqueness_probe(const ProblemSpec& spec, double delta, std::size_t m,
                                  const StudyOptions& options);

}  // namespace semiwave
