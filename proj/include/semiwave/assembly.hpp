#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "semiwave/basis.hpp"
#include "semiwave/problem.hpp"

namespace semiwave {

/// Upper-bound surrogates for the operator norms entering the Gronwall
/// rate, sampled over quadrature nodes and the validation grid at one time.
struct CoefficientNormBounds {
  double R_dt = 0.0;     // sup |rho_t|                       >= ||R'(t)||_{L(H)}
  double A0_dt = 0.0;    // sup ||A_s,t||_2                   >= ||A0'(t)||_{L(V;V')}
  double A1 = 0.0;       // sup|div A_a| + sup|b| + sup|c|/sqrt(lambda_1)
  double f_H = 0.0;      // ||f(t)||_H by quadrature
  double g_Vp = 0.0;     // ||g0||_H/sqrt(lambda_1) + ||Gvec||_H  >= ||g(t)||_{V'}
  double g_dt_Vp = 0.0;  // the same for g'(t)

  // Discrete counterparts (may under-estimate the continuum norms).
  double discrete_R_dt = 0.0;   // max |eig C'(t)|
  double discrete_A0_dt = 0.0;  // max |eig| of K_s'(t) relative to diag(lambda)
};

struct StiffnessBlocks {
  Eigen::MatrixXd M;   // full operator: K_s + K_a + convection + reaction
  Eigen::MatrixXd Ks;  // symmetric A_s block
  Eigen::MatrixXd Ka;  // antisymmetric A_a block, exactly Ka = -Ka^T
};

/// Galerkin projection of the problem onto the span of the first m
/// eigenfunctions. Matrices are indexed (test i, trial j):
///   C_ij = (rho w_j, w_i),  M_ij = <A0 w_j, w_i> + (A1 w_j, w_i).
/// Blocks whose coefficients do not depend on t are assembled once.
class GalerkinSystem {
public:
  GalerkinSystem(ProblemSpec spec, std::size_t m, int quad_order = 0, std::optional<int> approx_k = {});

  const ProblemSpec& spec() const { return spec_; }
  const BasisSet& basis() const { return basis_; }
  const QuadratureRule& rule() const { return rule_; }
  const NodeTable& table() const { return table_; }
  std::size_t size() const { return basis_.size(); }
  int dim() const { return spec_.domain.dim; }
  double lambda1() const { return lambda1_; }

  // The nonlinearity actually integrated: F_k when an approximation index
  // is set, F otherwise.
  const Nonlinearity& nonlinearity() const { return F_; }
  std::optional<int> approx_k() const { return approx_k_; }
  // False when F is merely continuous and no approximation index was given.
  bool integrable() const { return F_.locally_lipschitz(); }

  Eigen::MatrixXd assemble_C(double t) const;
  Eigen::MatrixXd assemble_C_dt(double t) const;
  StiffnessBlocks assemble_M(double t) const;
  Eigen::MatrixXd assemble_Ks_dt(double t) const;
  // d^T K_s'(t) d = <A0'(t) u, u>
  double A0_dt_quadratic(double t, const Eigen::VectorXd& d) const;
  Eigen::VectorXd assemble_load(double t) const;
  Eigen::VectorXd assemble_nonlinear(const Eigen::VectorXd& d) const;
  // Forward-difference Jacobian of assemble_nonlinear, column by column.
  Eigen::MatrixXd nonlinear_jacobian(const Eigen::VectorXd& d) const;
  // int G(u) dx by the assembly quadrature.
  double G_integral(const Eigen::VectorXd& d) const;
  // max |u| over the quadrature nodes
  double max_abs_at_nodes(const Eigen::VectorXd& d) const;

  CoefficientNormBounds coefficient_norm_bounds(double t) const;

private:
  Eigen::MatrixXd mass_like(const ScalarField& field, double t, bool derivative) const;
  StiffnessBlocks stiffness(double t) const;
  Eigen::VectorXd load(double t) const;
  std::span<const double> node(std::size_t q) const { return rule_.node(q); }

  ProblemSpec spec_;
  BasisSet basis_;
  QuadratureRule rule_;
  NodeTable table_;
  Nonlinearity F_;
  std::optional<int> approx_k_;
  double lambda1_ = 0.0;
  std::vector<Point> sup_points_;  // quadrature nodes + validation grid

  std::optional<Eigen::MatrixXd> C_cache_, C_dt_cache_, Ks_dt_cache_;
  std::optional<StiffnessBlocks> M_cache_;
  std::optional<Eigen::VectorXd> load_cache_;
};

}  // namespace semiwave
