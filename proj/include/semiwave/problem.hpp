#pragma once

#include <array>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "semiwave/basis.hpp"
#include "semiwave/expr.hpp"

namespace semiwave {

using PointFunction = std::function<double(double t, std::span<const double> x)>;

/// A scalar field on [0,T] x box: absent (identically zero), an expression
/// with optional explicit t- and x-derivatives, or an opaque callable.
class ScalarField {
public:
  ScalarField() = default;
  explicit ScalarField(Expr e) : expr_(std::move(e)) {}
  static ScalarField from_function(PointFunction f, bool time_dependent = true);

  bool present() const { return expr_.has_value() || static_cast<bool>(fn_); }
  bool time_dependent() const;
  const std::optional<Expr>& expr() const { return expr_; }

  void set_dt(Expr e) { dt_ = std::move(e); }
  void set_dx(int axis, Expr e) { dx_.at(static_cast<std::size_t>(axis)) = std::move(e); }
  bool has_dt() const { return dt_.has_value(); }

  double operator()(double t, std::span<const double> x) const;
  // Explicit `_dt` expression when given, central difference otherwise.
  double dt(double t, std::span<const double> x) const;
  // Explicit `_dx` expression when given, central difference with step
  // eps^(1/3)*length otherwise.
  double dx(int axis, double t, std::span<const double> x, double length) const;

private:
  std::optional<Expr> expr_;
  std::optional<Expr> dt_;
  std::array<std::optional<Expr>, 3> dx_;
  PointFunction fn_;
  bool fn_time_dependent_ = true;
};

/// rho, symmetric A_s (upper triangle), antisymmetric A_a (strict upper
/// triangle), convection b and reaction c. Indices are 0-based.
struct CoefficientSet {
  ScalarField rho;
  std::array<std::array<ScalarField, 3>, 3> As_upper;  // i <= j used
  std::array<std::array<ScalarField, 3>, 3> Aa_upper;  // i < j used
  std::array<ScalarField, 3> b;
  ScalarField c;

  // Entry (i,j) of A_s or A_a with symmetry applied. Returns the field and
  // the sign to apply.
  const ScalarField& As(int i, int j) const { return i <= j ? As_upper[i][j] : As_upper[j][i]; }
  std::pair<const ScalarField*, double> Aa(int i, int j) const;

  bool has_antisymmetric(int dim) const;
  bool has_convection(int dim) const;
};

/// g = g0 - div(Gvec) in the weak sense: <g, w> = (g0, w) + (Gvec, grad w).
struct SourceSet {
  ScalarField f;
  ScalarField g0;
  std::array<ScalarField, 3> Gvec;

  bool has_g(int dim) const;
};

struct InitialData {
  ScalarField u0;
  ScalarField u1;
  std::optional<double> truncation;  // level j of the clamp xi_j
};

enum class NonlinearityKind { zero, power, expr, tabulated };

/// Scalar nonlinearity F with primitive G(z) = int_0^z F.
///
/// `power` is F(z) = z|z|^p; `expr` is an expression in the variable x
/// standing for the argument z; `tabulated` is the piecewise-linear
/// interpolant of node values, extended by constants.
class Nonlinearity {
public:
  Nonlinearity() = default;  // F = 0

  static Nonlinearity power(double p);
  static Nonlinearity expression(Expr F, std::optional<double> lip = {},
                                 std::optional<double> growth_p = {});
  static Nonlinearity tabulated(std::vector<double> nodes, std::vector<double> values);

  NonlinearityKind kind() const { return kind_; }
  bool is_zero() const { return kind_ == NonlinearityKind::zero; }
  double exponent() const { return p_; }
  const std::optional<double>& growth_exponent() const { return growth_p_; }
  const std::optional<Expr>& expr() const { return expr_; }

  // Global Lipschitz constant when one is known.
  std::optional<double> lipschitz() const { return is_zero() ? std::optional<double>(0.0) : lip_; }
  // True when F is at least locally Lipschitz (safe to integrate directly).
  bool locally_lipschitz() const;

  double F(double z) const;
  double G(double z) const;

  // Largest sampled difference quotient of F over [-r, r]; used as the
  // effective Lipschitz constant along a solution with |u| <= r.
  double local_lipschitz(double r) const;

  const std::vector<double>& table_nodes() const { return nodes_; }
  const std::vector<double>& table_values() const { return values_; }

  std::string describe() const;

private:
  NonlinearityKind kind_ = NonlinearityKind::zero;
  double p_ = 0.0;
  std::optional<Expr> expr_;
  std::optional<double> lip_;
  std::optional<double> growth_p_;

  std::vector<double> nodes_, values_, prefix_;  // prefix_[i] = int_{nodes_[0]}^{nodes_[i]} F
  double uniform_h_ = 0.0;                      // > 0 when nodes are uniformly spaced
  double table_integral(double z) const;        // int_{nodes_[0]}^z F
};

/// F_k: piecewise-linear interpolant of F on the grid i/k, |i| <= k^2, with
/// constant extension outside [-k, k]. Records Lip(F_k).
Nonlinearity lipschitz_approx(const Nonlinearity& F, int k);

/// Pointwise clamp to [-j, j].
std::vector<double> truncate(std::span<const double> samples, double j);
inline double truncate(double s, double j) { return s < -j ? -j : (s > j ? j : s); }

/// Gauss-Kronrod (relative 1e-10, depth 30) otherwise, on the substitution
/// w = z s^2 which removes square-root type singularities at 0.
/// substitution w = z s^2 when the Kronrod estimate does not settle.
std::function<double(double)> primitive_G(const Nonlinearity& F);

struct ValidationSettings {
  int grid = 17;              // points per dimension, boundary included
  int time_samples = 33;
  double sign_range = 16.0;
  int sign_samples = 10001;
  double boundary_tol = 1e-8;
};

struct ProblemSpec {
  BoxDomain domain;
  CoefficientSet coefficients;
  SourceSet sources;
  Nonlinearity nonlinearity;
  InitialData initial;
  double alpha = 1.0;
  double T = 1.0;
  ValidationSettings validation;
};

struct ValidationReport {
  bool passed = true;
  double alpha = 0.0;
  double min_rho = 0.0;
  double min_rho_t = 0.0;
  double min_As_eig = 0.0;
  double min_As_eig_t = 0.0;
  long sign_violations = 0;
  double first_sign_violation = 0.0;
  double F_at_zero = 0.0;
  long negative_G = 0;
  long boundary_violations = 0;
  double max_boundary_u0 = 0.0;
  std::string regime;          // lipschitz | local | continuous
  std::string growth_window;   // inside | outside | unknown
  std::vector<std::pair<std::string, std::string>> field_errors;
  std::vector<std::string> failures;
  std::vector<std::string> assumed;

  std::string to_text() const;
};

/// Samples the structural assumptions on a uniform grid (boundary included)
/// and `time_samples` equally spaced times. Evaluation errors are recorded
/// per field, never thrown.
ValidationReport validate(const ProblemSpec& spec, int grid, int time_samples);
inline ValidationReport validate(const ProblemSpec& spec) {
  return validate(spec, spec.validation.grid, spec.validation.time_samples);
}

/// Uniform grid with `n` points per axis over the closed box.
std::vector<Point> uniform_grid(const BoxDomain& domain, int n);

}  // namespace semiwave
