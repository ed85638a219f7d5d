#include "semiwave/assembly.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace semiwave {

namespace {

bool any_time_dependent(const CoefficientSet& c, int dim) {
  for (int i = 0; i < dim; ++i) {
    if (c.b[i].time_dependent()) return true;
    for (int j = i; j < dim; ++j)
      if (c.As_upper[i][j].time_dependent() || c.Aa_upper[i][j].time_dependent()) return true;
  }
  return c.c.time_dependent();
}

bool As_time_dependent(const CoefficientSet& c, int dim) {
  for (int i = 0; i < dim; ++i)
    for (int j = i; j < dim; ++j)
      if (c.As_upper[i][j].time_dependent()) return true;
  return false;
}

bool sources_time_dependent(const SourceSet& s, int dim) {
  if (s.f.time_dependent() || s.g0.time_dependent()) return true;
  for (int i = 0; i < dim; ++i)
    if (s.Gvec[i].time_dependent()) return true;
  return false;
}

double sym_spectral_norm(const Eigen::Matrix3d& A, int dim) {
  if (dim == 1) return std::fabs(A(0, 0));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A.topLeftCorner(dim, dim), Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace

GalerkinSystem::GalerkinSystem(ProblemSpec spec, std::size_t m, int quad_order, std::optional<int> approx_k)
    : spec_(std::move(spec)),
      basis_(build_basis(spec_.domain, m)),
      rule_(build_quadrature(spec_.domain, quad_order > 0 ? quad_order : default_quadrature_order(basis_))),
      table_(basis_, rule_),
      F_(approx_k ? lipschitz_approx(spec_.nonlinearity, *approx_k) : spec_.nonlinearity),
      approx_k_(approx_k) {
  for (int i = 0; i < dim(); ++i) {
    const double s = std::numbers::pi / spec_.domain.lengths[i];
    lambda1_ += s * s;
  }
  sup_points_ = rule_.nodes;
  const auto grid = uniform_grid(spec_.domain, std::max(2, spec_.validation.grid));
  sup_points_.insert(sup_points_.end(), grid.begin(), grid.end());

  const auto& co = spec_.coefficients;
  if (!co.rho.time_dependent()) {
    C_cache_ = mass_like(co.rho, 0.0, false);
    C_dt_cache_ = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
  }
  if (!any_time_dependent(co, dim())) M_cache_ = stiffness(0.0);
  if (!As_time_dependent(co, dim()))
    Ks_dt_cache_ = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
  if (!sources_time_dependent(spec_.sources, dim())) load_cache_ = load(0.0);
}

Eigen::MatrixXd GalerkinSystem::mass_like(const ScalarField& field, double t, bool derivative) const {
  const auto m = static_cast<Eigen::Index>(size());
  const std::size_t n = rule_.size();
  std::vector<double> wr(n);
  for (std::size_t q = 0; q < n; ++q)
    wr[q] = rule_.weights[q] * (derivative ? field.dt(t, node(q)) : field(t, node(q)));
  Eigen::MatrixXd C(m, m);
  const auto& V = table_.values;
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = i; j < m; ++j) {
      double s = 0.0;
      for (std::size_t q = 0; q < n; ++q) {
        const auto qi = static_cast<Eigen::Index>(q);
        s += wr[q] * V(i, qi) * V(j, qi);
      }
      C(i, j) = C(j, i) = s;
    }
  return C;
}

Eigen::MatrixXd GalerkinSystem::assemble_C(double t) const {
  if (C_cache_) return *C_cache_;
  return mass_like(spec_.coefficients.rho, t, false);
}

Eigen::MatrixXd GalerkinSystem::assemble_C_dt(double t) const {
  if (C_dt_cache_) return *C_dt_cache_;
  return mass_like(spec_.coefficients.rho, t, true);
}

StiffnessBlocks GalerkinSystem::stiffness(double t) const {
  const auto m = static_cast<Eigen::Index>(size());
  const std::size_t n = rule_.size();
  const int d = dim();
  const auto& co = spec_.coefficients;
  const bool has_aa = co.has_antisymmetric(d);
  const bool has_b = co.has_convection(d);
  const bool has_c = co.c.present();

  // weighted coefficient values per node
  std::vector<std::array<double, 9>> As(n), Aa(n);
  std::vector<std::array<double, 3>> bv(n);
  std::vector<double> cv(n, 0.0);
  for (std::size_t q = 0; q < n; ++q) {
    const double w = rule_.weights[q];
    const auto x = node(q);
    As[q].fill(0.0);
    Aa[q].fill(0.0);
    bv[q].fill(0.0);
    for (int k = 0; k < d; ++k)
      for (int l = k; l < d; ++l) {
        const double a = w * co.As_upper[k][l](t, x);
        As[q][k * 3 + l] = As[q][l * 3 + k] = a;
        if (has_aa && l > k && co.Aa_upper[k][l].present()) {
          const double aa = w * co.Aa_upper[k][l](t, x);
          Aa[q][k * 3 + l] = aa;
          Aa[q][l * 3 + k] = -aa;
        }
      }
    if (has_b)
      for (int k = 0; k < d; ++k) bv[q][k] = w * co.b[k](t, x);
    if (has_c) cv[q] = w * co.c(t, x);
  }

  const auto& V = table_.values;
  const auto& G = table_.grads;
  StiffnessBlocks out;
  out.Ks.resize(m, m);
  out.Ka = Eigen::MatrixXd::Zero(m, m);
  Eigen::MatrixXd lower = Eigen::MatrixXd::Zero(m, m);  // convection + reaction

  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = i; j < m; ++j) {
      double ks = 0.0;
      for (std::size_t q = 0; q < n; ++q) {
        const auto qi = static_cast<Eigen::Index>(q);
        for (int k = 0; k < d; ++k)
          for (int l = 0; l < d; ++l) ks += As[q][k * 3 + l] * G[k](i, qi) * G[l](j, qi);
      }
      out.Ks(i, j) = out.Ks(j, i) = ks;
    }

  if (has_aa) {
    for (Eigen::Index i = 0; i < m; ++i)
      for (Eigen::Index j = i + 1; j < m; ++j) {
        double ka = 0.0;
        for (std::size_t q = 0; q < n; ++q) {
          const auto qi = static_cast<Eigen::Index>(q);
          for (int k = 0; k < d; ++k)
            for (int l = 0; l < d; ++l) ka += Aa[q][k * 3 + l] * G[l](j, qi) * G[k](i, qi);
        }
        out.Ka(i, j) = ka;
        out.Ka(j, i) = -ka;
      }
  }

  if (has_b || has_c) {
    for (Eigen::Index i = 0; i < m; ++i)
      for (Eigen::Index j = 0; j < m; ++j) {
        double s = 0.0;
        for (std::size_t q = 0; q < n; ++q) {
          const auto qi = static_cast<Eigen::Index>(q);
          double bgrad = 0.0;
          for (int k = 0; k < d; ++k) bgrad += bv[q][k] * G[k](j, qi);
          s += (bgrad + cv[q] * V(j, qi)) * V(i, qi);
        }
        lower(i, j) = s;
      }
  }

  out.M = out.Ks + out.Ka + lower;
  return out;
}

StiffnessBlocks GalerkinSystem::assemble_M(double t) const {
  if (M_cache_) return *M_cache_;
  return stiffness(t);
}

Eigen::MatrixXd GalerkinSystem::assemble_Ks_dt(double t) const {
  if (Ks_dt_cache_) return *Ks_dt_cache_;
  const auto m = static_cast<Eigen::Index>(size());
  const std::size_t n = rule_.size();
  const int d = dim();
  std::vector<std::array<double, 9>> A(n);
  for (std::size_t q = 0; q < n; ++q) {
    A[q].fill(0.0);
    for (int k = 0; k < d; ++k)
      for (int l = k; l < d; ++l)
        A[q][k * 3 + l] = A[q][l * 3 + k] =
            rule_.weights[q] * spec_.coefficients.As_upper[k][l].dt(t, node(q));
  }
  const auto& G = table_.grads;
  Eigen::MatrixXd K(m, m);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = i; j < m; ++j) {
      double s = 0.0;
      for (std::size_t q = 0; q < n; ++q) {
        const auto qi = static_cast<Eigen::Index>(q);
        for (int k = 0; k < d; ++k)
          for (int l = 0; l < d; ++l) s += A[q][k * 3 + l] * G[k](i, qi) * G[l](j, qi);
      }
      K(i, j) = K(j, i) = s;
    }
  return K;
}

double GalerkinSystem::A0_dt_quadratic(double t, const Eigen::VectorXd& d) const {
  return d.dot(assemble_Ks_dt(t) * d);
}

Eigen::VectorXd GalerkinSystem::load(double t) const {
  const auto m = static_cast<Eigen::Index>(size());
  const std::size_t n = rule_.size();
  const int d = dim();
  const auto& src = spec_.sources;
  std::vector<double> h(n, 0.0);
  std::vector<std::array<double, 3>> gv(n);
  bool has_G = false;
  for (int k = 0; k < d; ++k) has_G = has_G || src.Gvec[k].present();
  for (std::size_t q = 0; q < n; ++q) {
    const auto x = node(q);
    const double w = rule_.weights[q];
    h[q] = w * (src.f(t, x) + src.g0(t, x));
    gv[q].fill(0.0);
    if (has_G)
      for (int k = 0; k < d; ++k) gv[q][k] = w * src.Gvec[k](t, x);
  }
  Eigen::VectorXd v(m);
  for (Eigen::Index j = 0; j < m; ++j) {
    double s = 0.0;
    for (std::size_t q = 0; q < n; ++q) {
      const auto qi = static_cast<Eigen::Index>(q);
      s += h[q] * table_.values(j, qi);
      for (int k = 0; k < d; ++k) s += gv[q][k] * table_.grads[k](j, qi);
    }
    v[j] = s;
  }
  return v;
}

Eigen::VectorXd GalerkinSystem::assemble_load(double t) const {
  if (load_cache_) return *load_cache_;
  return load(t);
}

Eigen::VectorXd GalerkinSystem::assemble_nonlinear(const Eigen::VectorXd& d) const {
  const auto m = static_cast<Eigen::Index>(size());
  if (d.size() != m) throw std::invalid_argument("coefficient vector has wrong length");
  if (F_.is_zero()) return Eigen::VectorXd::Zero(m);
  const Eigen::VectorXd u = expand_at_nodes(d, table_);
  const std::size_t n = rule_.size();
  std::vector<double> wf(n);
  for (std::size_t q = 0; q < n; ++q) wf[q] = rule_.weights[q] * F_.F(u[static_cast<Eigen::Index>(q)]);
  Eigen::VectorXd out(m);
  for (Eigen::Index j = 0; j < m; ++j) {
    double s = 0.0;
    for (std::size_t q = 0; q < n; ++q) s += wf[q] * table_.values(j, static_cast<Eigen::Index>(q));
    out[j] = s;
  }
  return out;
}

Eigen::MatrixXd GalerkinSystem::nonlinear_jacobian(const Eigen::VectorXd& d) const {
  const auto m = static_cast<Eigen::Index>(size());
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(m, m);
  if (F_.is_zero()) return J;
  const Eigen::VectorXd base = assemble_nonlinear(d);
  const double sqrt_eps = std::sqrt(std::numeric_limits<double>::epsilon());
  Eigen::VectorXd dp = d;
  for (Eigen::Index i = 0; i < m; ++i) {
    const double h = sqrt_eps * (1.0 + std::fabs(d[i]));
    dp[i] = d[i] + h;
    J.col(i) = (assemble_nonlinear(dp) - base) / (dp[i] - d[i]);
    dp[i] = d[i];
  }
  return J;
}

double GalerkinSystem::G_integral(const Eigen::VectorXd& d) const {
  if (F_.is_zero()) return 0.0;
  const Eigen::VectorXd u = expand_at_nodes(d, table_);
  double s = 0.0;
  for (std::size_t q = 0; q < rule_.size(); ++q) s += rule_.weights[q] * F_.G(u[static_cast<Eigen::Index>(q)]);
  return s;
}

double GalerkinSystem::max_abs_at_nodes(const Eigen::VectorXd& d) const {
  return expand_at_nodes(d, table_).cwiseAbs().maxCoeff();
}

CoefficientNormBounds GalerkinSystem::coefficient_norm_bounds(double t) const {
  CoefficientNormBounds nb;
  const int d = dim();
  const auto& co = spec_.coefficients;
  const auto& src = spec_.sources;
  const bool rho_t = co.rho.time_dependent() || co.rho.has_dt();
  const bool As_t = As_time_dependent(co, d);
  const bool has_aa = co.has_antisymmetric(d);
  const bool has_b = co.has_convection(d);

  double div_sup = 0.0, b_sup = 0.0, c_sup = 0.0;
  for (const Point& p : sup_points_) {
    const std::span<const double> x(p.data(), static_cast<std::size_t>(d));
    if (rho_t) nb.R_dt = std::max(nb.R_dt, std::fabs(co.rho.dt(t, x)));
    if (As_t) {
      Eigen::Matrix3d A = Eigen::Matrix3d::Zero();
      for (int k = 0; k < d; ++k)
        for (int l = k; l < d; ++l) A(k, l) = A(l, k) = co.As_upper[k][l].dt(t, x);
      nb.A0_dt = std::max(nb.A0_dt, sym_spectral_norm(A, d));
    }
    if (has_aa) {
      // (div A_a)_l = sum_k d_k (A_a)_kl
      double s2 = 0.0;
      for (int l = 0; l < d; ++l) {
        double div = 0.0;
        for (int k = 0; k < d; ++k) {
          auto [field, sign] = co.Aa(k, l);
          if (field && field->present()) div += sign * field->dx(k, t, x, spec_.domain.lengths[k]);
        }
        s2 += div * div;
      }
      div_sup = std::max(div_sup, std::sqrt(s2));
    }
    if (has_b) {
      double s2 = 0.0;
      for (int k = 0; k < d; ++k) {
        const double bk = co.b[k](t, x);
        s2 += bk * bk;
      }
      b_sup = std::max(b_sup, std::sqrt(s2));
    }
    if (co.c.present()) c_sup = std::max(c_sup, std::fabs(co.c(t, x)));
  }
  nb.A1 = div_sup + b_sup + c_sup / std::sqrt(lambda1_);

  double f2 = 0.0, g02 = 0.0, G2 = 0.0, g0t2 = 0.0, Gt2 = 0.0;
  const bool has_g = src.has_g(d);
  for (std::size_t q = 0; q < rule_.size(); ++q) {
    const auto x = node(q);
    const double w = rule_.weights[q];
    if (src.f.present()) {
      const double f = src.f(t, x);
      f2 += w * f * f;
    }
    if (!has_g) continue;
    if (src.g0.present()) {
      const double g = src.g0(t, x), gt = src.g0.dt(t, x);
      g02 += w * g * g;
      g0t2 += w * gt * gt;
    }
    for (int k = 0; k < d; ++k) {
      if (!src.Gvec[k].present()) continue;
      const double g = src.Gvec[k](t, x), gt = src.Gvec[k].dt(t, x);
      G2 += w * g * g;
      Gt2 += w * gt * gt;
    }
  }
  nb.f_H = std::sqrt(f2);
  nb.g_Vp = std::sqrt(g02) / std::sqrt(lambda1_) + std::sqrt(G2);
  nb.g_dt_Vp = std::sqrt(g0t2) / std::sqrt(lambda1_) + std::sqrt(Gt2);

  if (rho_t) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(assemble_C_dt(t), Eigen::EigenvaluesOnly);
    nb.discrete_R_dt = es.eigenvalues().cwiseAbs().maxCoeff();
  }
  if (As_t) {
    const auto m = static_cast<Eigen::Index>(size());
    Eigen::VectorXd s(m);
    for (Eigen::Index j = 0; j < m; ++j) s[j] = 1.0 / std::sqrt(basis_.eigenvalue(static_cast<std::size_t>(j)));
    const Eigen::MatrixXd scaled = s.asDiagonal() * assemble_Ks_dt(t) * s.asDiagonal();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(scaled, Eigen::EigenvaluesOnly);
    nb.discrete_A0_dt = es.eigenvalues().cwiseAbs().maxCoeff();
  }
  return nb;
}

}  // namespace semiwave
