#include "semiwave/problem.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <Eigen/Eigenvalues>

namespace semiwave {

namespace {

Env env_at(double t, std::span<const double> x) {
  Env env;
  env.set(Var::t, t);
  for (std::size_t i = 0; i < x.size() && i < 3; ++i) env.set(static_cast<Var>(i + 1), x[i]);
  return env;
}

const double kCbrtEps = std::cbrt(std::numeric_limits<double>::epsilon());

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

// ---------------------------------------------------------------- fields

ScalarField ScalarField::from_function(PointFunction f, bool time_dependent) {
  ScalarField s;
  s.fn_ = std::move(f);
  s.fn_time_dependent_ = time_dependent;
  return s;
}

bool ScalarField::time_dependent() const {
  if (expr_) return expr_->depends_on(Var::t);
  if (fn_) return fn_time_dependent_;
  return false;
}

double ScalarField::operator()(double t, std::span<const double> x) const {
  if (expr_) return expr_->eval(env_at(t, x));
  if (fn_) {
    const double v = fn_(t, x);
    if (!std::isfinite(v)) throw EvalError("non-finite value from tabulated field");
    return v;
  }
  return 0.0;
}

double ScalarField::dt(double t, std::span<const double> x) const {
  if (dt_) return dt_->eval(env_at(t, x));
  if (expr_) {
    if (!expr_->depends_on(Var::t)) return 0.0;
    return diff_t(*expr_, env_at(t, x));
  }
  if (fn_) {
    if (!fn_time_dependent_) return 0.0;
    const double h = std::max(1.0, std::fabs(t)) * kCbrtEps;
    return (fn_(t + h, x) - fn_(t - h, x)) / (2.0 * h);
  }
  return 0.0;
}

double ScalarField::dx(int axis, double t, std::span<const double> x, double length) const {
  const auto a = static_cast<std::size_t>(axis);
  if (dx_.at(a)) return dx_[a]->eval(env_at(t, x));
  if (!present()) return 0.0;
  if (expr_ && !expr_->depends_on(static_cast<Var>(axis + 1))) return 0.0;
  const double h = kCbrtEps * length;
  std::array<double, 3> xp{}, xm{};
  std::copy(x.begin(), x.end(), xp.begin());
  std::copy(x.begin(), x.end(), xm.begin());
  xp[a] += h;
  xm[a] -= h;
  const std::span<const double> sp(xp.data(), x.size()), sm(xm.data(), x.size());
  return ((*this)(t, sp) - (*this)(t, sm)) / (2.0 * h);
}

std::pair<const ScalarField*, double> CoefficientSet::Aa(int i, int j) const {
  if (i == j) return {nullptr, 0.0};
  if (i < j) return {&Aa_upper[i][j], 1.0};
  return {&Aa_upper[j][i], -1.0};
}

bool CoefficientSet::has_antisymmetric(int dim) const {
  for (int i = 0; i < dim; ++i)
    for (int j = i + 1; j < dim; ++j)
      if (Aa_upper[i][j].present()) return true;
  return false;
}

bool CoefficientSet::has_convection(int dim) const {
  for (int i = 0; i < dim; ++i)
    if (b[i].present()) return true;
  return false;
}

bool SourceSet::has_g(int dim) const {
  if (g0.present()) return true;
  for (int i = 0; i < dim; ++i)
    if (Gvec[i].present()) return true;
  return false;
}

// ---------------------------------------------------------- nonlinearity

Nonlinearity Nonlinearity::power(double p) {
  if (!(p >= 0.0) || !std::isfinite(p)) throw std::invalid_argument("power exponent must be >= 0");
  Nonlinearity n;
  n.kind_ = NonlinearityKind::power;
  n.p_ = p;
  n.growth_p_ = p;
  if (p == 0.0) n.lip_ = 1.0;
  return n;
}

Nonlinearity Nonlinearity::expression(Expr F, std::optional<double> lip, std::optional<double> growth_p) {
  if (F.depends_on(Var::t) || F.depends_on(Var::y) || F.depends_on(Var::z))
    throw std::invalid_argument("nonlinearity may only depend on its argument x");
  Nonlinearity n;
  n.kind_ = NonlinearityKind::expr;
  n.expr_ = std::move(F);
  n.lip_ = lip;
  n.growth_p_ = growth_p;
  return n;
}

Nonlinearity Nonlinearity::tabulated(std::vector<double> nodes, std::vector<double> values) {
  if (nodes.size() < 2 || nodes.size() != values.size())
    throw std::invalid_argument("tabulated nonlinearity needs >= 2 nodes with matching values");
  for (std::size_t i = 1; i < nodes.size(); ++i)
    if (!(nodes[i] > nodes[i - 1])) throw std::invalid_argument("tabulated nodes must be strictly increasing");
  Nonlinearity n;
  n.kind_ = NonlinearityKind::tabulated;
  n.nodes_ = std::move(nodes);
  n.values_ = std::move(values);

  const std::size_t count = n.nodes_.size();
  n.prefix_.assign(count, 0.0);
  double lip = 0.0;
  for (std::size_t i = 1; i < count; ++i) {
    const double h = n.nodes_[i] - n.nodes_[i - 1];
    n.prefix_[i] = n.prefix_[i - 1] + 0.5 * h * (n.values_[i] + n.values_[i - 1]);
    lip = std::max(lip, std::fabs(n.values_[i] - n.values_[i - 1]) / h);
  }
  n.lip_ = lip;

  const double h0 = n.nodes_[1] - n.nodes_[0];
  bool uniform = true;
  for (std::size_t i = 1; i < count && uniform; ++i)
    uniform = std::fabs((n.nodes_[i] - n.nodes_[i - 1]) - h0) <= 1e-12 * std::max(1.0, std::fabs(h0));
  n.uniform_h_ = uniform ? h0 : 0.0;
  return n;
}

bool Nonlinearity::locally_lipschitz() const {
  switch (kind_) {
    case NonlinearityKind::zero:
    case NonlinearityKind::power:
    case NonlinearityKind::tabulated: return true;
    case NonlinearityKind::expr: return lip_.has_value() || growth_p_.has_value();
  }
  return false;
}

double Nonlinearity::F(double z) const {
  switch (kind_) {
    case NonlinearityKind::zero: return 0.0;
    case NonlinearityKind::power: return p_ == 0.0 ? z : z * std::pow(std::fabs(z), p_);
    case NonlinearityKind::expr: {
      Env env;
      env.set(Var::x, z);
      return expr_->eval(env);
    }
    case NonlinearityKind::tabulated: {
      if (z <= nodes_.front()) return values_.front();
      if (z >= nodes_.back()) return values_.back();
      std::size_t i;
      if (uniform_h_ > 0.0) {
        const double s = (z - nodes_.front()) / uniform_h_;
        i = std::min(static_cast<std::size_t>(s), nodes_.size() - 2);
      } else {
        i = static_cast<std::size_t>(std::upper_bound(nodes_.begin(), nodes_.end(), z) - nodes_.begin()) - 1;
      }
      const double lam = (z - nodes_[i]) / (nodes_[i + 1] - nodes_[i]);
      return values_[i] + lam * (values_[i + 1] - values_[i]);
    }
  }
  return 0.0;
}

double Nonlinearity::table_integral(double z) const {
  if (z <= nodes_.front()) return values_.front() * (z - nodes_.front());
  if (z >= nodes_.back()) return prefix_.back() + values_.back() * (z - nodes_.back());
  std::size_t i;
  if (uniform_h_ > 0.0) {
    i = std::min(static_cast<std::size_t>((z - nodes_.front()) / uniform_h_), nodes_.size() - 2);
  } else {
    i = static_cast<std::size_t>(std::upper_bound(nodes_.begin(), nodes_.end(), z) - nodes_.begin()) - 1;
  }
  return prefix_[i] + 0.5 * (z - nodes_[i]) * (values_[i] + F(z));
}

double Nonlinearity::G(double z) const {
  switch (kind_) {
    case NonlinearityKind::zero: return 0.0;
    case NonlinearityKind::power: return std::pow(std::fabs(z), p_ + 2.0) / (p_ + 2.0);
    case NonlinearityKind::tabulated: return table_integral(z) - table_integral(0.0);
    case NonlinearityKind::expr: {
      if (z == 0.0) return 0.0;
      // Integrate over w = z s^2, s in [0, 1]: this smooths endpoint
      // singularities such as sqrt|w| near 0, which otherwise drive the
      // Kronrod error estimate to full depth.
      double error = 0.0, l1 = 0.0;
      const double tol = 1e-10;
      auto g = [this, z](double s) { return F(z * s * s) * 2.0 * z * s; };
      const double value = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
          g, 0.0, 1.0, 30, tol, &error, &l1);
      if (error <= tol * std::max(l1, std::numeric_limits<double>::min()) || error <= 1e-300) return value;
      throw std::runtime_error("primitive G: adaptive quadrature did not converge at z = " + fmt(z));
    }
  }
  return 0.0;
}

double Nonlinearity::local_lipschitz(double r) const {
  r = std::fabs(r);
  switch (kind_) {
    case NonlinearityKind::zero: return 0.0;
    case NonlinearityKind::power: return (p_ + 1.0) * std::pow(r, p_);
    case NonlinearityKind::tabulated: return *lip_;
    case NonlinearityKind::expr: {
      if (lip_) return *lip_;
      if (r == 0.0) return 0.0;
      const int n = 2001;
      double best = 0.0, prev = F(-r);
      const double h = 2.0 * r / (n - 1);
      for (int i = 1; i < n; ++i) {
        const double cur = F(-r + i * h);
        best = std::max(best, std::fabs(cur - prev) / h);
        prev = cur;
      }
      return best;
    }
  }
  return 0.0;
}

std::string Nonlinearity::describe() const {
  switch (kind_) {
    case NonlinearityKind::zero: return "zero";
    case NonlinearityKind::power: return "power(p=" + fmt(p_) + ")";
    case NonlinearityKind::expr: return "expr(" + expr_->to_string() + ")";
    case NonlinearityKind::tabulated:
      return "tabulated(" + std::to_string(nodes_.size()) + " nodes, lip=" + fmt(*lip_) + ")";
  }
  return "?";
}

Nonlinearity lipschitz_approx(const Nonlinearity& F, int k) {
  if (k < 1) throw std::invalid_argument("approximation index k must be >= 1");
  const double f0 = F.F(0.0);
  if (f0 != 0.0) throw std::invalid_argument("lipschitz_approx requires F(0) = 0, got " + fmt(f0));
  const long half = static_cast<long>(k) * k;
  std::vector<double> nodes, values;
  nodes.reserve(static_cast<std::size_t>(2 * half + 1));
  values.reserve(nodes.capacity());
  for (long i = -half; i <= half; ++i) {
    const double z = static_cast<double>(i) / k;
    nodes.push_back(z);
    values.push_back(i == 0 ? 0.0 : F.F(z));
  }
  return Nonlinearity::tabulated(std::move(nodes), std::move(values));
}

std::vector<double> truncate(std::span<const double> samples, double j) {
  if (!(j > 0.0)) throw std::invalid_argument("truncation level must be positive");
  std::vector<double> out(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) out[i] = truncate(samples[i], j);
  return out;
}

std::function<double(double)> primitive_G(const Nonlinearity& F) {
  return [F](double z) { return F.G(z); };
}

// ------------------------------------------------------------ validation

std::vector<Point> uniform_grid(const BoxDomain& domain, int n) {
  if (n < 2) throw std::invalid_argument("grid needs >= 2 points per dimension");
  std::vector<Point> pts;
  std::array<int, 3> idx{0, 0, 0};
  std::size_t total = 1;
  for (int i = 0; i < domain.dim; ++i) total *= static_cast<std::size_t>(n);
  pts.reserve(total);
  for (std::size_t q = 0; q < total; ++q) {
    Point p{0.0, 0.0, 0.0};
    for (int i = 0; i < domain.dim; ++i) p[i] = domain.lengths[i] * idx[i] / (n - 1);
    pts.push_back(p);
    for (int i = domain.dim - 1; i >= 0; --i) {
      if (++idx[i] < n) break;
      idx[i] = 0;
    }
  }
  return pts;
}

namespace {

double min_sym_eig(const CoefficientSet& c, int dim, double t, std::span<const double> x) {
  Eigen::Matrix3d A = Eigen::Matrix3d::Zero();
  for (int i = 0; i < dim; ++i)
    for (int j = i; j < dim; ++j) A(i, j) = A(j, i) = c.As(i, j)(t, x);
  if (dim == 1) return A(0, 0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A.topLeftCorner(dim, dim), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

bool on_boundary(const BoxDomain& d, const Point& p) {
  for (int i = 0; i < d.dim; ++i)
    if (p[i] == 0.0 || p[i] == d.lengths[i]) return true;
  return false;
}

}  // namespace

ValidationReport validate(const ProblemSpec& spec, int grid, int time_samples) {
  if (grid < 8) throw std::invalid_argument("validation grid needs >= 8 points per dimension");
  if (time_samples < 16) throw std::invalid_argument("validation needs >= 16 time samples");

  ValidationReport r;
  r.alpha = spec.alpha;
  const int dim = spec.domain.dim;
  const auto pts = uniform_grid(spec.domain, grid);
  std::vector<double> times(static_cast<std::size_t>(time_samples));
  for (int i = 0; i < time_samples; ++i) times[static_cast<std::size_t>(i)] = spec.T * i / (time_samples - 1);

  if (!(spec.alpha > 0.0)) r.failures.push_back("alpha must be positive");
  if (!(spec.T > 0.0)) r.failures.push_back("horizon T must be positive");

  auto record = [&](const std::string& field, const std::exception& e) {
    for (const auto& fe : r.field_errors)
      if (fe.first == field) return;
    r.field_errors.emplace_back(field, e.what());
  };

  // Sweep every field once so evaluation errors are reported by name.
  struct Named {
    std::string name;
    const ScalarField* field;
    bool time_dependent;
  };
  std::vector<Named> fields;
  const auto& co = spec.coefficients;
  fields.push_back({"coefficients.rho", &co.rho, true});
  for (int i = 0; i < dim; ++i)
    for (int j = i; j < dim; ++j) {
      const std::string ij = std::to_string(i + 1) + std::to_string(j + 1);
      fields.push_back({"coefficients.A_s." + ij, &co.As_upper[i][j], true});
      if (j > i) fields.push_back({"coefficients.A_a." + ij, &co.Aa_upper[i][j], true});
    }
  for (int i = 0; i < dim; ++i) fields.push_back({"coefficients.b." + std::to_string(i + 1), &co.b[i], true});
  fields.push_back({"coefficients.c", &co.c, true});
  fields.push_back({"sources.f", &spec.sources.f, true});
  fields.push_back({"sources.g0", &spec.sources.g0, true});
  for (int i = 0; i < dim; ++i)
    fields.push_back({"sources.Gvec." + std::to_string(i + 1), &spec.sources.Gvec[i], true});
  fields.push_back({"initial.u0", &spec.initial.u0, false});
  fields.push_back({"initial.u1", &spec.initial.u1, false});

  for (const auto& nf : fields) {
    if (!nf.field->present()) continue;
    try {
      for (double t : (nf.time_dependent ? times : std::vector<double>{0.0}))
        for (const auto& p : pts) {
          const std::span<const double> x(p.data(), static_cast<std::size_t>(dim));
          (void)(*nf.field)(t, x);
          if (nf.time_dependent && nf.field->time_dependent()) (void)nf.field->dt(t, x);
        }
    } catch (const std::exception& e) {
      record(nf.name, e);
    }
  }

  // rho >= alpha
  r.min_rho = std::numeric_limits<double>::infinity();
  r.min_As_eig = std::numeric_limits<double>::infinity();
  try {
    for (double t : times)
      for (const auto& p : pts) {
        const std::span<const double> x(p.data(), static_cast<std::size_t>(dim));
        const double rho = co.rho(t, x);
        if (rho < r.min_rho) r.min_rho = rho, r.min_rho_t = t;
      }
  } catch (const std::exception& e) {
    record("coefficients.rho", e);
  }
  try {
    for (double t : times)
      for (const auto& p : pts) {
        const std::span<const double> x(p.data(), static_cast<std::size_t>(dim));
        const double ev = min_sym_eig(co, dim, t, x);
        if (ev < r.min_As_eig) r.min_As_eig = ev, r.min_As_eig_t = t;
      }
  } catch (const std::exception& e) {
    record("coefficients.A_s", e);
  }
  if (!co.rho.present()) r.failures.push_back("coefficients.rho is missing");
  if (r.min_rho < spec.alpha)
    r.failures.push_back("rho(" + fmt(r.min_rho_t) + ", .) = " + fmt(r.min_rho) + " < alpha");
  // eigenvalues carry solver rounding of a few ulps of ||A_s||
  if (r.min_As_eig < spec.alpha * (1.0 - 64 * std::numeric_limits<double>::epsilon()))
    r.failures.push_back("min eig A_s(" + fmt(r.min_As_eig_t) + ", .) = " + fmt(r.min_As_eig) + " < alpha");

  // sign condition, F(0) = 0, G >= 0
  const auto& F = spec.nonlinearity;
  try {
    r.F_at_zero = F.F(0.0);
    if (r.F_at_zero != 0.0) r.failures.push_back("F(0) = " + fmt(r.F_at_zero) + " != 0");
    const int n = spec.validation.sign_samples;
    const double R = spec.validation.sign_range;
    for (int i = 0; i < n; ++i) {
      const double z = n == 1 ? 0.0 : -R + 2.0 * R * i / (n - 1);
      if (z * F.F(z) < 0.0) {
        if (r.sign_violations == 0) r.first_sign_violation = z;
        ++r.sign_violations;
      }
      if (F.G(z) < -1e-12 * (1.0 + std::fabs(z))) ++r.negative_G;
    }
    if (r.sign_violations > 0)
      r.failures.push_back(std::to_string(r.sign_violations) + " sign-condition violations, first at z = " +
                           fmt(r.first_sign_violation));
    if (r.negative_G > 0) r.failures.push_back(std::to_string(r.negative_G) + " samples with G(z) < 0");
  } catch (const std::exception& e) {
    record("nonlinearity.F", e);
  }

  // u0 vanishes on the boundary
  try {
    for (const auto& p : pts) {
      if (!on_boundary(spec.domain, p)) continue;
      const double v = std::fabs(spec.initial.u0(0.0, std::span<const double>(p.data(), static_cast<std::size_t>(dim))));
      r.max_boundary_u0 = std::max(r.max_boundary_u0, v);
      if (v > spec.validation.boundary_tol) ++r.boundary_violations;
    }
    if (r.boundary_violations > 0)
      r.failures.push_back("u0 nonzero at " + std::to_string(r.boundary_violations) + " boundary points (max " +
                           fmt(r.max_boundary_u0) + ")");
  } catch (const std::exception& e) {
    record("initial.u0", e);
  }

  if (F.lipschitz())
    r.regime = "lipschitz";
  else if (F.locally_lipschitz())
    r.regime = "local";
  else
    r.regime = "continuous";

  const auto p = F.growth_exponent();
  if (r.regime == "lipschitz" && !p)
    r.growth_window = "lipschitz";
  else if (!p)
    r.growth_window = "unknown";
  else {
    const bool lower = *p >= 1.0 / dim;
    const bool upper = dim <= 2 || *p <= 2.0 / (dim - 2);
    r.growth_window = lower && upper ? "inside" : "outside";
  }

  r.assumed.push_back("G(u0) in L1(Omega)");
  if (!r.field_errors.empty()) r.failures.push_back(std::to_string(r.field_errors.size()) + " field(s) failed to evaluate");
  r.passed = r.failures.empty();
  return r;
}

std::string ValidationReport::to_text() const {
  std::ostringstream os;
  os << "status = " << (passed ? "pass" : "fail") << '\n';
  os << "alpha = " << fmt(alpha) << '\n';
  os << "min_rho = " << fmt(min_rho) << '\n';
  os << "min_rho_t = " << fmt(min_rho_t) << '\n';
  os << "min_As_eig = " << fmt(min_As_eig) << '\n';
  os << "min_As_eig_t = " << fmt(min_As_eig_t) << '\n';
  os << "F_at_zero = " << fmt(F_at_zero) << '\n';
  os << "sign_violations = " << sign_violations << '\n';
  if (sign_violations > 0) os << "first_sign_violation = " << fmt(first_sign_violation) << '\n';
  os << "negative_G = " << negative_G << '\n';
  os << "boundary_violations = " << boundary_violations << '\n';
  os << "max_boundary_u0 = " << fmt(max_boundary_u0) << '\n';
  os << "regime = " << regime << '\n';
  os << "growth_window = " << growth_window << '\n';
  for (const auto& a : assumed) os << "assumed = " << a << '\n';
  for (const auto& [field, msg] : field_errors) os << "error." << field << " = " << msg << '\n';
  for (const auto& f : failures) os << "failure = " << f << '\n';
  return os.str();
}

}  // namespace semiwave
