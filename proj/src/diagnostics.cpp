#include "semiwave/diagnostics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <future>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace semiwave {

EnergyRecord energy(const GalerkinSystem& sys, const State& s, bool include_G, bool include_second) {
  EnergyRecord r;
  r.t = s.t;
  const Eigen::MatrixXd C = sys.assemble_C(s.t);
  const Eigen::MatrixXd Ks = sys.assemble_M(s.t).Ks;
  r.kinetic = 0.5 * s.e.dot(C * s.e);
  r.potential = 0.5 * s.d.dot(Ks * s.d);
  r.gpart = include_G ? sys.G_integral(s.d) : 0.0;
  r.total = r.kinetic + r.potential + r.gpart;
  if (include_second) {
    const Eigen::VectorXd acc = rhs(sys, s.t, s).second;
    r.second = 0.5 * acc.dot(C * acc) + 0.5 * s.e.dot(Ks * s.e);
  }
  return r;
}

void fill_energies(const GalerkinSystem& sys, Trajectory& traj, bool include_G, bool include_second) {
  traj.energies.clear();
  traj.energies.reserve(traj.states.size());
  for (const auto& s : traj.states) traj.energies.push_back(energy(sys, s, include_G, include_second));
}

namespace {

double phi_from(const GalerkinSystem& sys, const CoefficientNormBounds& nb, double lip) {
  return 2.0 / sys.spec().alpha * (nb.R_dt + nb.A0_dt + nb.A1 + nb.f_H + lip);
}

}  // namespace

double phi(const GalerkinSystem& sys, double t, double lip) {
  return phi_from(sys, sys.coefficient_norm_bounds(t), lip);
}

double phi_tilde(const GalerkinSystem& sys, double t, double lip) {
  const auto nb = sys.coefficient_norm_bounds(t);
  return phi_from(sys, nb, lip) + 2.0 / sys.spec().alpha * nb.g_dt_Vp;
}

double lipschitz_in_use(const GalerkinSystem& sys, const Trajectory& traj) {
  const Nonlinearity& F = sys.nonlinearity();
  if (F.is_zero()) return 0.0;
  double lip = 0.0;
  if (F.lipschitz()) {
    lip = *F.lipschitz();
  } else {
    double r = 0.0;
    for (const auto& s : traj.states) r = std::max(r, sys.max_abs_at_nodes(s.d));
    lip = F.local_lipschitz(r);
  }
  return lip * std::max(1.0, 1.0 / (2.0 * std::sqrt(sys.lambda1())));
}

std::string BoundReport::to_text() const {
  std::ostringstream os;
  os.precision(17);
  os << "passed = " << (passed ? "true" : "false") << '\n';
  os << "samples = " << samples.size() << '\n';
  os << "lipschitz = " << lip << '\n';
  os << "with_g = " << (with_g ? "true" : "false") << '\n';
  os << "worst_relative_margin = " << worst_margin << '\n';
  if (!message.empty()) os << "message = " << message << '\n';
  return os.str();
}

BoundReport gronwall_check(const GalerkinSystem& sys, const Trajectory& traj) {
  if (traj.states.empty()) throw std::invalid_argument("empty trajectory");
  BoundReport rep;
  const double alpha = sys.spec().alpha;
  rep.lip = lipschitz_in_use(sys, traj);
  rep.with_g = sys.spec().sources.has_g(sys.dim());

  double int_phi = 0.0, int_f = 0.0, int_gdt = 0.0, g_max2 = 0.0, g0_2 = 0.0, E0 = 0.0;
  double prev_phi = 0.0, prev_f = 0.0, prev_gdt = 0.0, prev_t = 0.0;
  rep.worst_margin = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < traj.states.size(); ++i) {
    const State& s = traj.states[i];
    const auto nb = sys.coefficient_norm_bounds(s.t);
    BoundSample b;
    b.t = s.t;
    b.f_H = nb.f_H;
    b.g_dt_Vp = nb.g_dt_Vp;
    b.phi = phi_from(sys, nb, rep.lip) + (rep.with_g ? 2.0 / alpha * nb.g_dt_Vp : 0.0);
    b.energy = energy(sys, s, true, false).total;
    if (i == 0) {
      E0 = b.energy;
      g0_2 = nb.g_Vp * nb.g_Vp;
    } else {
      const double h = s.t - prev_t;
      int_phi += h * std::max(prev_phi, b.phi);
      int_f += h * std::max(prev_f, b.f_H);
      int_gdt += h * std::max(prev_gdt, b.g_dt_Vp);
    }
    g_max2 = std::max(g_max2, nb.g_Vp * nb.g_Vp);
    b.int_phi = int_phi;
    if (rep.with_g) {
      // Young splitting with kappa = 1/alpha: the boundary terms <g, u>
      // absorb half of the potential energy at both ends.
      b.data = 3.0 * E0 + 2.0 / alpha * (g_max2 + g0_2) + 2.0 * int_gdt + 2.0 * int_f;
      b.bound = b.data * std::exp(2.0 * int_phi);
    } else {
      b.data = E0 + int_f;
      b.bound = b.data * std::exp(int_phi);
    }
    b.margin = b.bound - b.energy;
    const double rel = b.margin / (1.0 + b.bound);
    rep.worst_margin = std::min(rep.worst_margin, rel);
    if (b.margin < -1e-8 * (1.0 + b.bound) && rep.passed) {
      rep.passed = false;
      std::ostringstream os;
      os.precision(6);
      os << "energy exceeds the a priori bound at t = " << b.t << " (E = " << b.energy << ", B = " << b.bound
         << "); the bound holds for exact Galerkin solutions, so the integrator or the constant assembly is suspect";
      rep.message = os.str();
    }
    prev_phi = b.phi;
    prev_f = b.f_H;
    prev_gdt = b.g_dt_Vp;
    prev_t = s.t;
    rep.samples.push_back(b);
  }
  if (!traj.complete) {
    rep.passed = false;
    rep.message = "trajectory incomplete: " + traj.failure;
  }
  return rep;
}

std::vector<ResidualSample> residual_check(const GalerkinSystem& sys, const Trajectory& traj) {
  std::vector<ResidualSample> out;
  const auto& S = traj.states;
  if (S.size() < 3) return out;
  std::vector<Eigen::VectorXd> Ce(S.size());
  for (std::size_t i = 0; i < S.size(); ++i) Ce[i] = sys.assemble_C(S[i].t) * S[i].e;
  for (std::size_t i = 1; i + 1 < S.size(); ++i) {
    const double h1 = S[i].t - S[i - 1].t, h2 = S[i + 1].t - S[i].t;
    const Eigen::VectorXd dCe = -h2 / (h1 * (h1 + h2)) * Ce[i - 1] + (h2 - h1) / (h1 * h2) * Ce[i] +
                                h1 / (h2 * (h1 + h2)) * Ce[i + 1];
    const Eigen::VectorXd r =
        dCe + sys.assemble_M(S[i].t).M * S[i].d + sys.assemble_nonlinear(S[i].d) - sys.assemble_load(S[i].t);
    out.push_back({S[i].t, r.cwiseAbs().maxCoeff()});
  }
  return out;
}

namespace {

// Runs job(i) for i in [0, n) on up to `threads` workers. Results are
// written by index, so scheduling does not affect them.
template <class Job>
void parallel_for(std::size_t n, int threads, Job job) {
  const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, threads)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) job(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::future<void>> futures;
  for (std::size_t w = 0; w < workers; ++w)
    futures.push_back(std::async(std::launch::async, [&] {
      for (std::size_t i = next++; i < n; i = next++) job(i);
    }));
  for (auto& f : futures) f.get();
}

int steps_per_sample(double interval, double dt) {
  const long k = std::lround(interval / dt);
  if (k < 1 || std::fabs(k * dt - interval) > 1e-9 * interval)
    throw std::invalid_argument("every dt must divide the largest dt");
  return static_cast<int>(k);
}

}  // namespace

std::vector<ConvergenceRow> convergence_study(const ProblemSpec& spec, const std::vector<std::size_t>& m_list,
                                              const std::vector<double>& dt_list,
                                              const ConvergenceReference& reference,
                                              const StudyOptions& options) {
  if (m_list.empty() || dt_list.empty()) throw std::invalid_argument("empty m or dt list");
  if (!std::is_sorted(m_list.begin(), m_list.end()))
    throw std::invalid_argument("m list must be ascending");
  double interval = *std::max_element(dt_list.begin(), dt_list.end());
  if (!reference.exact) interval = std::max(interval, reference.dt);
  const std::size_t m_ref = std::max(reference.m, m_list.back());

  // Reference coefficients at the common sample times.
  std::vector<double> ref_t;
  std::vector<Eigen::VectorXd> ref_d;
  BasisSet ref_basis = build_basis(spec.domain, m_ref);
  if (reference.exact) {
    const QuadratureRule rule = build_quadrature(spec.domain, default_quadrature_order(ref_basis));
    const NodeTable table(ref_basis, rule);
    const long n = std::lround(spec.T / interval);
    for (long i = 0; i <= n; ++i) {
      const double t = i == n ? spec.T : static_cast<double>(i) * interval;
      std::vector<double> u(rule.size());
      for (std::size_t q = 0; q < rule.size(); ++q)
        u[q] = reference.exact->eval(Env::at(t, rule.node(q).data(), spec.domain.dim));
      ref_t.push_back(t);
      ref_d.push_back(project_H(u, table, rule));
    }
  } else {
    GalerkinSystem sys(spec, m_ref, options.quad_order, options.approx_k);
    SolveOptions so = options.solve;
    so.dt = reference.dt;
    so.sample_every = steps_per_sample(interval, reference.dt);
    const Trajectory tr = solve(sys, so, options.truncation);
    if (!tr.complete) throw std::runtime_error("reference run failed: " + tr.failure);
    for (const auto& s : tr.states) {
      ref_t.push_back(s.t);
      ref_d.push_back(s.d);
    }
  }

  std::vector<ConvergenceRow> rows(m_list.size() * dt_list.size());
  for (std::size_t a = 0; a < m_list.size(); ++a)
    for (std::size_t b = 0; b < dt_list.size(); ++b) {
      rows[a * dt_list.size() + b].m = m_list[a];
      rows[a * dt_list.size() + b].dt = dt_list[b];
      steps_per_sample(interval, dt_list[b]);
    }
  const auto& lam = ref_basis.eigenvalues();
  parallel_for(rows.size(), options.threads, [&](std::size_t i) {
    ConvergenceRow& row = rows[i];
    GalerkinSystem sys(spec, row.m, options.quad_order, options.approx_k);
    SolveOptions so = options.solve;
    so.dt = row.dt;
    so.sample_every = steps_per_sample(interval, row.dt);
    const Trajectory tr = solve(sys, so, options.truncation);
    row.complete = tr.complete && tr.states.size() == ref_t.size();
    const std::size_t n = std::min(tr.states.size(), ref_t.size());
    for (std::size_t k = 0; k < n; ++k) {
      double eH = 0.0, eV = 0.0;
      for (std::size_t j = 0; j < m_ref; ++j) {
        const double dj = j < row.m ? tr.states[k].d[static_cast<Eigen::Index>(j)] : 0.0;
        const double diff = dj - ref_d[k][static_cast<Eigen::Index>(j)];
        eH += diff * diff;
        eV += lam[j] * diff * diff;
      }
      row.err_H = std::max(row.err_H, std::sqrt(eH));
      row.err_V = std::max(row.err_V, std::sqrt(eV));
    }
    if (!row.complete) {
      row.err_H = std::numeric_limits<double>::infinity();
      row.err_V = std::numeric_limits<double>::infinity();
    }
  });
  return rows;
}

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

struct PointEval {
  const Expr& u;
  int dim;
  double operator()(double t, const std::array<double, 3>& x) const { return u.eval(Env::at(t, x.data(), dim)); }
};

double field_at(const ScalarField& f, double t, const std::array<double, 3>& x, int dim) {
  return f(t, std::span<const double>(x.data(), static_cast<std::size_t>(dim)));
}

}  // namespace

SourceSet mms_source(const ProblemSpec& spec, const Expr& u_exact, const Nonlinearity* F_in) {
  const int dim = spec.domain.dim;
  const auto L = spec.domain.lengths;
  {
    const int n = std::max(spec.validation.grid, 3);
    const int nt = std::max(spec.validation.time_samples, 2);
    const PointEval u{u_exact, dim};
    for (const Point& p : uniform_grid(spec.domain, n)) {
      bool on_boundary = false;
      for (int k = 0; k < dim; ++k) on_boundary = on_boundary || p[k] == 0.0 || p[k] == L[k];
      if (!on_boundary) continue;
      for (int i = 0; i < nt; ++i) {
        const double t = spec.T * i / (nt - 1);
        const double v = u(t, p);
        if (std::fabs(v) > spec.validation.boundary_tol) {
          std::ostringstream os;
          os << "manufactured solution does not vanish on the boundary: u(" << t << ", x) = " << v;
          throw std::invalid_argument(os.str());
        }
      }
    }
  }

  const Nonlinearity F = F_in ? *F_in : spec.nonlinearity;
  const CoefficientSet co = spec.coefficients;
  const double h2_rel = std::pow(kEps, 0.25);
  const double h1_rel = std::cbrt(kEps);

  auto source = [u_exact, co, F, dim, L, h2_rel, h1_rel](double t, std::span<const double> xs) {
    const PointEval u{u_exact, dim};
    std::array<double, 3> x{0.0, 0.0, 0.0};
    std::copy(xs.begin(), xs.end(), x.begin());
    const double u0 = u(t, x);

    // (rho u')' in flux form
    const double ht = h2_rel * std::max(1.0, std::fabs(t));
    double r = (field_at(co.rho, t + 0.5 * ht, x, dim) * (u(t + ht, x) - u0) -
                field_at(co.rho, t - 0.5 * ht, x, dim) * (u0 - u(t - ht, x))) /
               (ht * ht);

    auto shifted = [&](int k, double s) {
      auto y = x;
      y[k] += s;
      return y;
    };
    std::array<double, 3> grad{0.0, 0.0, 0.0};
    for (int k = 0; k < dim; ++k) {
      const double h = h1_rel * L[k];
      grad[k] = (u(t, shifted(k, h)) - u(t, shifted(k, -h))) / (2.0 * h);
    }

    // -div(A_s grad u): diagonal entries in flux form, off-diagonal ones as
    // nested central differences.
    for (int k = 0; k < dim; ++k) {
      const ScalarField& Akk = co.As(k, k);
      if (!Akk.present()) continue;
      const double h = h2_rel * L[k];
      r -= (field_at(Akk, t, shifted(k, 0.5 * h), dim) * (u(t, shifted(k, h)) - u0) -
            field_at(Akk, t, shifted(k, -0.5 * h), dim) * (u0 - u(t, shifted(k, -h)))) /
           (h * h);
    }
    for (int k = 0; k < dim; ++k)
      for (int l = 0; l < dim; ++l) {
        if (k == l || !co.As(k, l).present()) continue;
        const double hk = h2_rel * L[k], hl = h2_rel * L[l];
        auto flux = [&](double s) {
          const auto y = shifted(k, s);
          auto yp = y, ym = y;
          yp[l] += hl;
          ym[l] -= hl;
          return field_at(co.As(k, l), t, y, dim) * (u(t, yp) - u(t, ym)) / (2.0 * hl);
        };
        r -= (flux(hk) - flux(-hk)) / (2.0 * hk);
      }

    // -div(A_a grad u) = -(div A_a) . grad u
    for (int l = 0; l < dim; ++l) {
      double div = 0.0;
      for (int k = 0; k < dim; ++k) {
        auto [field, sign] = co.Aa(k, l);
        if (field && field->present())
          div += sign * field->dx(k, t, std::span<const double>(x.data(), static_cast<std::size_t>(dim)), L[k]);
      }
      r -= div * grad[l];
    }

    for (int k = 0; k < dim; ++k)
      if (co.b[k].present()) r += field_at(co.b[k], t, x, dim) * grad[k];
    if (co.c.present()) r += field_at(co.c, t, x, dim) * u0;
    r += F.F(u0);
    return r;
  };

  SourceSet s;
  s.f = ScalarField::from_function(source, true);
  return s;
}

ProblemSpec manufactured_problem(const ProblemSpec& spec, const Expr& u_exact, std::optional<int> approx_k) {
  ProblemSpec out = spec;
  if (approx_k) {
    const Nonlinearity Fk = lipschitz_approx(spec.nonlinearity, *approx_k);
    out.sources = mms_source(spec, u_exact, &Fk);
  } else {
    out.sources = mms_source(spec, u_exact);
  }
  const int dim = spec.domain.dim;
  out.initial.u0 = ScalarField::from_function(
      [u_exact, dim](double, std::span<const double> x) { return u_exact.eval(Env::at(0.0, x.data(), dim)); },
      false);
  out.initial.u1 = ScalarField::from_function(
      [u_exact, dim](double, std::span<const double> x) { return diff_t(u_exact, Env::at(0.0, x.data(), dim)); },
      false);
  out.initial.truncation.reset();
  return out;
}

MmsResult mms_run(const ProblemSpec& spec, const Expr& u_exact, std::size_t m, const StudyOptions& options) {
  const ProblemSpec problem = manufactured_problem(spec, u_exact, options.approx_k);
  GalerkinSystem sys(problem, m, options.quad_order, options.approx_k);
  MmsResult res;
  res.trajectory = solve(sys, options.solve);
  const int dim = spec.domain.dim;
  const auto& rule = sys.rule();
  const auto& table = sys.table();
  const double h1_rel = std::cbrt(kEps);
  for (const auto& s : res.trajectory.states) {
    const Eigen::VectorXd um = expand_at_nodes(s.d, table);
    double eH = 0.0, eV = 0.0;
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const auto qi = static_cast<Eigen::Index>(q);
      std::array<double, 3> x{0.0, 0.0, 0.0};
      const auto node = rule.node(q);
      std::copy(node.begin(), node.end(), x.begin());
      const double diff = um[qi] - u_exact.eval(Env::at(s.t, x.data(), dim));
      eH += rule.weights[q] * diff * diff;
      for (int k = 0; k < dim; ++k) {
        const double h = h1_rel * spec.domain.lengths[k];
        auto xp = x, xm = x;
        xp[k] += h;
        xm[k] -= h;
        const double gk = (u_exact.eval(Env::at(s.t, xp.data(), dim)) - u_exact.eval(Env::at(s.t, xm.data(), dim))) /
                          (2.0 * h);
        const double gm = table.grads[k].col(qi).dot(s.d);
        eV += rule.weights[q] * (gm - gk) * (gm - gk);
      }
    }
    res.t.push_back(s.t);
    res.err_H.push_back(std::sqrt(eH));
    res.err_V.push_back(std::sqrt(eV));
    res.max_err_H = std::max(res.max_err_H, res.err_H.back());
    res.max_err_V = std::max(res.max_err_V, res.err_V.back());
  }
  return res;
}

UniquenessResult uniqueness_probe(const ProblemSpec& spec, double delta, std::size_t m,
                                  const StudyOptions& options) {
  UniquenessResult res;
  res.delta = delta;
  {
    const Nonlinearity& F = spec.nonlinearity;
    const auto p = F.growth_exponent();
    const int d = spec.domain.dim;
    const bool window = p && *p >= 1.0 / d && (d <= 2 || *p <= 2.0 / (d - 2));
    res.theorem_applies = F.is_zero() || F.lipschitz().has_value() || options.approx_k.has_value() || window;
  }

  GalerkinSystem base(spec, m, options.quad_order, options.approx_k);
  ProblemSpec perturbed = spec;
  {
    const ScalarField u0 = spec.initial.u0;
    const BasisSet basis = base.basis();
    const int dim = spec.domain.dim;
    perturbed.initial.u0 = ScalarField::from_function(
        [u0, basis, delta, dim](double t, std::span<const double> x) {
          return u0(t, x) + delta * basis.value(0, x.subspan(0, static_cast<std::size_t>(dim)));
        },
        false);
  }
  GalerkinSystem other(perturbed, m, options.quad_order, options.approx_k);

  const Trajectory a = solve(base, options.solve, options.truncation);
  const Trajectory b = solve(other, options.solve, options.truncation);
  res.complete = a.complete && b.complete;
  const std::size_t n = std::min(a.states.size(), b.states.size());
  double max_diff = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double diff = (a.states[i].d - b.states[i].d).norm();
    res.t.push_back(a.states[i].t);
    res.diff_H.push_back(diff);
    max_diff = std::max(max_diff, diff);
  }
  res.ratio = delta != 0.0 ? max_diff / std::fabs(delta) : 0.0;
  return res;
}

}  // namespace semiwave
