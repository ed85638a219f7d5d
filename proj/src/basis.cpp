#include "semiwave/basis.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace semiwave {

using std::numbers::pi;

BoxDomain::BoxDomain(int dim_, std::array<double, 3> lengths_) : dim(dim_), lengths(lengths_) {
  if (dim < 1 || dim > 3) throw std::invalid_argument("domain dimension must be 1, 2 or 3");
  for (int i = 0; i < dim; ++i)
    if (!(lengths[i] > 0.0) || !std::isfinite(lengths[i]))
      throw std::invalid_argument("domain length L" + std::to_string(i + 1) + " must be positive");
  for (int i = dim; i < 3; ++i) lengths[i] = 1.0;
}

double BoxDomain::volume() const {
  double v = 1.0;
  for (int i = 0; i < dim; ++i) v *= lengths[i];
  return v;
}

bool BoxDomain::contains(std::span<const double> x, double tol) const {
  for (int i = 0; i < dim; ++i)
    if (x[i] < -tol || x[i] > lengths[i] + tol) return false;
  return true;
}

BasisSet::BasisSet(const BoxDomain& domain, std::vector<Mode> modes)
    : domain_(domain), modes_(std::move(modes)) {
  scale_ = {1.0, 1.0, 1.0};
  for (int i = 0; i < domain_.dim; ++i) scale_[i] = std::sqrt(2.0 / domain_.lengths[i]);
  eigenvalues_.reserve(modes_.size());
  for (const Mode& k : modes_) {
    double lambda = 0.0;
    for (int i = 0; i < domain_.dim; ++i) {
      if (k[i] < 1) throw std::invalid_argument("mode indices must be >= 1");
      const double s = k[i] * pi / domain_.lengths[i];
      lambda += s * s;
    }
    eigenvalues_.push_back(lambda);
  }
}

int BasisSet::max_index(int axis) const {
  int k = 0;
  for (const Mode& mode : modes_) k = std::max(k, mode[axis]);
  return k;
}

double BasisSet::value(std::size_t j, std::span<const double> x) const {
  const Mode& k = modes_.at(j);
  double v = 1.0;
  for (int i = 0; i < domain_.dim; ++i) v *= scale_[i] * std::sin(k[i] * pi * x[i] / domain_.lengths[i]);
  return v;
}

Point BasisSet::gradient(std::size_t j, std::span<const double> x) const {
  const Mode& k = modes_.at(j);
  const int dim = domain_.dim;
  std::array<double, 3> s{}, c{}, w{};
  for (int i = 0; i < dim; ++i) {
    w[i] = k[i] * pi / domain_.lengths[i];
    s[i] = scale_[i] * std::sin(w[i] * x[i]);
    c[i] = scale_[i] * w[i] * std::cos(w[i] * x[i]);
  }
  Point g{0.0, 0.0, 0.0};
  for (int i = 0; i < dim; ++i) {
    double v = c[i];
    for (int l = 0; l < dim; ++l)
      if (l != i) v *= s[l];
    g[i] = v;
  }
  return g;
}

BasisSet build_basis(const BoxDomain& domain, std::size_t m) {
  if (m < 1) throw std::invalid_argument("basis size m must be >= 1");
  // The m lowest modes have every k_i <= m.
  const int kmax = static_cast<int>(m);
  struct Candidate {
    double lambda;
    Mode k;
  };
  std::vector<Candidate> all;
  const int n1 = kmax, n2 = domain.dim >= 2 ? kmax : 1, n3 = domain.dim >= 3 ? kmax : 1;
  all.reserve(static_cast<std::size_t>(n1) * n2 * n3);
  for (int a = 1; a <= n1; ++a)
    for (int b = 1; b <= n2; ++b)
      for (int c = 1; c <= n3; ++c) {
        Mode k{a, domain.dim >= 2 ? b : 0, domain.dim >= 3 ? c : 0};
        double lambda = 0.0;
        for (int i = 0; i < domain.dim; ++i) {
          const double s = k[i] * pi / domain.lengths[i];
          lambda += s * s;
        }
        all.push_back({lambda, k});
      }
  auto less = [](const Candidate& a, const Candidate& b) {
    if (a.lambda != b.lambda) return a.lambda < b.lambda;
    return a.k < b.k;
  };
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(m), all.end(), less);
  std::vector<Mode> modes;
  modes.reserve(m);
  for (std::size_t j = 0; j < m; ++j) modes.push_back(all[j].k);
  return BasisSet(domain, std::move(modes));
}

void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights) {
  if (n < 1) throw std::invalid_argument("Gauss-Legendre order must be >= 1");
  nodes.assign(n, 0.0);
  weights.assign(n, 0.0);
  const int half = (n + 1) / 2;
  for (int i = 0; i < half; ++i) {
    double z = std::cos(pi * (i + 0.75) / (n + 0.5));
    double dp = 1.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = z;
      for (int j = 2; j <= n; ++j) {
        const double p2 = ((2.0 * j - 1.0) * z * p1 - (j - 1.0) * p0) / j;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1.0, p1 = z;
      dp = n * (z * p1 - p0) / (z * z - 1.0);
      const double dz = p1 / dp;
      z -= dz;
      if (std::fabs(dz) < 1e-16) break;
    }
    // recompute derivative at the converged root
    double p0 = 1.0, p1 = z;
    for (int j = 2; j <= n; ++j) {
      const double p2 = ((2.0 * j - 1.0) * z * p1 - (j - 1.0) * p0) / j;
      p0 = p1;
      p1 = p2;
    }
    dp = n * (z * p1 - p0) / (z * z - 1.0);
    const double w = 2.0 / ((1.0 - z * z) * dp * dp);
    nodes[i] = -z;
    nodes[n - 1 - i] = z;
    weights[i] = w;
    weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) nodes[n / 2] = 0.0;
}

QuadratureRule build_quadrature(const BoxDomain& domain, int order) {
  if (order < 2) throw std::invalid_argument("quadrature order must be >= 2");
  std::vector<double> x, w;
  gauss_legendre(order, x, w);

  QuadratureRule rule;
  rule.dim = domain.dim;
  rule.order = order;
  std::size_t n = 1;
  for (int i = 0; i < domain.dim; ++i) n *= static_cast<std::size_t>(order);
  rule.nodes.reserve(n);
  rule.weights.reserve(n);

  std::array<int, 3> idx{0, 0, 0};
  for (std::size_t q = 0; q < n; ++q) {
    Point p{0.0, 0.0, 0.0};
    double weight = 1.0;
    for (int i = 0; i < domain.dim; ++i) {
      const double half = 0.5 * domain.lengths[i];
      p[i] = half * (x[idx[i]] + 1.0);
      weight *= half * w[idx[i]];
    }
    rule.nodes.push_back(p);
    rule.weights.push_back(weight);
    for (int i = domain.dim - 1; i >= 0; --i) {
      if (++idx[i] < order) break;
      idx[i] = 0;
    }
  }
  return rule;
}

int default_quadrature_order(const BasisSet& basis) {
  int kmax = 1;
  for (int i = 0; i < basis.domain().dim; ++i) kmax = std::max(kmax, basis.max_index(i));
  const int resolved = static_cast<int>(std::ceil(pi * kmax)) + 12;
  return std::max(2 * kmax + 8, resolved);
}

NodeTable::NodeTable(const BasisSet& basis, const QuadratureRule& rule) {
  const auto m = static_cast<Eigen::Index>(basis.size());
  const auto n = static_cast<Eigen::Index>(rule.size());
  values.resize(m, n);
  for (int i = 0; i < 3; ++i) grads[i].setZero(i < rule.dim ? m : 0, i < rule.dim ? n : 0);
  for (Eigen::Index q = 0; q < n; ++q) {
    const auto x = rule.node(static_cast<std::size_t>(q));
    for (Eigen::Index j = 0; j < m; ++j) {
      values(j, q) = basis.value(static_cast<std::size_t>(j), x);
      const Point g = basis.gradient(static_cast<std::size_t>(j), x);
      for (int i = 0; i < rule.dim; ++i) grads[i](j, q) = g[i];
    }
  }
}

Eigen::VectorXd project_H(std::span<const double> samples, const NodeTable& table,
                          const QuadratureRule& rule) {
  if (samples.size() != rule.size())
    throw std::invalid_argument("sample count " + std::to_string(samples.size()) +
                                " does not match quadrature size " + std::to_string(rule.size()));
  const Eigen::Index m = table.values.rows();
  Eigen::VectorXd d = Eigen::VectorXd::Zero(m);
  for (std::size_t q = 0; q < rule.size(); ++q) {
    const double wu = rule.weights[q] * samples[q];
    for (Eigen::Index j = 0; j < m; ++j) d[j] += wu * table.values(j, static_cast<Eigen::Index>(q));
  }
  return d;
}

Eigen::VectorXd project_H(std::span<const double> samples, const BasisSet& basis,
                          const QuadratureRule& rule) {
  return project_H(samples, NodeTable(basis, rule), rule);
}

Eigen::VectorXd expand_at_nodes(const Eigen::VectorXd& d, const NodeTable& table) {
  const Eigen::Index m = table.values.rows(), n = table.values.cols();
  if (d.size() != m) throw std::invalid_argument("coefficient vector has wrong length");
  Eigen::VectorXd u = Eigen::VectorXd::Zero(n);
  for (Eigen::Index q = 0; q < n; ++q) {
    double s = 0.0;
    for (Eigen::Index j = 0; j < m; ++j) s += d[j] * table.values(j, q);
    u[q] = s;
  }
  return u;
}

double norm_H(const Eigen::VectorXd& d) { return std::sqrt(d.squaredNorm()); }

double norm_V(const Eigen::VectorXd& d, const BasisSet& basis) {
  if (static_cast<std::size_t>(d.size()) != basis.size())
    throw std::invalid_argument("coefficient vector has wrong length");
  double s = 0.0;
  for (Eigen::Index j = 0; j < d.size(); ++j) s += basis.eigenvalue(static_cast<std::size_t>(j)) * d[j] * d[j];
  return std::sqrt(s);
}

}  // namespace semiwave
