#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace semiwave {

/// Axis-aligned box (0,L_1) x ... x (0,L_dim), dim in {1,2,3}.
struct BoxDomain {
  int dim = 1;
  std::array<double, 3> lengths{1.0, 1.0, 1.0};

  BoxDomain() = default;
  BoxDomain(int dim, std::array<double, 3> lengths);  // throws std::invalid_argument

  double volume() const;
  bool contains(std::span<const double> x, double tol = 0.0) const;
};

using Mode = std::array<int, 3>;
using Point = std::array<double, 3>;

/// Dirichlet eigenpairs of -Laplace on a box, ordered by eigenvalue with
/// lexicographic tie-break on the multi-index. Mode indices are 0-based.
///
///   w_k(x) = prod_i sqrt(2/L_i) sin(k_i pi x_i / L_i),
///   lambda_k = sum_i (k_i pi / L_i)^2.
class BasisSet {
public:
  BasisSet(const BoxDomain& domain, std::vector<Mode> modes);

  const BoxDomain& domain() const { return domain_; }
  std::size_t size() const { return modes_.size(); }
  const std::vector<Mode>& modes() const { return modes_; }
  const std::vector<double>& eigenvalues() const { return eigenvalues_; }
  double eigenvalue(std::size_t j) const { return eigenvalues_.at(j); }
  // Largest k_i over all modes along `axis`.
  int max_index(int axis) const;

  double value(std::size_t j, std::span<const double> x) const;
  Point gradient(std::size_t j, std::span<const double> x) const;

private:
  BoxDomain domain_;
  std::vector<Mode> modes_;
  std::vector<double> eigenvalues_;
  std::array<double, 3> scale_{};  // sqrt(2/L_i), 1 for unused axes
};

BasisSet build_basis(const BoxDomain& domain, std::size_t m);

/// Gauss-Legendre nodes and weights on [-1, 1], ascending.
void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights);

/// Tensor-product Gauss-Legendre rule on a box; node index runs with the
/// first axis slowest.
struct QuadratureRule {
  int dim = 1;
  int order = 0;  // points per dimension
  std::vector<Point> nodes;
  std::vector<double> weights;

  std::size_t size() const { return weights.size(); }
  std::span<const double> node(std::size_t q) const {
    return {nodes[q].data(), static_cast<std::size_t>(dim)};
  }
};

QuadratureRule build_quadrature(const BoxDomain& domain, int order);

/// Points per dimension used when none is configured. Large enough that the
/// Gram matrix of the basis is the identity to ~1e-14.
int default_quadrature_order(const BasisSet& basis);

/// Basis values and gradients at quadrature nodes, each m x n.
struct NodeTable {
  Eigen::MatrixXd values;
  std::array<Eigen::MatrixXd, 3> grads;

  NodeTable() = default;
  NodeTable(const BasisSet& basis, const QuadratureRule& rule);
};

/// d_j = (u, w_j) by quadrature, from samples of u at the rule's nodes.
Eigen::VectorXd project_H(std::span<const double> samples, const NodeTable& table,
                          const QuadratureRule& rule);
Eigen::VectorXd project_H(std::span<const double> samples, const BasisSet& basis,
                          const QuadratureRule& rule);

/// Values of the expansion sum_j d_j w_j at every node.
Eigen::VectorXd expand_at_nodes(const Eigen::VectorXd& d, const NodeTable& table);

double norm_H(const Eigen::VectorXd& d);
/// Gradient seminorm: ||u||_V^2 = sum_j lambda_j d_j^2.
double norm_V(const Eigen::VectorXd& d, const BasisSet& basis);

}  // namespace semiwave
