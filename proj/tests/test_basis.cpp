#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "semiwave/basis.hpp"

using namespace semiwave;
using oracle::pi;

namespace {

double at1(const BasisSet& b, std::size_t j, double x) {
  const double p[1] = {x};
  return b.value(j, p);
}

double integrate(const QuadratureRule& rule, const std::function<double(std::span<const double>)>& f) {
  double s = 0.0;
  for (std::size_t q = 0; q < rule.size(); ++q) s += rule.weights[q] * f(rule.node(q));
  return s;
}

}  // namespace

TEST(Domain, Validation) {
  EXPECT_THROW(BoxDomain(0, {1, 1, 1}), std::invalid_argument);
  EXPECT_THROW(BoxDomain(4, {1, 1, 1}), std::invalid_argument);
  EXPECT_THROW(BoxDomain(2, {1, 0, 1}), std::invalid_argument);
  EXPECT_THROW(BoxDomain(1, {-1, 1, 1}), std::invalid_argument);
  EXPECT_NO_THROW(BoxDomain(2, {1, 2, -5}));  // unused axes are ignored
  EXPECT_DOUBLE_EQ(BoxDomain(3, {1, 2, 3}).volume(), 6.0);
}

TEST(BuildBasis, Examples) {
  const auto b1 = build_basis(BoxDomain(1, {1, 1, 1}), 2);
  EXPECT_EQ(b1.modes()[0][0], 1);
  EXPECT_EQ(b1.modes()[1][0], 2);
  EXPECT_NEAR(b1.eigenvalue(0), pi * pi, 1e-12);
  EXPECT_NEAR(b1.eigenvalue(1), 4 * pi * pi, 1e-12);

  const auto b2 = build_basis(BoxDomain(2, {1, 1, 1}), 4);
  const double lam[] = {2, 5, 5, 8};
  const int k[4][2] = {{1, 1}, {1, 2}, {2, 1}, {2, 2}};
  for (int j = 0; j < 4; ++j) {
    EXPECT_NEAR(b2.eigenvalue(j), lam[j] * pi * pi, 1e-12);
    EXPECT_EQ(b2.modes()[j][0], k[j][0]);
    EXPECT_EQ(b2.modes()[j][1], k[j][1]);
  }

  const auto b3 = build_basis(BoxDomain(1, {2, 1, 1}), 1);
  EXPECT_NEAR(b3.eigenvalue(0), pi * pi / 4, 1e-13);
  EXPECT_THROW(build_basis(BoxDomain(1, {1, 1, 1}), 0), std::invalid_argument);
}

TEST(BuildBasis, OrderingDeterministicAndNondecreasing) {
  const BoxDomain dom(3, {1.0, 1.3, 0.7});
  const auto a = build_basis(dom, 60), b = build_basis(dom, 60);
  EXPECT_EQ(a.modes(), b.modes());
  for (std::size_t j = 1; j < a.size(); ++j) {
    EXPECT_LE(a.eigenvalue(j - 1), a.eigenvalue(j));
    if (a.eigenvalue(j - 1) == a.eigenvalue(j)) {
      EXPECT_LT(a.modes()[j - 1], a.modes()[j]);
    }
  }
  // prefix property: the first m modes of a larger basis are the smaller basis
  const auto small = build_basis(dom, 17);
  for (std::size_t j = 0; j < small.size(); ++j) EXPECT_EQ(small.modes()[j], a.modes()[j]);
}

TEST(BuildBasis, MatchesBruteForceSpectrum) {
  const BoxDomain dom(2, {1.0, 2.0, 1.0});
  const auto b = build_basis(dom, 25);
  std::vector<double> all;
  for (int i = 1; i <= 30; ++i)
    for (int j = 1; j <= 30; ++j) all.push_back(std::pow(i * pi, 2) + std::pow(j * pi / 2.0, 2));
  std::sort(all.begin(), all.end());
  for (std::size_t j = 0; j < b.size(); ++j) EXPECT_NEAR(b.eigenvalue(j), all[j], 1e-10);
}

TEST(Quadrature, Examples) {
  const auto r = build_quadrature(BoxDomain(1, {1, 1, 1}), 2);
  ASSERT_EQ(r.size(), 2u);
  EXPECT_NEAR(r.nodes[0][0], 0.5 - 1.0 / (2.0 * std::sqrt(3.0)), 1e-15);
  EXPECT_NEAR(r.nodes[1][0], 0.5 + 1.0 / (2.0 * std::sqrt(3.0)), 1e-15);
  EXPECT_NEAR(r.weights[0], 0.5, 1e-15);
  EXPECT_NEAR(r.weights[1], 0.5, 1e-15);
  EXPECT_NEAR(integrate(r, [](auto x) { return x[0] * x[0] * x[0]; }), 0.25, 1e-16);

  const auto r16 = build_quadrature(BoxDomain(1, {1, 1, 1}), 16);
  EXPECT_NEAR(integrate(r16, [](auto x) { return std::pow(std::sin(pi * x[0]), 2); }), 0.5, 1e-14);
  EXPECT_THROW(build_quadrature(BoxDomain(1, {1, 1, 1}), 1), std::invalid_argument);
}

TEST(Quadrature, NodesMatchGolubWelsch) {
  for (int n : {2, 5, 16, 33, 80}) {
    std::vector<double> x, w, xo, wo;
    gauss_legendre(n, x, w);
    oracle::golub_welsch(n, xo, wo);
    for (int i = 0; i < n; ++i) {
      EXPECT_NEAR(x[i], xo[i], 1e-13) << n;
      EXPECT_NEAR(w[i], wo[i], 1e-13) << n;
    }
  }
}

TEST(Quadrature, WeightsAndPolynomialExactness) {
  const BoxDomain dom(3, {1.0, 2.0, 0.5});
  for (int order : {2, 3, 7, 12}) {
    const auto r = build_quadrature(dom, order);
    double sum = 0.0;
    for (double w : r.weights) {
      EXPECT_GT(w, 0.0);
      sum += w;
    }
    EXPECT_NEAR(sum, dom.volume(), 1e-13 * dom.volume());
    const int deg = 2 * order - 1;
    // int x^deg y^deg z^deg over the box
    const double exact = std::pow(1.0, deg + 1) / (deg + 1) * std::pow(2.0, deg + 1) / (deg + 1) *
                         std::pow(0.5, deg + 1) / (deg + 1);
    const double got = integrate(r, [&](auto x) { return std::pow(x[0], deg) * std::pow(x[1], deg) * std::pow(x[2], deg); });
    EXPECT_NEAR(got, exact, 1e-12 * std::fabs(exact)) << order;
  }
}

TEST(EvalBasis, Examples) {
  const auto b = build_basis(BoxDomain(1, {1, 1, 1}), 4);
  EXPECT_NEAR(at1(b, 0, 0.5), std::sqrt(2.0), 1e-15);
  const double p[1] = {0.25};
  EXPECT_NEAR(b.gradient(0, p)[0], pi, 1e-14);
  for (std::size_t j = 0; j < 4; ++j) {
    EXPECT_NEAR(at1(b, j, 0.0), 0.0, 1e-15);
    EXPECT_NEAR(at1(b, j, 1.0), 0.0, 1e-14);
  }
  EXPECT_THROW(at1(b, 4, 0.5), std::out_of_range);

  const auto b2 = build_basis(BoxDomain(2, {1, 2, 1}), 6);
  for (std::size_t j = 0; j < 6; ++j) {
    const double edge[4][2] = {{0, 0.3}, {1, 0.7}, {0.4, 0}, {0.6, 2}};
    for (auto& e : edge) EXPECT_NEAR(b2.value(j, e), 0.0, 1e-14);
  }
}

TEST(EvalBasis, AgainstClosedForm) {
  const double L = 1.7;
  const auto b = build_basis(BoxDomain(1, {L, 1, 1}), 5);
  for (double x : {0.1, 0.5, 1.3}) {
    const double p[1] = {x};
    for (int k = 1; k <= 5; ++k) {
      EXPECT_NEAR(b.value(k - 1, p), oracle::w(k, x, L), 1e-14);
      EXPECT_NEAR(b.gradient(k - 1, p)[0], oracle::dw(k, x, L), 1e-13);
    }
  }
}

TEST(Gram, OrthonormalAtDefaultOrder) {
  for (int dim = 1; dim <= 3; ++dim) {
    const BoxDomain dom(dim, {1.0, 1.5, 0.8});
    const std::size_t m = dim == 1 ? 40 : (dim == 2 ? 30 : 20);
    const auto b = build_basis(dom, m);
    const auto r = build_quadrature(dom, default_quadrature_order(b));
    const NodeTable tab(b, r);
    Eigen::VectorXd w(static_cast<Eigen::Index>(r.size()));
    for (std::size_t q = 0; q < r.size(); ++q) w[static_cast<Eigen::Index>(q)] = r.weights[q];
    const Eigen::MatrixXd G = tab.values * w.asDiagonal() * tab.values.transpose();
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
    for (int k = 0; k < dim; ++k) K += tab.grads[k] * w.asDiagonal() * tab.grads[k].transpose();
    const Eigen::VectorXd lam = Eigen::Map<const Eigen::VectorXd>(b.eigenvalues().data(), static_cast<Eigen::Index>(m));
    EXPECT_LT((G - Eigen::MatrixXd::Identity(G.rows(), G.cols())).cwiseAbs().maxCoeff(), 1e-12) << dim;
    EXPECT_LT((K - Eigen::MatrixXd(lam.asDiagonal())).cwiseAbs().maxCoeff() / lam.maxCoeff(), 1e-12) << dim;
  }
}

TEST(Project, Examples) {
  const BoxDomain dom(1, {1, 1, 1});
  const auto b = build_basis(dom, 6);
  const auto r = build_quadrature(dom, default_quadrature_order(b));
  std::vector<double> s(r.size());
  for (std::size_t q = 0; q < r.size(); ++q) s[q] = oracle::w(1, r.nodes[q][0]);
  Eigen::VectorXd d = project_H(s, b, r);
  EXPECT_NEAR(d[0], 1.0, 1e-12);
  EXPECT_LT(d.tail(5).cwiseAbs().maxCoeff(), 1e-12);

  std::fill(s.begin(), s.end(), 0.0);
  EXPECT_EQ(project_H(s, b, r).norm(), 0.0);

  for (std::size_t q = 0; q < r.size(); ++q) s[q] = r.nodes[q][0] * (1 - r.nodes[q][0]);
  d = project_H(s, b, r);
  const double analytic = 4 * std::sqrt(2.0) / (pi * pi * pi);
  EXPECT_NEAR(d[0], analytic, 1e-13);
  EXPECT_NEAR(d[0], 0.182442, 1e-6);
  EXPECT_NEAR(d[0], oracle::simpson([](double x) { return x * (1 - x) * oracle::w(1, x); }, 0, 1), 1e-12);
  EXPECT_NEAR(d[1], 0.0, 1e-14);

  const auto r32 = build_quadrature(dom, 32);
  std::vector<double> s32(r32.size());
  for (std::size_t q = 0; q < r32.size(); ++q) s32[q] = r32.nodes[q][0] * (1 - r32.nodes[q][0]);
  EXPECT_NEAR(project_H(s32, b, r32)[0], analytic, 1e-14);

  EXPECT_THROW(project_H(std::vector<double>(r.size() + 1), b, r), std::invalid_argument);
}

TEST(Project, RoundTrip) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> g;
  for (int dim = 1; dim <= 3; ++dim) {
    const BoxDomain dom(dim, {1.0, 0.7, 1.2});
    const auto b = build_basis(dom, 12);
    const auto r = build_quadrature(dom, default_quadrature_order(b));
    const NodeTable tab(b, r);
    Eigen::VectorXd d(12);
    for (auto& v : d) v = g(rng);
    const Eigen::VectorXd u = expand_at_nodes(d, tab);
    const Eigen::VectorXd back = project_H(std::vector<double>(u.data(), u.data() + u.size()), tab, r);
    EXPECT_LT((back - d).cwiseAbs().maxCoeff(), 1e-12) << dim;
  }
}

TEST(Norms, Examples) {
  const auto b = build_basis(BoxDomain(1, {1, 1, 1}), 2);
  Eigen::VectorXd e1(2);
  e1 << 1, 0;
  EXPECT_DOUBLE_EQ(norm_H(e1), 1.0);
  EXPECT_NEAR(norm_V(e1, b), pi, 1e-14);
  EXPECT_EQ(norm_H(Eigen::VectorXd::Zero(2)), 0.0);
  EXPECT_EQ(norm_V(Eigen::VectorXd::Zero(2), b), 0.0);
  Eigen::VectorXd ones(2);
  ones << 1, 1;
  EXPECT_NEAR(norm_V(ones, b), pi * std::sqrt(5.0), 1e-13);
  EXPECT_THROW(norm_V(Eigen::VectorXd::Zero(3), b), std::invalid_argument);
}
