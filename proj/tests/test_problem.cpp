#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "semiwave/basis.hpp"
#include "semiwave/problem.hpp"

using namespace semiwave;
using oracle::field;

namespace {

Nonlinearity expr_F(const char* text, std::optional<double> lip = {}) {
  return Nonlinearity::expression(parse(text, VarPolicy{1, false}), lip);
}

bool has_failure_containing(const ValidationReport& r, const std::string& needle) {
  for (const auto& f : r.failures)
    if (f.find(needle) != std::string::npos) return true;
  return false;
}

}  // namespace

TEST(Validate, PassingUnitProblem) {
  ProblemSpec s = oracle::unit_spec(1);
  s.nonlinearity = Nonlinearity::power(1.0);
  const auto r = validate(s);
  EXPECT_TRUE(r.passed) << r.to_text();
  EXPECT_DOUBLE_EQ(r.min_rho, 1.0);
  EXPECT_NEAR(r.min_As_eig, 1.0, 1e-14);
  EXPECT_EQ(r.sign_violations, 0);
  EXPECT_EQ(r.regime, "local");
}

TEST(Validate, RhoBelowAlpha) {
  ProblemSpec s = oracle::unit_spec(1);
  s.coefficients.rho = field("0.5 - t");
  s.alpha = 0.25;
  const auto r = validate(s);
  EXPECT_FALSE(r.passed);
  EXPECT_LT(r.min_rho, 0.25);
  EXPECT_NEAR(r.min_rho, -0.5, 1e-12);  // sampled down to t = T
  EXPECT_TRUE(has_failure_containing(r, "rho"));
  // the value at t = 0.9 lies among the samples of a finer time grid
  const auto fine = validate(s, 17, 41);
  EXPECT_FALSE(fine.passed);
}

TEST(Validate, SignConditionFailure) {
  ProblemSpec s = oracle::unit_spec(1);
  s.nonlinearity = expr_F("x^3 - x");
  const auto r = validate(s);
  EXPECT_FALSE(r.passed);
  EXPECT_GT(r.sign_violations, 0);
  EXPECT_GT(r.first_sign_violation, -1.0);
  EXPECT_LT(r.first_sign_violation, 1.0);
  EXPECT_NEAR(0.5 * s.nonlinearity.F(0.5), -0.1875, 1e-15);
}

TEST(Validate, BoundaryAndFieldErrors) {
  ProblemSpec s = oracle::unit_spec(1);
  s.initial.u0 = field("1 + x", 1, false);
  auto r = validate(s);
  EXPECT_FALSE(r.passed);
  EXPECT_GT(r.boundary_violations, 0);

  s = oracle::unit_spec(1);
  s.sources.f = field("log(x)");
  r = validate(s);  // reported, not thrown
  EXPECT_FALSE(r.passed);
  ASSERT_EQ(r.field_errors.size(), 1u);
  EXPECT_EQ(r.field_errors[0].first, "sources.f");

  EXPECT_THROW(validate(s, 4, 33), std::invalid_argument);
  EXPECT_THROW(validate(s, 17, 8), std::invalid_argument);
}

TEST(Validate, AnisotropicEigenvalue) {
  ProblemSpec s = oracle::unit_spec(2);
  s.coefficients.As_upper[0][0] = field("2", 2);
  s.coefficients.As_upper[1][1] = field("2", 2);
  s.coefficients.As_upper[0][1] = field("1", 2);
  s.alpha = 1.0;
  const auto r = validate(s);
  EXPECT_NEAR(r.min_As_eig, 1.0, 1e-12);
  EXPECT_TRUE(r.passed) << r.to_text();
}

TEST(LipschitzApprox, Examples) {
  const auto F4 = lipschitz_approx(expr_F("sign(x)*sqrt(abs(x))"), 4);
  EXPECT_NEAR(F4.F(0.125), 0.25, 1e-15);
  EXPECT_NEAR(F4.F(0.25), 0.5, 1e-15);

  const auto lin = lipschitz_approx(expr_F("x"), 3);
  EXPECT_NEAR(lin.F(0.5), 0.5, 1e-15);
  EXPECT_NEAR(lin.F(2.9), 2.9, 1e-14);
  EXPECT_DOUBLE_EQ(lin.F(10.0), 3.0);
  EXPECT_DOUBLE_EQ(lin.F(-10.0), -3.0);
  ASSERT_TRUE(lin.lipschitz().has_value());
  EXPECT_NEAR(*lin.lipschitz(), 1.0, 1e-12);

  const auto cube = lipschitz_approx(expr_F("x^3"), 2);
  EXPECT_DOUBLE_EQ(cube.F(1.3), -cube.F(-1.3));
  EXPECT_THROW(lipschitz_approx(expr_F("x + 1"), 2), std::invalid_argument);
  EXPECT_THROW(lipschitz_approx(expr_F("x"), 0), std::invalid_argument);
}

TEST(LipschitzApprox, SignConditionAndRecordedConstant) {
  std::mt19937_64 rng(3);
  for (int k : {1, 2, 4, 8, 16}) {
    for (const char* text : {"sign(x)*sqrt(abs(x))", "x^3", "x*abs(x)", "tanh(5*x)"}) {
      const auto Fk = lipschitz_approx(expr_F(text), k);
      for (int i = 0; i <= 4000; ++i) {
        const double z = -2.0 * k + 4.0 * k * i / 4000.0;
        EXPECT_GE(z * Fk.F(z), 0.0) << text << " k=" << k << " z=" << z;
      }
      ASSERT_TRUE(Fk.lipschitz().has_value());
      const double L = *Fk.lipschitz();
      std::uniform_real_distribution<double> u(-1.5 * k, 1.5 * k);
      for (int i = 0; i < 500; ++i) {
        const double a = u(rng), b = u(rng);
        EXPECT_LE(std::fabs(Fk.F(a) - Fk.F(b)), L * std::fabs(a - b) * (1 + 1e-12) + 1e-15);
      }
    }
  }
}

TEST(LipschitzApprox, UniformErrorDecreases) {
  const auto F = expr_F("sign(x)*sqrt(abs(x))");
  double prev = 1e300;
  for (int k = 2; k <= 1024; k *= 2) {
    const auto Fk = lipschitz_approx(F, k);
    double err = 0.0;
    for (int i = 0; i <= 40000; ++i) {
      const double z = -2.0 + 4.0 * i / 40000.0;
      err = std::max(err, std::fabs(Fk.F(z) - std::copysign(std::sqrt(std::fabs(z)), z)));
    }
    EXPECT_LE(err, prev * (1 + 1e-12)) << k;
    prev = err;
    if (k == 1024) {
      EXPECT_LT(err, 0.05);
    }
  }
}

TEST(Truncate, Examples) {
  EXPECT_EQ(truncate(3.0, 2.0), 2.0);
  EXPECT_EQ(truncate(-5.0, 2.0), -2.0);
  EXPECT_EQ(truncate(1.0, 2.0), 1.0);
  const std::vector<double> s{-1.0, 0.0, 0.5};
  for (double j : {0.25, 1.0, 3.0}) {
    const auto c = truncate(s, j);
    for (std::size_t i = 0; i < s.size(); ++i) {
      EXPECT_GE(c[i] * s[i], 0.0);
      EXPECT_LE(std::fabs(c[i]), std::fabs(s[i]));
    }
  }
  EXPECT_EQ(truncate(s, 1.0), s);  // j >= max|u0|
  EXPECT_THROW(truncate(s, 0.0), std::invalid_argument);
}

TEST(Truncate, NormDominance) {
  const BoxDomain dom(2, {1, 1, 1});
  const auto b = build_basis(dom, 10);
  const auto r = build_quadrature(dom, default_quadrature_order(b));
  const auto u0 = parse("5*sin(3.14159265358979*x)*sin(6.28318530717959*y)", VarPolicy{2, false});
  std::vector<double> s(r.size());
  for (std::size_t q = 0; q < r.size(); ++q) {
    Env env;
    env.set(Var::x, r.nodes[q][0]).set(Var::y, r.nodes[q][1]);
    s[q] = u0.eval(env);
  }
  auto l2 = [&](const std::vector<double>& v) {
    double a = 0.0;
    for (std::size_t q = 0; q < v.size(); ++q) a += r.weights[q] * v[q] * v[q];
    return std::sqrt(a);
  };
  for (double j : {0.5, 1.0, 2.0, 4.0, 10.0}) EXPECT_LE(l2(truncate(s, j)), l2(s));
}

TEST(PrimitiveG, Examples) {
  EXPECT_NEAR(primitive_G(Nonlinearity::power(1.0))(2.0), 8.0 / 3.0, 1e-14);
  EXPECT_NEAR(primitive_G(expr_F("x^3"))(1.5), 1.265625, 1e-10);
  for (const auto& F : {Nonlinearity(), Nonlinearity::power(2.5), expr_F("x^3"), expr_F("sign(x)*sqrt(abs(x))")})
    EXPECT_EQ(primitive_G(F)(0.0), 0.0);
}

TEST(PrimitiveG, MatchesClosedForms) {
  for (double p : {0.5, 1.0, 2.0, 3.7}) {
    const auto G = primitive_G(Nonlinearity::power(p));
    for (double z : {-3.0, -0.7, 0.1, 1.0, 2.5}) {
      const double exact = std::pow(std::fabs(z), p + 2) / (p + 2);
      EXPECT_NEAR(G(z), exact, 1e-9 * exact) << p << ' ' << z;
    }
  }
  const auto Gs = primitive_G(expr_F("sign(x)*sqrt(abs(x))"));
  const auto Gc = primitive_G(expr_F("x^3"));
  const auto Gt = primitive_G(expr_F("x*abs(x)"));
  for (double z : {-4.0, -1e-3, 1e-6, 0.3, 1.0, 7.5}) {
    const double s = 2.0 / 3.0 * std::pow(std::fabs(z), 1.5);
    EXPECT_NEAR(Gs(z), s, 1e-9 * s) << z;
    const double c = std::pow(z, 4) / 4;
    EXPECT_NEAR(Gc(z), c, 1e-9 * c) << z;
    const double t = std::pow(std::fabs(z), 3) / 3;
    EXPECT_NEAR(Gt(z), t, 1e-9 * t) << z;
  }
}

TEST(Nonlinearity, TabulatedPrimitiveIsExactForPiecewiseLinear) {
  const auto T = Nonlinearity::tabulated({-1.0, 0.0, 0.5, 2.0}, {-2.0, 0.0, 1.0, 1.0});
  EXPECT_NEAR(T.F(0.25), 0.5, 1e-15);
  EXPECT_NEAR(T.F(5.0), 1.0, 1e-15);
  EXPECT_NEAR(T.G(0.5), 0.25, 1e-15);
  EXPECT_NEAR(T.G(2.0), 0.25 + 1.5, 1e-15);
  EXPECT_NEAR(T.G(3.0), 0.25 + 2.5, 1e-15);
  EXPECT_NEAR(T.G(-1.0), 1.0, 1e-15);
  ASSERT_TRUE(T.lipschitz().has_value());
  EXPECT_NEAR(*T.lipschitz(), 2.0, 1e-15);
}

TEST(Nonlinearity, LipschitzKinds) {
  EXPECT_EQ(*Nonlinearity().lipschitz(), 0.0);
  EXPECT_FALSE(Nonlinearity::power(1.0).lipschitz().has_value());
  EXPECT_TRUE(Nonlinearity::power(1.0).locally_lipschitz());
  EXPECT_FALSE(expr_F("sign(x)*sqrt(abs(x))").locally_lipschitz());
  EXPECT_TRUE(expr_F("x", 1.0).locally_lipschitz());
  // z|z| has local constant 2r on [-r, r]
  EXPECT_NEAR(Nonlinearity::power(1.0).local_lipschitz(3.0), 6.0, 0.05);
}
