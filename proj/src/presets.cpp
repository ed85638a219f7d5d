#include "semiwave/config.hpp"

namespace semiwave {

namespace {

struct PresetEntry {
  const char* name;
  const char* text;
};

// pi is written as a literal; the expression language has no constant for it.
const PresetEntry kPresets[] = {
    {"eigenmode1d", R"(# Standing wave: u = cos(pi t) sin(pi x) solves u'' - u_xx = 0.
[domain]
dim = 1
L1 = 1

[basis]
m = 4
m_list = 4

[coefficients]
rho = 1
A_s.11 = 1
alpha = 1

[initial]
u0 = sin(3.14159265358979*x)
u1 = 0

[sources]
u_exact = cos(3.14159265358979*t)*sin(3.14159265358979*x)

[time]
T = 1
dt = 0.001
integrator = midpoint
dt_list = 0.004, 0.002, 0.001
reference = exact
)"},
    {"bump1d", R"(# Wave equation from the bump x(1-x) at rest.
[domain]
dim = 1
L1 = 1

[basis]
m = 16
m_list = 8, 16
m_ref = 64

[coefficients]
rho = 1
A_s.11 = 1
alpha = 1

[initial]
u0 = x*(1-x)
u1 = 0

[sources]
u_exact = (1+t^2)*sin(3.14159265358979*x)

[time]
T = 1
dt = 0.0001
dt_list = 0.0001
dt_ref = 0.0001
)"},
    {"sec4_1d_p1", R"(# (rho u')' - (A u_x)_x + b u_x + c u + u|u| = 0 with time-dependent rho.
[domain]
dim = 1
L1 = 1

[basis]
m = 4
m_list = 2, 4
m_ref = 8

[coefficients]
rho = 1+0.5*sin(t)
rho_dt = 0.5*cos(t)
A_s.11 = 1+0.25*x
b.1 = 0.3
c = 1
alpha = 0.5

[nonlinearity]
kind = power
p = 1

[initial]
u0 = 0.1*sin(3.14159265358979*x)
u1 = 0
delta = 0.001, 0.0001

[sources]
u_exact = (1+t^2)*sin(3.14159265358979*x)

[time]
T = 1
dt = 0.001
dt_list = 0.002, 0.001
dt_ref = 0.0005
)"},
    {"sec4_2d_antisym", R"(# 2-D problem with an x-dependent antisymmetric coefficient and a
# divergence-form source g = -div(Gvec).
[domain]
dim = 2
L1 = 1
L2 = 1
grid = 9

[basis]
m = 6
m_list = 3, 6
m_ref = 10

[coefficients]
rho = 1
A_s.11 = 1
A_s.22 = 1
A_a.12 = 0.2*x
A_a.12_dx = 0.2
b.1 = 0.1
c = 0.5
alpha = 1

[nonlinearity]
kind = power
p = 1

[sources]
Gvec.1 = 0.1*t*x
Gvec.1_dt = 0.1*x
u_exact = (1+t^2)*sin(3.14159265358979*x)*sin(3.14159265358979*y)

[initial]
u0 = sin(3.14159265358979*x)*sin(3.14159265358979*y)
u1 = 0

[time]
T = 0.5
dt = 0.005
dt_list = 0.01, 0.005
dt_ref = 0.0025
)"},
    {"nonlipschitz_sqrt", R"(# Continuous, non-Lipschitz F(z) = sign(z) sqrt|z|, integrated through
# its piecewise-linear approximant F_k.
[domain]
dim = 1
L1 = 1

[basis]
m = 8
m_list = 4, 8
m_ref = 16

[coefficients]
rho = 1
A_s.11 = 1
alpha = 1

[nonlinearity]
kind = expr
F = sign(x)*sqrt(abs(x))

[approx]
k = 256

[initial]
u0 = sin(3.14159265358979*x)
u1 = 0

[sources]
u_exact = (1+t^2)*sin(3.14159265358979*x)

[time]
T = 1
dt = 0.001
dt_list = 0.002, 0.001
dt_ref = 0.0005
)"},
};

}  // namespace

const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n;
    for (const auto& p : kPresets) n.emplace_back(p.name);
    return n;
  }();
  return names;
}

std::string preset_text(const std::string& name) {
  for (const auto& p : kPresets)
    if (name == p.name) return p.text;
  std::string known;
  for (const auto& p : kPresets) known += std::string(known.empty() ? "" : ", ") + p.name;
  throw ConfigError("unknown preset '" + name + "' (known: " + known + ")");
}

Config preset(const std::string& name) { return parse_config(preset_text(name), "preset:" + name); }

}  // namespace semiwave
