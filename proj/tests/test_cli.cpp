#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "semiwave/commands.hpp"
#include "semiwave/config.hpp"

using namespace semiwave;
namespace fs = std::filesystem;

namespace {

const char* kMinimal = R"cfg(# minimal linear problem
[domain]
dim = 1
L1 = 1

[basis]
m = 4

[coefficients]
rho = "1"
A_s.11 = "1"

[initial]
u0 = "sin(3.14159265358979*x)"
u1 = "0"

[time]
T = 1
dt = 0.001
)cfg";

fs::path scratch(const std::string& name) {
  const char* env = std::getenv("SEMIWAVE_TEST_TMP");
  const fs::path root = env ? fs::path(env) : fs::temp_directory_path() / "semiwave-tests";
  const fs::path dir = root / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

struct RunResult {
  int code;
  std::string out, err;
};

RunResult run_in(const std::string& sub, const Config& cfg, const fs::path& dir, Flags flags = {}) {
  flags.out = dir.string();
  std::ostringstream out, err;
  const int code = run(sub, cfg, flags, out, err);
  return {code, out.str(), err.str()};
}

std::string config_error(const std::string& text) {
  try {
    parse_config(text, "cfg");
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Config, MinimalLoadsValidatesSolves) {
  const Config cfg = parse_config(kMinimal, "minimal.cfg");
  EXPECT_EQ(*cfg.get("coefficients", "rho"), "1");
  EXPECT_EQ(*cfg.get("time", "dt"), "0.001");
  EXPECT_FALSE(cfg.has("time", "integrator"));
  const auto dir = scratch("minimal");
  EXPECT_EQ(run_in("validate", cfg, dir / "v").code, 0);
  const auto r = run_in("solve", cfg, dir / "s");
  EXPECT_EQ(r.code, 0) << r.out << r.err;
  EXPECT_TRUE(fs::exists(dir / "s" / "trajectory.csv"));
  EXPECT_TRUE(fs::exists(dir / "s" / "manifest.txt"));
}

TEST(Config, FileRoundTrip) {
  const auto dir = scratch("file");
  const auto path = dir / "eigen.cfg";
  std::ofstream(path) << kMinimal;
  const Config cfg = load_config(path.string());
  EXPECT_EQ(cfg.text, kMinimal);
  EXPECT_EQ(resolve_config(path.string()).text, kMinimal);
  EXPECT_THROW(load_config((dir / "missing.cfg").string()), ConfigError);
}

TEST(Config, Errors) {
  EXPECT_NE(config_error("[domain]\ndim = 1\ndim = 2\n").find("cfg:3"), std::string::npos);
  EXPECT_NE(config_error("[domian]\n").find("cfg:1"), std::string::npos);
  EXPECT_NE(config_error("[domain]\nwidth = 3\n").find("width"), std::string::npos);
  EXPECT_NE(config_error("dim = 1\n").find("cfg:1"), std::string::npos);
  EXPECT_NE(config_error("[domain]\njust words\n").find("cfg:2"), std::string::npos);
  EXPECT_EQ(config_error("# only a comment\n\n[domain]\ndim = 1 # trailing\n"), "");

  Config cfg = parse_config(kMinimal);
  cfg.sections["time"].erase("dt");
  try {
    check_required(cfg, "solve");
    ADD_FAILURE() << "missing dt accepted";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("time.dt"), std::string::npos);
  }
  const auto r = run_in("solve", cfg, scratch("missing-dt"));
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.out.find("[failure]"), std::string::npos);
  EXPECT_NE(r.out.find("time.dt"), std::string::npos);

  Config no_exact = parse_config(kMinimal);
  EXPECT_THROW(check_required(no_exact, "mms"), ConfigError);

  Config bad_expr = parse_config(kMinimal);
  bad_expr.set("coefficients", "rho", "1 +");
  try {
    build_spec(bad_expr);
    ADD_FAILURE();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("coefficients.rho"), std::string::npos);
  }
}

TEST(Config, PowerNonlinearity) {
  Config cfg = parse_config(kMinimal);
  cfg.set("nonlinearity", "kind", "power");
  cfg.set("nonlinearity", "p", "1");
  const auto spec = build_spec(cfg);
  EXPECT_EQ(spec.nonlinearity.kind(), NonlinearityKind::power);
  EXPECT_DOUBLE_EQ(spec.nonlinearity.F(-2.0), -4.0);  // u|u|
}

TEST(Config, Lists) {
  EXPECT_EQ(parse_real_list("1e-2, 5e-3"), (std::vector<double>{1e-2, 5e-3}));
  EXPECT_EQ(parse_size_list("4,8,16"), (std::vector<std::size_t>{4, 8, 16}));
  EXPECT_THROW(parse_size_list("4,x"), ConfigError);
  EXPECT_THROW(parse_real_list(""), ConfigError);
  EXPECT_EQ(fnv1a_hex(""), "cbf29ce484222325");
  EXPECT_EQ(fnv1a_hex("a"), "af63dc4c8601ec8c");
}

TEST(Presets, CatalogAndExamples) {
  EXPECT_EQ(preset_names(), (std::vector<std::string>{"eigenmode1d", "bump1d", "sec4_1d_p1", "sec4_2d_antisym",
                                                      "nonlipschitz_sqrt"}));
  EXPECT_THROW(preset("nope"), ConfigError);
  for (const auto& name : preset_names()) {
    const Config cfg = preset(name);
    EXPECT_NO_THROW(check_required(cfg, "mms")) << name;
    EXPECT_EQ(resolve_config("preset:" + name).text, cfg.text);
    EXPECT_EQ(resolve_config(name).text, cfg.text);
    EXPECT_TRUE(validate(build_spec(cfg)).passed) << name;
  }
}

TEST(Presets, EigenmodeEndsAtMinusOne) {
  const auto dir = scratch("eigen-solve");
  ASSERT_EQ(run_in("solve", preset("eigenmode1d"), dir).code, 0);
  std::istringstream csv(slurp(dir / "trajectory.csv"));
  std::string line, last;
  while (std::getline(csv, line))
    if (!line.empty()) last = line;
  std::istringstream row(last);
  std::string t, d1;
  std::getline(row, t, ',');
  std::getline(row, d1, ',');
  EXPECT_DOUBLE_EQ(std::stod(t), 1.0);
  // d_1(0) = (sin(pi x), w_1) = 1/sqrt(2)
  EXPECT_NEAR(std::stod(d1) / std::sqrt(0.5), -1.0, 1e-5);
}

TEST(Presets, NonLipschitzNeedsApproximation) {
  Config cfg = preset("nonlipschitz_sqrt");
  cfg.sections["approx"].erase("k");
  const auto r = run_in("solve", cfg, scratch("sqrt-refused"));
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.out.find("Lipschitz"), std::string::npos) << r.out;

  Flags flags;
  flags.k = 64;
  EXPECT_EQ(run_in("solve", cfg, scratch("sqrt-k"), flags).code, 0);
}

TEST(Csv, TrajectoryFormat) {
  const auto dir = scratch("csv");
  ASSERT_EQ(run_in("solve", preset("eigenmode1d"), dir).code, 0);
  const std::string text = slurp(dir / "trajectory.csv");
  EXPECT_EQ(text.find('\r'), std::string::npos);
  EXPECT_EQ(text.substr(0, text.find('\n')), "t,d1,d2,d3,d4,e1,e2,e3,e4");
  EXPECT_EQ(text.back(), '\n');
  EXPECT_EQ(format_real(0.1), "0.10000000000000001");
  EXPECT_EQ(format_real(-2.0), "-2");

  // every field parses back to the exact double that was written
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  int rows = 0;
  while (std::getline(in, line)) {
    std::istringstream row(line);
    std::string field;
    int cols = 0;
    while (std::getline(row, field, ',')) {
      const double v = std::strtod(field.c_str(), nullptr);
      EXPECT_EQ(format_real(v), field);
      ++cols;
    }
    EXPECT_EQ(cols, 9);
    ++rows;
  }
  EXPECT_EQ(rows, 1001);
}

TEST(Csv, AtomicWrite) {
  const auto dir = scratch("atomic");
  const auto path = (dir / "x.txt").string();
  write_file_atomic(path, "one\n");
  write_file_atomic(path, "two\n");
  EXPECT_EQ(slurp(path), "two\n");
  EXPECT_FALSE(fs::exists(path + ".tmp"));
}

TEST(Commands, ConvergeCartesianProduct) {
  Flags flags;
  flags.m = std::vector<std::size_t>{4, 8, 16};
  flags.dt = std::vector<double>{1e-2, 5e-3};
  const auto dir = scratch("converge");
  const auto r = run_in("converge", preset("eigenmode1d"), dir, flags);
  EXPECT_EQ(r.code, 0) << r.out;
  std::istringstream in(slurp(dir / "converge.csv"));
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "m,dt,err_H,err_V");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 6);
}

TEST(Commands, EnergyReportMargins) {
  const auto dir = scratch("energy");
  ASSERT_EQ(run_in("energy", preset("eigenmode1d"), dir).code, 0);
  std::istringstream in(slurp(dir / "bound.csv"));
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "t,phi,int_phi,f_H,g_dt_Vp,data,bound,energy,margin");
  while (std::getline(in, line)) {
    std::vector<double> v;
    std::istringstream row(line);
    std::string f;
    while (std::getline(row, f, ',')) v.push_back(std::stod(f));
    ASSERT_EQ(v.size(), 9u);
    EXPECT_GE(v[8], -1e-8 * (1 + v[6]));
  }
}

TEST(Commands, UnknownSubcommand) {
  const auto r = run_in("frobnicate", preset("eigenmode1d"), scratch("unknown"));
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.out.find("[failure]"), std::string::npos);
}

TEST(Commands, EverySubcommandOnEveryPreset) {
  for (const auto& name : preset_names())
    for (const auto& sub : subcommand_names()) {
      const auto dir = scratch("all-" + name + "-" + sub);
      const auto r = run_in(sub, preset(name), dir);
      EXPECT_EQ(r.code, 0) << name << ' ' << sub << '\n' << r.out;
      const std::string manifest = slurp(dir / "manifest.txt");
      EXPECT_NE(manifest.find("status = pass"), std::string::npos) << name << ' ' << sub;
      EXPECT_NE(manifest.find("config_hash = " + fnv1a_hex(preset(name).text)), std::string::npos);
    }
}

TEST(Commands, ReproducibleAcrossThreadCounts) {
  for (const auto& name : preset_names())
    for (const std::string sub : {"solve", "energy", "converge", "unique"}) {
      Flags one, four;
      one.threads = 1;
      four.threads = 4;
      const auto a = scratch("repro-a-" + name + sub), b = scratch("repro-b-" + name + sub);
      ASSERT_EQ(run_in(sub, preset(name), a, one).code, 0);
      ASSERT_EQ(run_in(sub, preset(name), b, four).code, 0);
      int files = 0;
      for (const auto& entry : fs::directory_iterator(a)) {
        const auto other = b / entry.path().filename();
        ASSERT_TRUE(fs::exists(other)) << other;
        EXPECT_EQ(slurp(entry.path()), slurp(other)) << name << ' ' << sub << ' ' << entry.path().filename();
        ++files;
      }
      EXPECT_GE(files, 2);
    }
}
