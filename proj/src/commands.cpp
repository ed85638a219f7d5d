#include "semiwave/commands.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

namespace semiwave {

namespace {

constexpr const char* kVersion = "0.1.0";

struct Manifest {
  std::vector<std::pair<std::string, std::string>> lines;
  std::vector<std::pair<std::string, bool>> checks;

  void add(const std::string& key, const std::string& value) { lines.emplace_back(key, value); }
  void check(const std::string& name, bool ok) { checks.emplace_back(name, ok); }
  bool passed() const {
    for (const auto& c : checks)
      if (!c.second) return false;
    return true;
  }
  std::string text() const {
    std::ostringstream os;
    for (const auto& [k, v] : lines) os << k << " = " << v << '\n';
    for (const auto& [k, ok] : checks) os << "check." << k << " = " << (ok ? "pass" : "fail") << '\n';
    os << "status = " << (passed() ? "pass" : "fail") << '\n';
    return os.str();
  }
};

std::string join_reals(const std::vector<double>& v) {
  std::string s;
  for (double x : v) s += (s.empty() ? "" : ",") + format_real(x);
  return s;
}

std::string join_sizes(const std::vector<std::size_t>& v) {
  std::string s;
  for (auto x : v) s += (s.empty() ? "" : ",") + std::to_string(x);
  return s;
}

void describe_solve(Manifest& mf, const RunSettings& rs, const Trajectory* traj) {
  mf.add("integrator", to_string(rs.solve.integrator));
  mf.add("newton_tol", format_real(rs.solve.newton_tol));
  mf.add("approx_k", rs.approx_k ? std::to_string(*rs.approx_k) : "none");
  mf.add("truncation", rs.truncation ? format_real(*rs.truncation) : "none");
  if (!traj) return;
  mf.add("m", std::to_string(rs.m));
  mf.add("dt", format_real(rs.solve.dt));
  mf.add("steps", std::to_string(traj->steps));
  mf.add("samples", std::to_string(traj->states.size()));
  mf.add("newton_iterations", std::to_string(traj->newton_iterations));
  mf.add("newton_max_iterations", std::to_string(traj->newton_max_iterations));
  if (!traj->complete) mf.add("failure", traj->failure);
}

StudyOptions study_options(const RunSettings& rs) {
  StudyOptions so;
  so.solve = rs.solve;
  so.quad_order = rs.quad_order;
  so.approx_k = rs.approx_k;
  so.truncation = rs.truncation;
  so.threads = rs.threads;
  return so;
}

void print_failure(std::ostream& out, const std::string& kind, const std::string& message) {
  out << "[failure]\nkind = " << kind << "\nmessage = " << message << '\n';
}

}  // namespace

const std::vector<std::string>& subcommand_names() {
  static const std::vector<std::string> names = {"validate", "solve", "energy", "converge", "mms", "unique"};
  return names;
}

std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_file_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write '" + tmp + "'");
    f << content;
    if (!f) throw std::runtime_error("write to '" + tmp + "' failed");
  }
  std::filesystem::rename(tmp, path);
}

std::string trajectory_csv(const Trajectory& traj) {
  std::string s = "t";
  const auto m = traj.states.empty() ? 0 : traj.states.front().d.size();
  for (Eigen::Index j = 1; j <= m; ++j) s += ",d" + std::to_string(j);
  for (Eigen::Index j = 1; j <= m; ++j) s += ",e" + std::to_string(j);
  s += '\n';
  for (const auto& st : traj.states) {
    s += format_real(st.t);
    for (Eigen::Index j = 0; j < m; ++j) s += ',' + format_real(st.d[j]);
    for (Eigen::Index j = 0; j < m; ++j) s += ',' + format_real(st.e[j]);
    s += '\n';
  }
  return s;
}

Config resolve_config(const std::string& ref) {
  if (ref.rfind("preset:", 0) == 0) return preset(ref.substr(7));
  if (std::filesystem::exists(ref)) return load_config(ref);
  for (const auto& name : preset_names())
    if (name == ref) return preset(ref);
  throw ConfigError("cannot read config file '" + ref + "' and no preset has that name");
}

int run(const std::string& subcommand, const Config& cfg, const Flags& flags, std::ostream& out,
        std::ostream& err) {
  const auto start = std::chrono::steady_clock::now();
  bool known = false;
  for (const auto& s : subcommand_names()) known = known || s == subcommand;
  if (!known) {
    print_failure(out, "usage", "unknown subcommand '" + subcommand + "'");
    return 2;
  }

  ProblemSpec spec;
  RunSettings rs;
  try {
    check_required(cfg, subcommand);
    spec = build_spec(cfg);
    rs = build_settings(cfg);
    if (flags.m) {
      rs.m_list = *flags.m;
      rs.m = flags.m->front();
    }
    if (flags.dt) {
      rs.dt_list = *flags.dt;
      rs.solve.dt = flags.dt->front();
    }
    if (flags.out) rs.out_dir = *flags.out;
    if (flags.k) {
      if (*flags.k < 1) throw ConfigError("--k must be positive");
      rs.approx_k = *flags.k;
    }
    if (flags.j) {
      if (!(*flags.j > 0.0)) throw ConfigError("--j must be positive");
      rs.truncation = *flags.j;
    }
    spec.initial.truncation = rs.truncation;
    if (flags.delta) rs.deltas = *flags.delta;
    if (flags.integrator) rs.solve.integrator = integrator_from_string(*flags.integrator);
    rs.threads = std::max(1, flags.threads);
  } catch (const std::exception& e) {
    print_failure(out, "config", e.what());
    return 2;
  }

  Manifest mf;
  mf.add("tool", "semiwave");
  mf.add("version", kVersion);
  mf.add("subcommand", subcommand);
  mf.add("config", cfg.name);
  mf.add("config_hash", fnv1a_hex(cfg.text));
  mf.add("alpha", format_real(spec.alpha));

  const std::filesystem::path dir(rs.out_dir);
  auto path = [&](const char* file) { return (dir / file).string(); };

  try {
    std::filesystem::create_directories(dir);
    if (subcommand == "validate") {
      const ValidationReport rep = validate(spec);
      const std::string text = rep.to_text();
      out << text;
      write_file_atomic(path("validate.txt"), text);
      mf.check("validation", rep.passed);
    } else if (subcommand == "solve" || subcommand == "energy") {
      GalerkinSystem sys(spec, rs.m, rs.quad_order, rs.approx_k);
      Trajectory traj = solve(sys, rs.solve, rs.truncation);
      describe_solve(mf, rs, &traj);
      mf.check("trajectory_complete", traj.complete);
      if (subcommand == "solve") {
        write_file_atomic(path("trajectory.csv"), trajectory_csv(traj));
        out << "samples = " << traj.states.size() << "\nsteps = " << traj.steps << '\n';
      } else {
        fill_energies(sys, traj, true, true);
        std::string e = "t,kinetic,potential,gpart,total,second\n";
        for (const auto& r : traj.energies)
          e += format_real(r.t) + ',' + format_real(r.kinetic) + ',' + format_real(r.potential) + ',' +
               format_real(r.gpart) + ',' + format_real(r.total) + ',' + format_real(r.second.value_or(0.0)) + '\n';
        write_file_atomic(path("energy.csv"), e);

        const BoundReport rep = gronwall_check(sys, traj);
        std::string b = "t,phi,int_phi,f_H,g_dt_Vp,data,bound,energy,margin\n";
        for (const auto& s : rep.samples)
          b += format_real(s.t) + ',' + format_real(s.phi) + ',' + format_real(s.int_phi) + ',' +
               format_real(s.f_H) + ',' + format_real(s.g_dt_Vp) + ',' + format_real(s.data) + ',' +
               format_real(s.bound) + ',' + format_real(s.energy) + ',' + format_real(s.margin) + '\n';
        write_file_atomic(path("bound.csv"), b);
        write_file_atomic(path("bound.txt"), rep.to_text());

        const auto res = residual_check(sys, traj);
        std::string r = "t,max_abs\n";
        double worst = 0.0;
        for (const auto& s : res) {
          r += format_real(s.t) + ',' + format_real(s.max_abs) + '\n';
          worst = std::max(worst, s.max_abs);
        }
        write_file_atomic(path("residual.csv"), r);
        mf.add("max_residual", format_real(worst));
        mf.add("lipschitz_in_use", format_real(rep.lip));
        mf.add("worst_relative_margin", format_real(rep.worst_margin));
        mf.check("gronwall_bound", rep.passed);
        out << rep.to_text();
      }
    } else if (subcommand == "converge") {
      ConvergenceReference ref;
      if (rs.exact_reference) {
        ref.exact = rs.u_exact;
        ref.m = rs.m_ref.value_or(rs.m_list.back());
      } else {
        ref.m = rs.m_ref.value_or(2 * rs.m_list.back());
        ref.dt = rs.dt_ref.value_or(*std::min_element(rs.dt_list.begin(), rs.dt_list.end()) / 2.0);
      }
      describe_solve(mf, rs, nullptr);
      mf.add("m_list", join_sizes(rs.m_list));
      mf.add("dt_list", join_reals(rs.dt_list));
      mf.add("reference", rs.exact_reference ? "exact" : "computed");
      mf.add("m_ref", std::to_string(std::max(ref.m, rs.m_list.back())));
      if (!rs.exact_reference) mf.add("dt_ref", format_real(ref.dt));
      const auto rows = convergence_study(spec, rs.m_list, rs.dt_list, ref, study_options(rs));
      std::string c = "m,dt,err_H,err_V\n";
      bool complete = true;
      for (const auto& row : rows) {
        c += std::to_string(row.m) + ',' + format_real(row.dt) + ',' + format_real(row.err_H) + ',' +
             format_real(row.err_V) + '\n';
        complete = complete && row.complete;
      }
      write_file_atomic(path("converge.csv"), c);
      out << c;
      mf.check("runs_complete", complete);
    } else if (subcommand == "mms") {
      const MmsResult res = mms_run(spec, *rs.u_exact, rs.m, study_options(rs));
      describe_solve(mf, rs, &res.trajectory);
      std::string c = "t,err_H,err_V\n";
      for (std::size_t i = 0; i < res.t.size(); ++i)
        c += format_real(res.t[i]) + ',' + format_real(res.err_H[i]) + ',' + format_real(res.err_V[i]) + '\n';
      write_file_atomic(path("mms.csv"), c);
      mf.add("max_err_H", format_real(res.max_err_H));
      mf.add("max_err_V", format_real(res.max_err_V));
      mf.check("trajectory_complete", res.trajectory.complete);
      out << "max_err_H = " << format_real(res.max_err_H) << "\nmax_err_V = " << format_real(res.max_err_V) << '\n';
    } else if (subcommand == "unique") {
      describe_solve(mf, rs, nullptr);
      mf.add("m", std::to_string(rs.m));
      mf.add("dt", format_real(rs.solve.dt));
      std::string c = "delta,t,diff_H\n";
      bool complete = true;
      for (std::size_t i = 0; i < rs.deltas.size(); ++i) {
        const double delta = rs.deltas[i];
        const auto res = uniqueness_probe(spec, delta, rs.m, study_options(rs));
        for (std::size_t k = 0; k < res.t.size(); ++k)
          c += format_real(delta) + ',' + format_real(res.t[k]) + ',' + format_real(res.diff_H[k]) + '\n';
        complete = complete && res.complete;
        const std::string key = "ratio." + std::to_string(i + 1);
        mf.add(key, format_real(delta) + " " + format_real(res.ratio));
        if (i == 0) mf.add("theorem_applies", res.theorem_applies ? "true" : "false");
        out << "delta = " << format_real(delta) << "  ratio = " << format_real(res.ratio) << '\n';
      }
      write_file_atomic(path("unique.csv"), c);
      mf.check("runs_complete", complete);
    }
  } catch (const std::exception& e) {
    mf.add("error", e.what());
    mf.check("run", false);
    try {
      write_file_atomic(path("manifest.txt"), mf.text());
    } catch (const std::exception&) {
    }
    print_failure(out, "run", e.what());
    return 2;
  }

  write_file_atomic(path("manifest.txt"), mf.text());
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  err << "wall_time_s = " << wall << '\n';
  if (!mf.passed()) {
    std::string failed;
    for (const auto& [name, ok] : mf.checks)
      if (!ok) failed += (failed.empty() ? "" : ",") + name;
    print_failure(out, "check", failed);
    return 1;
  }
  return 0;
}

}  // namespace semiwave
