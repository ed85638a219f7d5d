#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "semiwave/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Spectral Galerkin solver for semilinear wave equations with time-dependent coefficients"};
  app.require_subcommand(1);

  semiwave::Flags flags;
  std::string config_ref, m_text, dt_text, delta_text;
  int status = 0;

  for (const auto& name : semiwave::subcommand_names()) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("config", config_ref, "config file, or preset:NAME")->required();
    sub->add_option("--m", m_text, "comma-separated basis sizes");
    sub->add_option("--dt", dt_text, "comma-separated time steps");
    sub->add_option("--delta", delta_text, "comma-separated perturbation sizes (unique)");
    sub->add_option("--out", flags.out, "output directory");
    sub->add_option("--k", flags.k, "Lipschitz-approximation index");
    sub->add_option("--j", flags.j, "truncation level for u0");
    sub->add_option("--integrator", flags.integrator, "midpoint or rk4");
    sub->add_option("--threads", flags.threads, "worker threads for converge")->check(CLI::PositiveNumber);
    sub->callback([&, name] {
      try {
        if (!m_text.empty()) flags.m = semiwave::parse_size_list(m_text);
        if (!dt_text.empty()) flags.dt = semiwave::parse_real_list(dt_text);
        if (!delta_text.empty()) flags.delta = semiwave::parse_real_list(delta_text);
        const auto cfg = semiwave::resolve_config(config_ref);
        status = semiwave::run(name, cfg, flags, std::cout, std::cerr);
      } catch (const std::exception& e) {
        std::cout << "[failure]\nkind = config\nmessage = " << e.what() << '\n';
        status = 2;
      }
    });
  }

  std::string preset_name;
  auto* show = app.add_subcommand("show-preset", "print a built-in config");
  show->add_option("name", preset_name)->required();
  show->callback([&] {
    try {
      std::cout << semiwave::preset_text(preset_name);
    } catch (const std::exception& e) {
      std::cout << "[failure]\nkind = config\nmessage = " << e.what() << '\n';
      status = 2;
    }
  });
  app.add_subcommand("list-presets", "print the names of the built-in configs")->callback([] {
    for (const auto& n : semiwave::preset_names()) std::cout << n << '\n';
  });

  CLI11_PARSE(app, argc, argv);
  return status;
}
