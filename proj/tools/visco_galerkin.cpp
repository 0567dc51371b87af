#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "visco/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Regularized Galerkin solver for generalized Newtonian flow on the periodic torus"};
  app.require_subcommand(1);

  std::vector<std::string> model_names;
  auto* models = app.add_subcommand("models", "check (C1)-(C4) for catalog or custom laws");
  models->add_option("names", model_names, "all | <name>[:k=v,...] | table:<path>")->required();

  std::string config;
  std::string out_dir;
  std::vector<double> eps_list;
  std::vector<int> m_list;
  std::optional<double> alpha;

  auto* run = app.add_subcommand("run", "one simulation");
  auto* stoptime = app.add_subcommand("stoptime", "finite stopping time sweep over eps");
  auto* converge = app.add_subcommand("converge", "double limit in eps and m_max");
  for (auto* sub : {run, stoptime, converge}) {
    sub->add_option("--config", config, "experiment INI file")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "output directory (overrides output.dir)");
  }
  stoptime->add_option("--eps", eps_list, "regularization values");
  stoptime->add_option("--alpha", alpha, "lower-bound exponent (default: the model's)");
  converge->add_option("--eps", eps_list, "regularization values, decreasing")->required();
  converge->add_option("--m", m_list, "m_max values, increasing")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? visco::exit_ok : visco::exit_usage;
  }

  const std::optional<std::string> out = out_dir.empty() ? std::nullopt : std::optional<std::string>(out_dir);
  if (*models) return visco::cmd_models(model_names, std::cout, std::cerr);
  if (*run) return visco::cmd_run(config, out, std::cout, std::cerr);
  if (*stoptime) return visco::cmd_stoptime(config, out, alpha, eps_list, std::cout, std::cerr);
  return visco::cmd_converge(config, out, eps_list, m_list, std::cout, std::cerr);
}
