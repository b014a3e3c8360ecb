#include <iostream>

#include "CLI11.hpp"
#include "hheat/cli.hpp"
#include "hheat/errors.hpp"

int main(int argc, char** argv) {
  using namespace hheat;
  CLI::App app{"Heisenberg-group heat content by exit-time Monte Carlo"};
  app.require_subcommand(1);
  std::string config_path, tgrid, out_dir, heat_csv, filter;
  std::uint64_t seed = 0;
  int paths = 0, steps = 0;
  bool no_timing = false;
  for (const char* name : {"geom", "heat", "fit", "diag", "validate"}) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "INI file with [domain] and [run] sections");
    sub->add_option("--seed", seed);
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--paths", paths, "paths per shell node")->check(CLI::PositiveNumber);
    sub->add_option("--steps", steps, "grid steps over the largest t")->check(CLI::PositiveNumber);
    sub->add_option("--tgrid", tgrid, "comma-separated times");
    sub->add_option("--filter", filter, "validation suite");
    sub->add_option("--heat", heat_csv, "heat CSV read by fit");
    sub->add_flag("--no-timing", no_timing, "write zero wall times");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 4;
  }
  CLI::App* sub = app.get_subcommands().front();
  const std::string command = sub->get_name();

  cli::RunConfig cfg;
  try {
    if (!config_path.empty()) {
      cfg = cli::load_config(config_path);
    } else if (command != "validate") {
      throw ConfigError("--config is required");
    }
    if (sub->count("--seed")) cfg.seed = seed;
    if (sub->count("--out")) cfg.output_dir = out_dir;
    if (sub->count("--paths")) cfg.n_paths = paths;
    if (sub->count("--steps")) cfg.n_steps = steps;
    if (sub->count("--tgrid")) cfg.t_grid = cli::parse_list(tgrid);
    if (sub->count("--heat")) cfg.heat_csv = heat_csv;
    cfg.filter = filter;
    cfg.timing = !no_timing;
  } catch (const Error& e) {
    std::cerr << "hheat " << command << ": " << e.what() << '\n';
    return 4;
  }
  return cli::run_command(command, cfg, std::cout, std::cerr);
}
