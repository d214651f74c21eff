#include <iostream>

#include <CLI11.hpp>

#include "sbren_cli/commands.hpp"

int main(int argc, char** argv) {
  sbren::cli::CliOptions opts;
  CLI::App app{"Spin-boson renormalization toolkit"};
  app.add_option("command", opts.command, "verify | converge | vanhove | spectrum | report")
      ->required()
      ->check(CLI::IsMember({"verify", "converge", "vanhove", "spectrum", "report"}));
  app.add_option("--config", opts.config, "YAML configuration file");
  app.add_option("--out", opts.out, "Output directory")->capture_default_str();
  std::uint64_t seed = 0;
  auto* seed_opt = app.add_option("--seed", seed, "Overrides run.seed");
  app.add_option("--jobs", opts.jobs, "Worker threads for schedule entries")->capture_default_str();
  app.add_option("--tolerance-scale", opts.tolerance_scale, "Multiplies every tolerance")->capture_default_str();
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : sbren::cli::kExitUsage;
  }
  if (seed_opt->count()) opts.seed = seed;
  return sbren::cli::run_command(opts, std::cerr);
}
