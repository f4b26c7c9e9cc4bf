#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hessvar/commands.hpp"

using namespace hessvar::cli;

int main(int argc, char** argv) {
  CLI::App app{"Hessian-dependent variational integrals: solver and regularity diagnostics"};
  app.require_subcommand(1);

  CommandOptions opt;
  std::string config, out = ".";
  std::uint64_t seed = 0;
  int threads = 0;
  const struct {
    const char* name;
    const char* help;
    bool takes_files;
  } commands[] = {
      {"solve", "Minimize the discrete energy with clamped boundary data", false},
      {"diagnose", "Regularity diagnostics of a Hessian or matrix field", true},
      {"hamstat", "Hamiltonian stationary residuals, phase and convexity certificate", false},
      {"campanato", "Campanato decay curves and the iteration-lemma check", true},
      {"report-merge", "Merge JSON reports into one document", true},
  };
  for (const auto& c : commands) {
    CLI::App* sub = app.add_subcommand(c.name, c.help);
    sub->add_option("--config", config, "Configuration file")->check(CLI::ExistingFile);
    sub->add_option("--out", out, "Output directory");
    sub->add_option("--seed", seed, "Random seed (overrides run.seed)");
    sub->add_option("--threads", threads, "Worker threads (fallback: HESSVAR_THREADS)")->check(CLI::PositiveNumber);
    if (c.takes_files) sub->add_option("files", opt.inputs, "Input files");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  CLI::App* sub = app.get_subcommands().front();
  if (!config.empty()) opt.config = config;
  opt.out_dir = out;
  if (sub->count("--seed")) opt.seed = seed;
  if (sub->count("--threads")) opt.threads = threads;
  return run_command(sub->get_name(), opt, std::cout, std::cerr);
}
