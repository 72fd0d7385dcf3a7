#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "evolab/kernels.hpp"
#include "evolab/pipeline.hpp"

int main(int argc, char** argv) {
  CLI::App app{"evolab: evolution families of non-autonomous forms"};
  app.require_subcommand(1);
  std::string config, out;
  std::uint64_t seed = 0;
  int threads = 0;
  for (const char* name : {"bounds", "evolve", "verify", "robin", "report"}) {
    CLI::App* sub = app.add_subcommand(name);
    if (std::string(name) != "report") sub->add_option("--config", config, "experiment config (JSON)")->required();
    sub->add_option("--out", out, "output directory (default: the config's \"out\", else ./out)");
    sub->add_option("--seed", seed, "probe seed");
    sub->add_option("--threads", threads, "OpenMP threads");
  }
  CLI11_PARSE(app, argc, argv);
  const std::string cmd = app.get_subcommands().front()->get_name();
  if (threads > 0) evolab::set_thread_count(threads);
  std::optional<std::uint64_t> s;
  if (app.get_subcommands().front()->count("--seed")) s = seed;
  return evolab::run_command(cmd, config, out, s, std::cerr);
}
