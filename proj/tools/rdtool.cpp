#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "rdelay/cli_io.hpp"

int main(int argc, char** argv) {
  CLI::App app{"rdtool: steady states, bifurcation data and simulations for "
               "reaction-diffusion models with nonlocal delay"};
  std::string command, config;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  app.add_option("command", command, "bif-table | branch | simulate | verify-equivalence | uniqueness-probe")
      ->required()
      ->check(CLI::IsMember(rdelay::command_names()));
  app.add_option("--config", config, "experiment config file")->required();
  app.add_option("--out", out, "output directory (overrides output.dir)");
  app.add_option("--seed", seed, "random seed (overrides seed)");
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return rdelay::kExitConfig;
  }
  return rdelay::run_command(command, config, out, seed, std::cout, std::cerr);
}
