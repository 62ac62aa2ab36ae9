#include <CLI11.hpp>

#include <iostream>

#include "fraclab/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"fraclab: fractional sub-Laplacian and heat-operator lab"};
  app.require_subcommand(1);
  std::string config;
  for (const auto& name : fraclab::command_names()) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("-c,--config", config, "JSON experiment config")->required();
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : fraclab::kExitInput;
  }
  return fraclab::execute(app.get_subcommands().front()->get_name(), config, std::cout, std::cerr);
}
