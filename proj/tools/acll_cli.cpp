#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "acll/acll.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Lifelong learning with adaptive compression-rate selection"};
  app.require_subcommand(1);

  std::string run_config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  CLI::App* run = app.add_subcommand("run", "Run every configured strategy over the sequence");
  run->add_option("config", run_config, "JSON experiment config")->required();
  run->add_option("--seed", [&seed](const CLI::results_t& res) {
    seed = std::stoull(res[0]);
    return true;
  }, "Override the master seed");
  run->add_option("--out", [&out_dir](const CLI::results_t& res) {
    out_dir = res[0];
    return true;
  }, "Override the output directory");

  std::string validate_config_path;
  CLI::App* validate = app.add_subcommand("validate", "Check a config without running it");
  validate->add_option("config", validate_config_path, "JSON experiment config")->required();

  CLI11_PARSE(app, argc, argv);

  if (run->parsed()) {
    acll::CliOverrides overrides;
    overrides.seed = seed;
    overrides.out = out_dir;
    return acll::run_experiment(run_config, overrides, std::cout, std::cerr);
  }

  const std::vector<std::string> diags = acll::validate_config(validate_config_path);
  if (diags.empty()) {
    std::cout << "ok\n";
    return 0;
  }
  for (const auto& d : diags) std::cerr << d << '\n';
  return 2;
}
