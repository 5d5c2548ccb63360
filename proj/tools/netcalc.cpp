// netcalc <subcommand> --config <file> [--out <dir>] [--epsilon <val>] [--seed <int>]
//
// Exit codes: 0 success, 1 other failure, 2 config error, 3 unstable scenario.

#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "netcalc/experiments.hpp"

namespace {

int exit_code(const netcalc::Error& e) {
  switch (e.code()) {
    case netcalc::ErrorCode::kConfig: return 2;
    case netcalc::ErrorCode::kUnstable: return 3;
    default: return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"End-to-end bounds for tandems of Delta-schedulers"};
  app.require_subcommand(1);
  std::string config_path;
  std::string out_dir = ".";
  std::optional<double> epsilon;
  std::optional<std::uint64_t> seed;

  for (const auto& name : netcalc::subcommands()) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "scenario file (JSON)")->required();
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--epsilon", epsilon, "violation probability, overrides the config");
    sub->add_option("--seed", seed, "master seed, overrides the config");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  const std::string sub = app.get_subcommands().front()->get_name();

  try {
    std::ifstream in(config_path);
    if (!in) throw netcalc::Error(netcalc::ErrorCode::kConfig, "cannot open config '" + config_path + "'");
    auto cfg = netcalc::load_config(in);
    if (epsilon) {
      if (!(*epsilon > 0 && *epsilon < 1))
        throw netcalc::Error(netcalc::ErrorCode::kConfig, "option '--epsilon': must be in (0, 1)");
      cfg.epsilons = {*epsilon};
    }
    if (seed) cfg.seed = *seed;

    const auto tables = netcalc::run_experiment(sub, cfg);
    std::filesystem::create_directories(out_dir);
    for (const auto& t : tables) {
      const auto path = std::filesystem::path(out_dir) / (t.name + ".csv");
      std::ofstream os(path);
      if (!os) throw std::runtime_error("cannot write " + path.string());
      t.write(os);
      std::cout << path.string() << " (" << t.rows.size() << " rows)\n";
    }
  } catch (const netcalc::Error& e) {
    std::cerr << "netcalc: " << e.what() << '\n';
    return exit_code(e);
  } catch (const std::exception& e) {
    std::cerr << "netcalc: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
