// hardy_lab: command-line front end.
//
//   hardy_lab run <config.json> [-o DIR]
//   hardy_lab <command> <config.json> [-o DIR]
//   hardy_lab reproduce [--configs DIR] [-o DIR]

#include <CLI11.hpp>

#include <iostream>
#include <string>

#include "hardylab/cli.hpp"

#ifndef HARDYLAB_CONFIG_DIR
#define HARDYLAB_CONFIG_DIR "configs/acceptance"
#endif

namespace fs = std::filesystem;
using namespace hardylab;

namespace {

fs::path default_output(const json &cfg, const fs::path &config) {
  if (cfg.is_object() && cfg.contains("output_dir") &&
      cfg.at("output_dir").is_string())
    return cfg.at("output_dir").get<std::string>();
  return fs::path("hardy_lab_out") / config.stem();
}

int report(const cli::Outcome &o, const fs::path &dir) {
  if (o.exit_code == cli::exit_ok) {
    std::cout << "ok: " << (dir / "report.json").string() << "\n";
  } else {
    std::cerr << o.status << " (exit " << o.exit_code << ")\n";
    for (const auto &f : o.failures)
      std::cerr << "  " << f << "\n";
  }
  return o.exit_code;
}

int run_one(const std::string &config, const std::string &out_flag,
            const std::string &forced_command) {
  json cfg;
  try {
    cfg = cli::load_config(config);
  } catch (const ConfigError &e) {
    std::cerr << e.what() << "\n";
    return cli::exit_config;
  }
  if (!forced_command.empty() && cfg.is_object()) {
    if (!cfg.contains("command"))
      cfg["command"] = forced_command;
    else if (cfg.at("command") != forced_command) {
      std::cerr << config << ": config command does not match subcommand '"
                << forced_command << "'\n";
      return cli::exit_config;
    }
  }
  const fs::path dir =
      out_flag.empty() ? default_output(cfg, config) : fs::path(out_flag);
  return report(cli::run_config(cfg, dir), dir);
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Weighted Hardy inequality and inverse-square potential lab"};
  app.require_subcommand(1);

  std::string config, out_dir;
  auto *run = app.add_subcommand("run", "Run one JSON config");
  run->add_option("config", config, "Config file")->required();
  run->add_option("-o,--output-dir", out_dir, "Output directory");

  std::vector<std::pair<CLI::App *, std::string>> named;
  for (const auto &c : cli::commands()) {
    auto *sub = app.add_subcommand(c, "Run a '" + c + "' config");
    sub->add_option("config", config, "Config file")->required();
    sub->add_option("-o,--output-dir", out_dir, "Output directory");
    named.emplace_back(sub, c);
  }

  std::string config_dir = HARDYLAB_CONFIG_DIR;
  auto *repro = app.add_subcommand("reproduce", "Run the bundled acceptance configs");
  repro->add_option("--configs", config_dir, "Directory of configs");
  repro->add_option("-o,--output-dir", out_dir, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : cli::exit_config;
  }

  try {
    if (*run)
      return run_one(config, out_dir, "");
    for (const auto &[sub, name] : named)
      if (*sub)
        return run_one(config, out_dir, name);
    if (*repro) {
      const fs::path dir =
          out_dir.empty() ? fs::path("hardy_lab_out") / "reproduce" : fs::path(out_dir);
      const auto o = cli::reproduce_all(config_dir, dir);
      std::cout << "report: " << (dir / "report.json").string() << "\n";
      if (o.exit_code != cli::exit_ok) {
        std::cerr << "failing criteria:\n";
        for (const auto &f : o.failures)
          std::cerr << "  " << f << "\n";
      }
      return o.exit_code;
    }
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return cli::exit_solver;
  }
  return cli::exit_ok;
}
