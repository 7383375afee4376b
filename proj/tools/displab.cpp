// displab command line: a thin shell over the C API.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "displab/displab.h"

namespace fs = std::filesystem;

int main(int argc, char** argv) {
  CLI::App app{"displab: dispersion-method computations in arithmetic progressions"};
  app.require_subcommand(1);

  std::string config_path, out_dir = ".";
  bool oracle = false, override_budget = false, quiet = false;
  std::uint64_t seed = 0;
  int threads = 0;

  app.add_subcommand("list", "print the available commands")->callback([] {
    for (size_t i = 0; i < displab_command_count(); ++i) std::cout << displab_command_name(i) << "\n";
  });

  std::string chosen;
  for (size_t i = 0; i < displab_command_count(); ++i) {
    const std::string name = displab_command_name(i);
    auto* sub = app.add_subcommand(name, "run the " + name + " experiment");
    sub->add_option("--config", config_path, "config file (key = value, schema = 1)")->required();
    sub->add_flag("--oracle", oracle, "use brute-force evaluation paths");
    sub->add_option("--seed", seed, "seed overriding the config");
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
    sub->add_flag("--override-budget", override_budget, "lift desk-scale caps");
    sub->add_flag("-q,--quiet", quiet, "no summary on stdout");
    sub->callback([&chosen, name] { chosen = name; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }
  if (chosen.empty()) return 0;

  if (threads > 0) displab_set_threads(threads);

  displab_config* cfg = nullptr;
  if (displab_config_load(config_path.c_str(), &cfg) != DISPLAB_OK) {
    std::cerr << "displab: " << displab_last_error() << "\n";
    return 2;
  }
  displab_run_options opts{};
  opts.oracle = oracle ? 1 : 0;
  opts.override_budget = override_budget ? 1 : 0;
  opts.has_seed = app.get_subcommand(chosen)->count("--seed") > 0 ? 1 : 0;
  opts.seed = seed;

  displab_report* report = nullptr;
  const displab_status st = displab_run(chosen.c_str(), cfg, &opts, &report);
  displab_config_free(cfg);
  if (st != DISPLAB_OK) {
    std::cerr << "displab: " << displab_status_string(st) << ": " << displab_last_error() << "\n";
    return 2;
  }

  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) {
    std::cerr << "displab: cannot create " << out_dir << ": " << ec.message() << "\n";
    displab_report_free(report);
    return 2;
  }
  for (size_t i = 0; i < displab_report_file_count(report); ++i) {
    const fs::path path = fs::path(out_dir) / displab_report_file_name(report, i);
    std::ofstream out(path, std::ios::binary);
    out << displab_report_file_content(report, i);
    if (!out) {
      std::cerr << "displab: failed writing " << path << "\n";
      displab_report_free(report);
      return 2;
    }
    if (!quiet) std::cout << "wrote " << path.string() << "\n";
  }
  if (!quiet) std::cout << displab_report_summary(report);
  const int code = displab_report_ok(report) ? 0 : 1;
  displab_report_free(report);
  return code;
}
