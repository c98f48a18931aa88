// shiftlab: batch experiment runner for the truncated shift laboratory.
//
//   shiftlab run <config.json> [--jobs N] [--out DIR] [--tolerance-scale X]
//   shiftlab list-generators
//   shiftlab version
//
// Exit status: 0 all asserted invariants passed, 1 invariant failure,
// 2 schema violation, 3 level-budget overflow.

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>

#include "shiftlab/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"shiftlab: numerical laboratory for truncated shift endomorphisms"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  int jobs = 1;
  double tolerance_scale = 0.0;  // 0 = take from config

  auto* run = app.add_subcommand("run", "execute an experiment config");
  run->add_option("config", config_path, "path to the JSON config")->required();
  run->add_option("--jobs", jobs, "parallel cells");
  run->add_option("--out", out_dir, "output directory (overrides config/env)");
  run->add_option("--tolerance-scale", tolerance_scale,
                  "multiply every tolerance (overrides config)");

  auto* list = app.add_subcommand("list-generators", "catalog of sequence generators");
  auto* version = app.add_subcommand("version", "print the tool version");

  CLI11_PARSE(app, argc, argv);

  if (version->parsed()) {
    std::cout << "shiftlab " << shiftlab::kVersion << "\n";
    return 0;
  }
  if (list->parsed()) {
    std::cout << shiftlab::runner::list_generators().dump(2) << "\n";
    return 0;
  }

  try {
    std::ifstream in(config_path);
    if (!in) {
      std::cerr << "cannot open config: " << config_path << "\n";
      return 2;
    }
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      std::cerr << "config parse error: " << e.what() << "\n";
      return 2;
    }
    auto cfg = shiftlab::runner::parse_config(j);
    if (tolerance_scale > 0) cfg.tolerance_scale = tolerance_scale;
    if (!out_dir.empty()) {
      cfg.out_dir = out_dir;
    } else if (cfg.out_dir.empty()) {
      const char* env = std::getenv("SHIFTLAB_OUT");
      cfg.out_dir = env ? env : "shiftlab-out";
    }

    const auto report = shiftlab::runner::run_experiment(cfg, std::max(1, jobs));
    shiftlab::runner::write_report(report, cfg.out_dir);
    for (const auto& cell : report.cells)
      std::cout << (cell.pass ? "pass " : "FAIL ") << cell.id << "\n";
    if (!report.pass) {
      std::cerr << "invariant failed in cell "
                << shiftlab::runner::first_failing_cell(report) << "\n";
      return 1;
    }
    std::cout << "report: " << cfg.out_dir << "/report.json\n";
    return 0;
  } catch (const shiftlab::schema_error& e) {
    std::cerr << "schema violation: " << e.what() << "\n";
    return 2;
  } catch (const shiftlab::budget_error& e) {
    std::cerr << "budget overflow: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
