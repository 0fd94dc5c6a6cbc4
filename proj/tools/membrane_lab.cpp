// membrane-lab: run registered experiments from key/value config files.
//
// Exit codes: 0 pass, 2 a verdict failed, 1 usage/config/runtime error.

#include "membrane/lab.hpp"
#include "membrane/parallel.hpp"

#include "CLI11.hpp"

#include <iostream>

namespace lab = membrane::lab;

int main(int argc, char** argv) {
  CLI::App app{"Numerical lab for the ordered multi-membrane obstacle problem"};
  app.require_subcommand(1);

  std::string run_path, out_override, validate_path;
  auto* run = app.add_subcommand("run", "Run one experiment and write its report");
  run->add_option("config", run_path, "Experiment config file")->required();
  run->add_option("-o,--output", out_override, "Output directory (overrides the config key)");
  auto* list = app.add_subcommand("list-experiments", "Print the registered experiment names");
  auto* validate = app.add_subcommand("validate", "Check a config file and print its resolved values");
  validate->add_option("config", validate_path, "Experiment config file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*list) {
      for (const auto& name : lab::registered_experiments()) std::cout << name << '\n';
      return 0;
    }
    if (*validate) {
      const lab::ExperimentConfig c = lab::load_config(validate_path);
      for (const auto& [k, v] : c.echo()) std::cout << k << " = " << v << '\n';
      return 0;
    }
    lab::ExperimentConfig c = lab::load_config(run_path);
    if (!out_override.empty()) c.output = out_override;
    const lab::ReportBundle bundle = lab::run_experiment(c);
    for (const auto& p : lab::write_report(bundle, c.output)) std::cout << "wrote " << p.string() << '\n';
    for (const auto& [k, v] : bundle.summary["verdicts"].items())
      std::cout << (v.get<bool>() ? "PASS " : "FAIL ") << k << '\n';
    std::cout << bundle.experiment << ": " << (bundle.pass ? "PASS" : "FAIL") << '\n';
    return bundle.pass ? 0 : 2;
  } catch (const std::exception& e) {
    std::cerr << "membrane-lab: " << e.what() << '\n';
    return 1;
  }
}
