#include <CLI11.hpp>
#include <iostream>
#include <map>

#include "oqnet/cli.hpp"

int main(int argc, char** argv) {
  using namespace oqnet;
  CLI::App app{"Memory analysis and coupling design for networks of quantum harmonic oscillators"};
  app.require_subcommand(1);

  std::string config;
  std::string out_dir;
  std::string epsilons;
  std::string method;
  std::string optimizer;
  std::string mode;
  bool no_timestamp = false;

  const std::map<std::string, std::string> help{
      {"validate", "check a network description and report violations"},
      {"assemble", "write the augmented model matrices"},
      {"simulate", "sample the memory deviation curve"},
      {"decoherence", "compute decoherence times and their expansions"},
      {"optimize", "solve for optimal direct energy couplings"},
      {"isolate", "build an isolating subspace and its asymptotics"},
  };
  for (const auto& name : cli::commands()) {
    const auto it = help.find(name);
    CLI::App* sub = app.add_subcommand(name, it == help.end() ? "" : it->second);
    sub->add_option("--config", config, "JSON run configuration")->required();
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--epsilon", epsilons, "comma-separated fidelity levels");
    sub->add_option("--method", method, "Gramian method")->check(CLI::IsMember({"vanloan", "ode"}));
    sub->add_option("--optimizer", optimizer, "optimizer method")
        ->check(CLI::IsMember({"global", "fixed_point"}));
    sub->add_option("--mode", mode, "optimizer mode")->check(CLI::IsMember({"standard", "isolated"}));
    sub->add_flag("--no-timestamp", no_timestamp, "omit the generation timestamp");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : cli::kValidation;
  }

  cli::CommandOptions options;
  options.timestamp = !no_timestamp;
  if (!out_dir.empty()) options.out_dir = out_dir;
  if (!method.empty()) options.method = method == "ode" ? GramianMethod::ode : GramianMethod::vanloan;
  if (!optimizer.empty()) {
    options.optimizer = optimizer == "global" ? OptimizerMethod::global : OptimizerMethod::fixed_point;
  }
  if (!mode.empty()) options.mode = mode == "standard" ? OptimizerMode::standard : OptimizerMode::isolated;
  if (!epsilons.empty()) {
    try {
      options.epsilons = cli::parse_epsilon_list(epsilons);
    } catch (const Error& e) {
      std::cerr << "error: " << e.what() << "\n";
      return cli::kValidation;
    }
  }
  return cli::run(app.get_subcommands().front()->get_name(), config, options, std::cout, std::cerr);
}
