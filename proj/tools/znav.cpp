// Experiment runner: one YAML config, one subcommand per stage.
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "znav/config.hpp"
#include "znav/errors.hpp"
#include "znav/experiment.hpp"

namespace {

enum Exit { kOk = 0, kValidation = 1, kRuntime = 2 };

std::optional<std::filesystem::path> opt_path(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return std::filesystem::path(s);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"znav: navigation in 2D flows with optimal control and actor-critic RL"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_path;
  std::string policy_path;
  std::string output_dir;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("config", config_path, "YAML experiment config")->required();
    sub->add_option("-o,--output-dir", output_dir, "Override output_dir from the config");
  };

  auto* gen = app.add_subcommand("gen-flow", "Generate a flow and write it to a flow file");
  add_common(gen);
  gen->add_option("--out", out_path, "Flow file path (default <output_dir>/flow.znf)");

  auto* train = app.add_subcommand("train", "Train an actor-critic policy");
  add_common(train);

  auto* eval = app.add_subcommand("eval", "Roll out a trained policy");
  add_common(eval);
  eval->add_option("--policy", policy_path, "Policy file (default <output_dir>/policy.znp)");

  auto* on = app.add_subcommand("on", "Optimal-navigation shooting ensemble");
  add_common(on);

  auto* compare = app.add_subcommand("compare", "Run ON and RL on the same flow and geometry");
  add_common(compare);
  compare->add_option("--policy", policy_path, "Policy file (default <output_dir>/policy.znp)");

  auto* ow = app.add_subcommand("ow-map", "Export the Okubo-Weiss field as CSV");
  add_common(ow);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kValidation;
  }

  using namespace znav;
  try {
    auto config = cli::load_config(config_path);
    if (!output_dir.empty()) config.output_dir = output_dir;
    if (*gen) {
      cli::cmd_gen_flow(config, opt_path(out_path), std::cout);
    } else if (*train) {
      cli::cmd_train(config, std::cout);
    } else if (*eval) {
      cli::cmd_eval(config, opt_path(policy_path), std::cout);
    } else if (*on) {
      cli::cmd_on(config, std::cout);
    } else if (*compare) {
      cli::cmd_compare(config, opt_path(policy_path), std::cout);
    } else if (*ow) {
      cli::cmd_ow_map(config, std::cout);
    }
  } catch (const cli::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kValidation;
  } catch (const ParameterError& e) {
    std::cerr << "invalid parameter: " << e.what() << '\n';
    return kValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntime;
  }
  return kOk;
}
