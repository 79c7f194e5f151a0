#include <CLI11.hpp>

#include <functional>
#include <iostream>
#include <map>
#include <tuple>

#include <cogmtl/errors.hpp>

#include "commands.hpp"

namespace {

enum Exit : int { kOk = 0, kFailure = 1, kUsage = 2, kData = 3, kNumerical = 4 };

}  // namespace

int main(int argc, char** argv) {
  using namespace cogmtl::cli;
  CLI::App app{"Multitask regression, harmonization and nested cross-validation"};
  app.require_subcommand(1, 1);

  std::string config_path;
  Overrides overrides;
  std::uint64_t seed = 0;
  int jobs = 1;
  std::string out_dir;

  using Command = std::function<std::vector<std::filesystem::path>(const RunConfig&)>;
  const std::vector<std::tuple<std::string, std::string, Command>> commands{
      {"simulate", "Generate a synthetic cohort", cmd_simulate},
      {"harmonize", "Harmonize features and write batch diagnostics", cmd_harmonize},
      {"fit", "Fit a linear model on all observed subjects", cmd_fit},
      {"predict", "Predict with a saved model", cmd_predict},
      {"evaluate", "Run repeated nested cross-validation", cmd_evaluate},
      {"report", "Re-render CSV tables from a report JSON", cmd_report},
  };
  std::map<CLI::App*, Command> handlers;
  for (const auto& [name, help, fn] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "INI config file")->required();
    sub->add_option("--seed", seed, "Override the config seed");
    sub->add_option("--jobs", jobs, "Worker threads");
    sub->add_option("--out", out_dir, "Output directory");
    handlers[sub] = fn;
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  CLI::App* chosen = app.get_subcommands().front();
  if (chosen->count("--seed")) overrides.seed = seed;
  if (chosen->count("--jobs")) overrides.jobs = jobs;
  if (chosen->count("--out")) overrides.out = out_dir;

  try {
    const RunConfig cfg = load_config(config_path, overrides);
    for (const auto& path : handlers.at(chosen)(cfg)) std::cout << path.string() << '\n';
    return kOk;
  } catch (const cogmtl::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const cogmtl::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kData;
  } catch (const cogmtl::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return kNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailure;
  }
}
