#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "anyonvlasov/cli_io.hpp"

int main(int argc, char** argv) {
  CLI::App app{"anyonvlasov: mean-field ground states of an almost-fermionic anyon gas"};
  app.require_subcommand(0);

  std::string verb;
  std::string config_path;
  std::string out_dir = ".";
  std::uint64_t seed = 1;
  std::vector<std::string> overrides;

  std::string verb_list;
  for (const auto& v : anyv::cli::known_verbs()) {
    if (!verb_list.empty()) verb_list += ", ";
    verb_list += v;
  }

  app.add_option("verb", verb, "one of: " + verb_list)->required();
  app.add_option("--config", config_path, "path to a JSON configuration file")->required();
  app.add_option("--seed", seed, "base seed for all random draws");
  app.add_option("--out", out_dir, "output directory (created if missing)");
  app.add_option("overrides", overrides, "key=value configuration overrides");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  std::ifstream in(config_path);
  if (!in) {
    std::cerr << "anyonvlasov: cannot read config file " << config_path << '\n';
    return 2;
  }
  nlohmann::json config = nlohmann::json::parse(in, nullptr, false);
  if (config.is_discarded()) {
    std::cerr << "anyonvlasov: config file " << config_path << " is not valid JSON\n";
    return 2;
  }

  anyv::cli::RunResult result;
  try {
    config = anyv::cli::apply_overrides(std::move(config), overrides);
    result = anyv::cli::run_verb(verb, std::move(config), seed, out_dir);
  } catch (const anyv::cli::UsageError& e) {
    std::cerr << "anyonvlasov: " << e.what() << '\n';
    return 2;
  }

  if (result.exit_code != 0) std::cerr << "anyonvlasov: " << result.message << '\n';
  return result.exit_code;
}
