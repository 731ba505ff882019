#include <algorithm>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "lactr/commands.hpp"

namespace {

using namespace lactr;

std::string flag_name(std::string key) {
  std::replace(key.begin(), key.end(), '_', '-');
  return "--" + key;
}

struct Settings {
  std::string config_file;
  std::map<std::string, std::string> overrides;
};

// Every configuration key becomes a flag on every subcommand.
void add_settings(CLI::App* sub, Settings& settings) {
  sub->add_option("--config", settings.config_file, "key = value configuration file")
      ->check(CLI::ExistingFile);
  for (const auto& key : config_schema()) {
    std::string help = key.help;
    if (*key.default_value) help += " (default " + std::string(key.default_value) + ")";
    sub->add_option_function<std::string>(
        flag_name(key.name), [&settings, name = std::string(key.name)](const std::string& v) {
          settings.overrides[name] = v;
        },
        help);
  }
}

RunConfig resolve(const Settings& settings) {
  RunConfig cfg = settings.config_file.empty() ? RunConfig{} : RunConfig::load(settings.config_file);
  for (const auto& [key, value] : settings.overrides) cfg.set(key, value);
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Limited-attention collaborative topic regression"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));

  Settings settings;
  struct Command {
    const char* name;
    const char* help;
    void (*run)(const RunConfig&, std::ostream&);
  };
  const Command commands[] = {
      {"prep", "build vocabulary, filter activity and attribute sources",
       [](const RunConfig& c, std::ostream& o) { cmd::cmd_prep(c, o); }},
      {"lda-init", "fit the topic initialization",
       [](const RunConfig& c, std::ostream& o) { cmd::cmd_lda_init(c, o); }},
      {"train", "fit a model on every vote", [](const RunConfig& c, std::ostream& o) { cmd::cmd_train(c, o); }},
      {"eval", "cross-validated recall", [](const RunConfig& c, std::ostream& o) { cmd::cmd_eval(c, o); }},
      {"predict", "rank unseen items for a user",
       [](const RunConfig& c, std::ostream& o) { cmd::cmd_predict(c, o); }},
      {"simulate", "generate a synthetic dataset",
       [](const RunConfig& c, std::ostream& o) { cmd::cmd_simulate(c, o); }},
      {"inspect", "print topics or a user profile",
       [](const RunConfig& c, std::ostream& o) { cmd::cmd_inspect(c, o); }},
  };
  std::map<CLI::App*, const Command*> by_app;
  for (const auto& command : commands) {
    auto* sub = app.add_subcommand(command.name, command.help);
    add_settings(sub, settings);
    by_app[sub] = &command;
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    const RunConfig cfg = resolve(settings);
    for (auto* sub : app.get_subcommands()) by_app.at(sub)->run(cfg, std::cout);
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
