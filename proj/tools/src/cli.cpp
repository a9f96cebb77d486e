#include <algorithm>
#include <iostream>

#include "CLI11.hpp"
#include "delaydense/cli.hpp"
#include "delaydense/error.hpp"
#include "delaydense/version.hpp"

namespace delaydense::cli {

namespace {

std::string flag_name(std::string key) {
  for (char& c : key)
    if (c == '_') c = '-';
  return "--" + key;
}

}  // namespace

int run(int argc, const char* const* argv) {
  std::vector<std::string> args(argv, argv + argc);
  return run(args);
}

int run(const std::vector<std::string>& args) {
  CLI::App app{"Densities, basins and chaotic saddles of scalar delay differential equations", "delaydense"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  const auto& subs = subcommands();
  std::vector<std::map<std::string, std::string>> values(subs.size());
  std::vector<std::string> config_paths(subs.size());
  std::vector<CLI::App*> apps;
  for (std::size_t i = 0; i < subs.size(); ++i) {
    auto* s = app.add_subcommand(subs[i].name, subs[i].help);
    s->add_option("--config", config_paths[i], "key = value file; flags override its values");
    for (const auto& [key, help] : subs[i].keys) s->add_option(flag_name(key), values[i][key], help);
    apps.push_back(s);
  }

  // CLI11 takes the arguments after the program name, in reverse order.
  std::vector<std::string> rest(args.begin() + (args.empty() ? 0 : 1), args.end());
  std::reverse(rest.begin(), rest.end());
  try {
    app.parse(rest);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  std::size_t which = 0;
  while (which < apps.size() && !apps[which]->parsed()) ++which;
  const Subcommand& sub = subs[which];
  try {
    ExperimentConfig raw;
    if (!config_paths[which].empty()) raw = load_config(config_paths[which]);
    ExperimentConfig cfg = raw.scoped(sub.name);
    for (const auto& [key, help] : sub.keys)
      if (apps[which]->count(flag_name(key)) > 0) cfg.set(key, values[which][key], flag_name(key));
    for (const auto& [key, e] : cfg.entries()) {
      bool known = false;
      for (const auto& k : sub.keys) known = known || k.first == key;
      if (!known) throw Error(Errc::ValidationError, key + ": not a " + sub.name + " setting (" + e.origin + ")");
    }
    if (sub.needs_seed && !cfg.has("seed")) throw Error(Errc::ValidationError, "seed");
    std::string summary;
    int code = sub.run(cfg, summary);
    std::cout << summary << std::endl;
    return code;
  } catch (const Error& e) {
    std::cerr << "delaydense " << sub.name << ": " << e.what() << std::endl;
    return is_usage_error(e.code()) ? 2 : 3;
  } catch (const std::exception& e) {
    std::cerr << "delaydense " << sub.name << ": " << e.what() << std::endl;
    return 3;
  }
}

}  // namespace delaydense::cli
