#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "delaydense/io.hpp"

namespace delaydense::cli {

/// Flat key = value configuration. Keys may carry a subcommand prefix
/// (`saddle.t_star`); scoping strips the prefix for the active subcommand.
class ExperimentConfig {
 public:
  struct Entry {
    std::string value;
    std::string origin;  // "file:line" or "--flag"
  };

  void set(std::string key, std::string value, std::string origin);
  bool has(std::string_view key) const;
  const std::map<std::string, Entry, std::less<>>& entries() const noexcept { return entries_; }

  /// Typed getters. Missing required keys raise ValidationError naming the
  /// key; malformed values raise ParseError with the value's origin.
  std::string str(std::string_view key) const;
  std::string str_or(std::string_view key, std::string_view fallback) const;
  double num(std::string_view key) const;
  double num_or(std::string_view key, double fallback) const;
  long long integer(std::string_view key) const;
  long long integer_or(std::string_view key, long long fallback) const;
  bool flag_or(std::string_view key, bool fallback) const;
  std::vector<double> list(std::string_view key) const;
  std::vector<double> list_or(std::string_view key, std::vector<double> fallback) const;
  std::filesystem::path path(std::string_view key) const;

  /// Values actually consumed (including defaults), in key order.
  const std::map<std::string, std::string, std::less<>>& resolved() const noexcept { return resolved_; }
  std::string origin(std::string_view key) const;

  /// Keys without a prefix plus `sub.`-prefixed keys (prefix removed, taking
  /// precedence). Keys scoped to other subcommands are dropped.
  ExperimentConfig scoped(std::string_view sub) const;

 private:
  void note(std::string_view key, std::string value) const;

  std::map<std::string, Entry, std::less<>> entries_;
  mutable std::map<std::string, std::string, std::less<>> resolved_;
};

/// Parses a config file. ParseError carries path:line.
ExperimentConfig load_config(const std::filesystem::path& path);

/// Header recording the resolved configuration of a run.
FileHeader make_header(std::string_view subcommand, const ExperimentConfig& cfg);

struct Subcommand {
  std::string name;
  std::string help;
  std::vector<std::pair<std::string, std::string>> keys;  // key, description
  bool needs_seed = false;
  int (*run)(const ExperimentConfig& cfg, std::string& summary);
};

const std::vector<Subcommand>& subcommands();

/// Full driver: parses argv, loads and scopes the config, validates keys,
/// runs the subcommand, prints a one-line summary. Returns the exit code.
int run(int argc, const char* const* argv);
int run(const std::vector<std::string>& args);

}  // namespace delaydense::cli
