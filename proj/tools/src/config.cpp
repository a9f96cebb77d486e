#include <charconv>
#include <fstream>

#include "delaydense/cli.hpp"
#include "delaydense/error.hpp"
#include "delaydense/format.hpp"

namespace delaydense::cli {

namespace {

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

bool valid_key(std::string_view k) {
  if (k.empty()) return false;
  for (char c : k)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '-')) return false;
  return true;
}

double to_double(const std::string& s, bool& ok) {
  double v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  ok = !s.empty() && res.ec == std::errc() && res.ptr == s.data() + s.size();
  return v;
}

}  // namespace

void ExperimentConfig::set(std::string key, std::string value, std::string origin) {
  entries_[std::move(key)] = Entry{std::move(value), std::move(origin)};
}

bool ExperimentConfig::has(std::string_view key) const { return entries_.find(key) != entries_.end(); }

std::string ExperimentConfig::origin(std::string_view key) const {
  auto it = entries_.find(key);
  return it == entries_.end() ? "default" : it->second.origin;
}

void ExperimentConfig::note(std::string_view key, std::string value) const { resolved_[std::string(key)] = std::move(value); }

std::string ExperimentConfig::str(std::string_view key) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) throw Error(Errc::ValidationError, std::string(key));
  note(key, it->second.value);
  return it->second.value;
}

std::string ExperimentConfig::str_or(std::string_view key, std::string_view fallback) const {
  return has(key) ? str(key) : (note(key, std::string(fallback)), std::string(fallback));
}

double ExperimentConfig::num(std::string_view key) const {
  std::string s = str(key);
  bool ok = false;
  double v = to_double(s, ok);
  if (!ok) throw Error(Errc::ParseError, origin(key) + ": malformed number '" + s + "' for " + std::string(key));
  return v;
}

double ExperimentConfig::num_or(std::string_view key, double fallback) const {
  if (has(key)) return num(key);
  note(key, format_double(fallback));
  return fallback;
}

long long ExperimentConfig::integer(std::string_view key) const {
  std::string s = str(key);
  long long v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw Error(Errc::ParseError, origin(key) + ": malformed integer '" + s + "' for " + std::string(key));
  return v;
}

long long ExperimentConfig::integer_or(std::string_view key, long long fallback) const {
  if (has(key)) return integer(key);
  note(key, std::to_string(fallback));
  return fallback;
}

bool ExperimentConfig::flag_or(std::string_view key, bool fallback) const {
  if (!has(key)) {
    note(key, fallback ? "true" : "false");
    return fallback;
  }
  std::string s = str(key);
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw Error(Errc::ParseError, origin(key) + ": expected true/false for " + std::string(key));
}

std::vector<double> ExperimentConfig::list(std::string_view key) const {
  std::string s = str(key);
  std::vector<double> out;
  std::size_t start = 0;
  while (true) {
    auto pos = s.find(',', start);
    std::string tok = trim(std::string_view(s).substr(start, pos == std::string::npos ? std::string::npos : pos - start));
    bool ok = false;
    double v = to_double(tok, ok);
    if (!ok) throw Error(Errc::ParseError, origin(key) + ": malformed number '" + tok + "' in " + std::string(key));
    out.push_back(v);
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

std::vector<double> ExperimentConfig::list_or(std::string_view key, std::vector<double> fallback) const {
  if (has(key)) return list(key);
  note(key, format_list(fallback));
  return fallback;
}

std::filesystem::path ExperimentConfig::path(std::string_view key) const { return std::filesystem::path(str(key)); }

ExperimentConfig ExperimentConfig::scoped(std::string_view sub) const {
  ExperimentConfig out;
  for (const auto& [k, e] : entries_)
    if (k.find('.') == std::string::npos) out.entries_[k] = e;
  const std::string prefix = std::string(sub) + ".";
  for (const auto& [k, e] : entries_)
    if (k.rfind(prefix, 0) == 0) out.entries_[k.substr(prefix.size())] = e;
  return out;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw Error(Errc::Io, "cannot read config " + path.string());
  ExperimentConfig cfg;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    const std::string where = path.string() + ":" + std::to_string(lineno);
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::string t = trim(line);
    if (t.empty()) continue;
    auto eq = t.find('=');
    if (eq == std::string::npos) throw Error(Errc::ParseError, where + ": expected 'key = value'");
    std::string key = trim(std::string_view(t).substr(0, eq));
    std::string value = trim(std::string_view(t).substr(eq + 1));
    if (!valid_key(key)) throw Error(Errc::ParseError, where + ": invalid key '" + key + "'");
    if (value.empty()) throw Error(Errc::ParseError, where + ": empty value for '" + key + "'");
    for (char& c : key)
      if (c == '-') c = '_';
    cfg.set(key, value, where);
  }
  return cfg;
}

FileHeader make_header(std::string_view subcommand, const ExperimentConfig& cfg) {
  std::map<std::string, std::string, std::less<>> all = cfg.resolved();
  for (const auto& [k, e] : cfg.entries()) all[k] = e.value;
  FileHeader h;
  h.title = std::string(subcommand);
  for (auto& [k, v] : all) {
    // Destinations are recorded by file name so reruns into another directory compare equal.
    bool output = k == "out" || (k.size() > 4 && k.ends_with("_out"));
    h.add(k, output ? std::filesystem::path(v).filename().string() : v);
  }
  return h;
}

}  // namespace delaydense::cli
