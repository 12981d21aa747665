#pragma once
#include <map>
#include <string>
#include <vector>

namespace elastlab {

// Flat key = value configuration ('#' comments, blank lines ignored).
struct Config {
  std::map<std::string, std::string> kv;

  static Config parse(const std::string& text);
  static Config load(const std::string& path);

  bool has(const std::string& key) const { return kv.count(key) > 0; }
  std::string get(const std::string& key, const std::string& dflt = "") const;
  double num(const std::string& key, double dflt) const;
  int integer(const std::string& key, int dflt) const;
  // comma-separated list of numbers
  std::vector<double> list(const std::string& key,
                           const std::vector<double>& dflt) const;
  void set(const std::string& key, const std::string& value) { kv[key] = value; }
};

}  // namespace elastlab
