#include "refverify/config.hpp"

#include <cstdlib>
#include <fstream>
#include <set>

#include "refverify/errors.hpp"

namespace refverify {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::string unquote(const std::string& s) {
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') return s.substr(1, s.size() - 2);
  return s;
}

int parse_int(const std::string& value, const std::string& key) {
  try {
    return std::stoi(value);
  } catch (...) {
    throw ConfigError("config key '" + key + "' expects an integer, got '" + value + "'");
  }
}

double parse_double(const std::string& value, const std::string& key) {
  try {
    return std::stod(value);
  } catch (...) {
    throw ConfigError("config key '" + key + "' expects a number, got '" + value + "'");
  }
}

}  // namespace

std::map<std::string, std::string> parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::map<std::string, std::string> entries;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    // strip comments, respecting quoted values
    bool in_quotes = false;
    for (size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"') in_quotes = !in_quotes;
      if (line[i] == '#' && !in_quotes) {
        line.resize(i);
        break;
      }
    }
    const std::string stripped = trim(line);
    if (stripped.empty()) continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(line_no) + ": expected 'key = value'");
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = unquote(trim(stripped.substr(eq + 1)));
    if (key.empty())
      throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
    entries[key] = value;
  }
  return entries;
}

AppConfig load_app_config(const std::optional<std::string>& config_path) {
  AppConfig config;
  if (const char* key = std::getenv("REFVERIFY_API_KEY")) config.vlm_api_key = key;

  if (!config_path) return config;
  static const std::set<std::string> known = {
      "vlm.base_url",       "vlm.model_id",          "vlm.temperature", "vlm.retries",
      "detector.base_url",  "detector.fixture_path", "detector.retries", "concurrency.limit",
      "eval.workers",       "pipeline.proposal_cap", "cache.dir",
  };
  for (const auto& [key, value] : parse_config_file(*config_path)) {
    if (!known.count(key)) throw ConfigError("unknown config key '" + key + "'");
    if (key == "vlm.base_url") config.vlm_base_url = value;
    else if (key == "vlm.model_id") config.vlm_model_id = value;
    else if (key == "vlm.temperature") config.vlm_temperature = parse_double(value, key);
    else if (key == "vlm.retries") config.vlm_retries = parse_int(value, key);
    else if (key == "detector.base_url") config.detector_base_url = value;
    else if (key == "detector.fixture_path") config.detector_fixture_path = value;
    else if (key == "detector.retries") config.detector_retries = parse_int(value, key);
    else if (key == "concurrency.limit") config.concurrency_limit = parse_int(value, key);
    else if (key == "eval.workers") config.workers = parse_int(value, key);
    else if (key == "pipeline.proposal_cap") config.proposal_cap = parse_int(value, key);
    else if (key == "cache.dir") config.cache_dir = value;
  }
  return config;
}

}  // namespace refverify
