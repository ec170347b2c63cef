#pragma once

#include <map>
#include <optional>
#include <string>

namespace refverify {

// Resolved application settings. Precedence: command-line flags over config
// file over environment (REFVERIFY_API_KEY).
struct AppConfig {
  std::string vlm_base_url;
  std::string vlm_model_id = "gpt-4o";
  std::string vlm_api_key;
  double vlm_temperature = 0.0;
  int vlm_retries = 2;

  std::string detector_base_url;
  std::string detector_fixture_path;
  int detector_retries = 2;

  int concurrency_limit = 4;  // outbound HTTP cap
  int workers = 1;            // eval items in flight
  int proposal_cap = 12;
  std::string cache_dir;
};

// Flat dotted-key "key = value" file (a TOML subset): '#' comments, optional
// double quotes around string values. Unknown keys are errors.
std::map<std::string, std::string> parse_config_file(const std::string& path);

AppConfig load_app_config(const std::optional<std::string>& config_path);

}  // namespace refverify
