#include "refverify/cache.hpp"

#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "refverify/errors.hpp"

namespace fs = std::filesystem;

namespace refverify {

ResponseCache::ResponseCache(std::string root) : root_(std::move(root)) {
  if (root_.empty()) throw ConfigError("cache root path is empty");
  fs::create_directories(root_);
}

std::string ResponseCache::entry_path(const std::string& key_hex) const {
  return (fs::path(root_) / key_hex.substr(0, 2) / key_hex.substr(2, 2) / (key_hex + ".json"))
      .string();
}

std::optional<std::string> ResponseCache::get(const std::string& key_hex) const {
  const std::string path = entry_path(key_hex);
  std::ifstream in(path);
  if (!in) return std::nullopt;
  nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded() || !j.contains("reply_text") || !j.at("reply_text").is_string()) {
    std::cerr << "warning: ignoring corrupt cache entry " << path << '\n';
    return std::nullopt;
  }
  return j.at("reply_text").get<std::string>();
}

void ResponseCache::put(const std::string& key_hex, const std::string& reply_text,
                        const std::string& model_id) const {
  const fs::path path = entry_path(key_hex);
  fs::create_directories(path.parent_path());

  nlohmann::ordered_json j;
  j["key"] = key_hex;
  j["model_id"] = model_id;
  j["reply_text"] = reply_text;
  j["created_at"] = static_cast<int64_t>(std::time(nullptr));

  // Unique temp name per writer, then rename: last completed write wins and
  // readers never observe a partial file.
  std::ostringstream suffix;
  suffix << '.' << std::this_thread::get_id() << ".tmp";
  const fs::path tmp = path.string() + suffix.str();
  {
    std::ofstream out(tmp);
    if (!out) throw ConfigError("cannot write cache entry " + tmp.string());
    out << j.dump(2) << '\n';
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
  }
}

VlmReply CachingVlm::query(const VlmRequest& request) {
  if (request.temperature > 0.0) return inner_.query(request);
  const std::string key = request_key_hex(request);
  if (auto hit = cache_.get(key)) return {*hit, true};
  VlmReply reply = inner_.query(request);
  cache_.put(key, reply.text, request.model_id);
  reply.cached = false;
  return reply;
}

}  // namespace refverify
