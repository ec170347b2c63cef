#include "refverify/http_clients.hpp"

#include <chrono>
#include <condition_variable>
#include <mutex>
#include <thread>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "refverify/base64.hpp"
#include "refverify/errors.hpp"
#include "refverify/image_io.hpp"

namespace refverify {

namespace {

struct ParsedUrl {
  std::string scheme_host_port;  // "http://host:port"
  std::string path_prefix;       // "" or "/v1"
};

ParsedUrl split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos)
    throw ConfigError("base url '" + url + "' must start with http:// or https://");
  const auto path_start = url.find('/', scheme_end + 3);
  ParsedUrl out;
  if (path_start == std::string::npos) {
    out.scheme_host_port = url;
  } else {
    out.scheme_host_port = url.substr(0, path_start);
    out.path_prefix = url.substr(path_start);
    while (!out.path_prefix.empty() && out.path_prefix.back() == '/') out.path_prefix.pop_back();
  }
  return out;
}

std::string body_excerpt(const std::string& body) {
  constexpr size_t kMax = 200;
  if (body.size() <= kMax) return body;
  return body.substr(0, kMax) + "...";
}

// Serializes the POST with bounded concurrency and transport retries.
class Poster {
 public:
  explicit Poster(EndpointConfig config)
      : config_(std::move(config)), url_(split_url(config_.base_url)), slots_(config_.max_concurrent) {
    client_ = std::make_unique<httplib::Client>(url_.scheme_host_port);
    client_->set_connection_timeout(10, 0);
    const auto secs = static_cast<time_t>(config_.read_timeout_seconds);
    client_->set_read_timeout(secs, 0);
    if (!config_.api_key.empty()) client_->set_bearer_token_auth(config_.api_key);
  }

  std::string post_json(const std::string& endpoint, const std::string& body) {
    Slot slot(*this);
    const std::string path = url_.path_prefix + endpoint;
    std::string last_error;
    const int attempts = config_.retry.max_retries + 1;
    for (int attempt = 0; attempt < attempts; ++attempt) {
      if (attempt > 0) {
        const auto& backoff = config_.retry.backoff_seconds;
        const double delay =
            backoff.empty() ? 0.5 : backoff[std::min<size_t>(attempt - 1, backoff.size() - 1)];
        std::this_thread::sleep_for(std::chrono::duration<double>(delay));
      }
      httplib::Result res = client_->Post(path, body, "application/json");
      if (!res) {
        last_error = httplib::to_string(res.error());
        continue;  // transport failure -> retry
      }
      if (res->status < 200 || res->status >= 300)
        throw ProtocolError("HTTP " + std::to_string(res->status) + " from " + path + ": " +
                            body_excerpt(res->body));
      return res->body;
    }
    throw TransportError("POST " + url_.scheme_host_port + path + " failed after " +
                         std::to_string(attempts) + " attempts: " + last_error);
  }

 private:
  // Counting slots without <semaphore>: a mutex-guarded counter suffices at
  // this request rate.
  struct Slot {
    explicit Slot(Poster& p) : poster(p) {
      std::unique_lock lock(p.mutex_);
      p.cv_.wait(lock, [&] { return p.in_flight_ < p.slots_; });
      ++p.in_flight_;
    }
    ~Slot() {
      {
        std::lock_guard lock(poster.mutex_);
        --poster.in_flight_;
      }
      poster.cv_.notify_one();
    }
    Poster& poster;
  };

  EndpointConfig config_;
  ParsedUrl url_;
  std::unique_ptr<httplib::Client> client_;
  std::mutex mutex_;
  std::condition_variable cv_;
  int in_flight_ = 0;
  const int slots_;
};

nlohmann::json parse_body(const std::string& body, const char* what) {
  nlohmann::json j = nlohmann::json::parse(body, nullptr, false);
  if (j.is_discarded())
    throw ProtocolError(std::string(what) + " returned malformed JSON: " + body_excerpt(body));
  return j;
}

}  // namespace

nlohmann::ordered_json build_chat_request(const VlmRequest& request) {
  validate_request(request);
  auto content = nlohmann::ordered_json::array();
  content.push_back({{"type", "text"}, {"text", request.prompt}});
  for (const auto& image : request.images) {
    const std::string b64 = base64_encode(png_encode(image));
    content.push_back(
        {{"type", "image_url"}, {"image_url", {{"url", "data:image/png;base64," + b64}}}});
  }
  nlohmann::ordered_json body;
  body["model"] = request.model_id;
  body["temperature"] = request.temperature;
  body["messages"] = nlohmann::ordered_json::array();
  body["messages"].push_back({{"role", "user"}, {"content", content}});
  return body;
}

std::string parse_chat_response(const nlohmann::json& body) {
  if (!body.contains("choices") || !body.at("choices").is_array() || body.at("choices").empty())
    throw ProtocolError("chat response has no choices");
  const auto& first = body.at("choices").at(0);
  if (!first.contains("message") || !first.at("message").contains("content") ||
      !first.at("message").at("content").is_string())
    throw ProtocolError("chat response choice lacks message.content");
  return first.at("message").at("content").get<std::string>();
}

nlohmann::ordered_json build_detect_request(const RasterImage& image,
                                            const std::vector<std::string>& classes) {
  nlohmann::ordered_json body;
  body["image"] = base64_encode(png_encode(image));
  body["classes"] = classes;
  return body;
}

std::vector<Proposal> parse_detect_response(const nlohmann::json& body,
                                            const std::string& requested_class) {
  if (!body.contains("boxes") || !body.at("boxes").is_array())
    throw ProtocolError("detector response lacks a boxes array");
  std::vector<Proposal> out;
  for (const auto& jb : body.at("boxes")) {
    if (!jb.contains("x") || !jb.contains("y") || !jb.contains("w") || !jb.contains("h"))
      throw ProtocolError("detector box requires x, y, w, h");
    Proposal p;
    try {
      p.box = BoundingBox::from_xywh(jb.at("x").get<double>(), jb.at("y").get<double>(),
                                     jb.at("w").get<double>(), jb.at("h").get<double>());
    } catch (const std::invalid_argument& e) {
      throw ProtocolError(std::string("detector box invalid: ") + e.what());
    }
    p.class_name = jb.value("class", requested_class);
    p.confidence = jb.value("score", 1.0);
    if (p.class_name.empty()) throw ProtocolError("detector box has empty class");
    if (p.confidence < 0.0 || p.confidence > 1.0)
      throw ProtocolError("detector box score outside [0,1]");
    out.push_back(std::move(p));
  }
  return out;
}

struct HttpVlmClient::Impl {
  explicit Impl(EndpointConfig config) : poster(std::move(config)) {}
  Poster poster;
};

HttpVlmClient::HttpVlmClient(EndpointConfig config)
    : impl_(std::make_unique<Impl>(std::move(config))) {}
HttpVlmClient::~HttpVlmClient() = default;

VlmReply HttpVlmClient::query(const VlmRequest& request) {
  const std::string body = build_chat_request(request).dump();
  const std::string response = impl_->poster.post_json("/chat/completions", body);
  return {parse_chat_response(parse_body(response, "vlm endpoint")), false};
}

struct HttpDetectorClient::Impl {
  explicit Impl(EndpointConfig config) : poster(std::move(config)) {}
  Poster poster;
};

HttpDetectorClient::HttpDetectorClient(EndpointConfig config)
    : impl_(std::make_unique<Impl>(std::move(config))) {}
HttpDetectorClient::~HttpDetectorClient() = default;

std::vector<Proposal> HttpDetectorClient::detect(const RasterImage& image, const std::string&,
                                                 const std::string& class_name) {
  const std::string body = build_detect_request(image, {class_name}).dump();
  const std::string response = impl_->poster.post_json("/detect", body);
  return parse_detect_response(parse_body(response, "detector endpoint"), class_name);
}

}  // namespace refverify
