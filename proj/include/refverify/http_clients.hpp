#pragma once

#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "refverify/backends.hpp"

namespace refverify {

// Transport-level retries only; protocol errors (bad status, bad body) are
// never retried.
struct RetryPolicy {
  int max_retries = 2;
  std::vector<double> backoff_seconds = {0.5, 2.0};
};

struct EndpointConfig {
  std::string base_url;  // e.g. "http://localhost:8000/v1"
  std::string api_key;   // empty -> no Authorization header
  RetryPolicy retry;
  int max_concurrent = 4;
  double read_timeout_seconds = 120.0;
};

// Request/response codecs are split out from transport so wire shapes can be
// pinned by golden tests without a server.

// OpenAI-compatible chat completion body: one user message whose content is
// the prompt text plus the PNG-encoded image as a base64 data URL.
nlohmann::ordered_json build_chat_request(const VlmRequest& request);
std::string parse_chat_response(const nlohmann::json& body);

nlohmann::ordered_json build_detect_request(const RasterImage& image,
                                            const std::vector<std::string>& classes);
std::vector<Proposal> parse_detect_response(const nlohmann::json& body,
                                            const std::string& requested_class);

class HttpVlmClient : public VlmBackend {
 public:
  explicit HttpVlmClient(EndpointConfig config);
  ~HttpVlmClient() override;
  VlmReply query(const VlmRequest& request) override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

class HttpDetectorClient : public DetectorBackend {
 public:
  explicit HttpDetectorClient(EndpointConfig config);
  ~HttpDetectorClient() override;
  std::vector<Proposal> detect(const RasterImage& image, const std::string& image_id,
                               const std::string& class_name) override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace refverify
