#include "refverify/backends.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "refverify/errors.hpp"
#include "refverify/hash.hpp"

namespace fs = std::filesystem;

namespace refverify {

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

// Walk the reply as alternating word / digit-run tokens.
template <typename Fn>
void for_each_token(const std::string& text, Fn&& fn) {
  size_t i = 0;
  while (i < text.size()) {
    const unsigned char c = static_cast<unsigned char>(text[i]);
    if (std::isalpha(c)) {
      size_t j = i;
      while (j < text.size() && std::isalpha(static_cast<unsigned char>(text[j]))) ++j;
      if (fn(text.substr(i, j - i), false)) return;
      i = j;
    } else if (std::isdigit(c)) {
      size_t j = i;
      while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j]))) ++j;
      if (fn(text.substr(i, j - i), true)) return;
      i = j;
    } else {
      ++i;
    }
  }
}

std::string format_temperature(double t) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", t);
  return buf;
}

nlohmann::json load_json_file(const std::string& path, const char* what) {
  std::ifstream in(path);
  if (!in) throw ConfigError(std::string("cannot open ") + what + " '" + path + "'");
  nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded())
    throw ConfigError(std::string("malformed JSON in ") + what + " '" + path + "'");
  return j;
}

Proposal proposal_from_json(const nlohmann::json& jb, const std::string& fallback_class,
                            const char* context) {
  if (!jb.contains("x") || !jb.contains("y") || !jb.contains("w") || !jb.contains("h"))
    throw ProtocolError(std::string(context) + ": box requires x, y, w, h");
  Proposal p;
  p.box = BoundingBox::from_xywh(jb.at("x").get<double>(), jb.at("y").get<double>(),
                                 jb.at("w").get<double>(), jb.at("h").get<double>());
  p.class_name = jb.value("class", fallback_class);
  p.confidence = jb.value("score", 1.0);
  if (p.class_name.empty()) throw ProtocolError(std::string(context) + ": empty class name");
  if (p.confidence < 0.0 || p.confidence > 1.0)
    throw ProtocolError(std::string(context) + ": score outside [0,1]");
  return p;
}

}  // namespace

void validate_request(const VlmRequest& request) {
  if (request.prompt.empty()) throw std::invalid_argument("vlm request prompt is empty");
  if (request.images.size() > 1)
    throw std::invalid_argument("vlm request carries more than one image");
  if (request.temperature < 0) throw std::invalid_argument("temperature must be nonnegative");
}

std::optional<bool> parse_truefalse(const std::string& reply) {
  std::optional<bool> result;
  for_each_token(reply, [&](const std::string& token, bool is_number) {
    if (is_number) return false;
    const std::string t = lower(token);
    if (t == "true" || t == "yes") {
      result = true;
      return true;
    }
    if (t == "false" || t == "no") {
      result = false;
      return true;
    }
    return false;
  });
  return result;
}

IndexReply parse_index(const std::string& reply, int n) {
  if (n < 1) throw std::invalid_argument("parse_index requires n >= 1");
  IndexReply out = IndexReply::unparsable();
  for_each_token(reply, [&](const std::string& token, bool is_number) {
    if (is_number) {
      // Digit runs longer than needed can't be in range; avoid overflow.
      if (token.size() > 9) {
        out = IndexReply::unparsable();
        return true;
      }
      const long value = std::stol(token);
      out = (value >= 1 && value <= n) ? IndexReply::at(static_cast<int>(value) - 1)
                                       : IndexReply::unparsable();
      return true;
    }
    if (lower(token) == "none") {
      out = IndexReply::none();
      return true;
    }
    return false;
  });
  return out;
}

uint64_t request_key(const VlmRequest& request) {
  Fnv1a64 h;
  h.field(request.model_id);
  h.field(format_temperature(request.temperature));
  h.field(request.prompt);
  for (const auto& image : request.images) {
    const uint64_t d = image.digest();
    uint8_t bytes[8];
    for (int i = 0; i < 8; ++i) bytes[i] = static_cast<uint8_t>((d >> (8 * i)) & 0xFF);
    h.bytes(bytes, sizeof(bytes));
  }
  return h.value();
}

std::string request_key_hex(const VlmRequest& request) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(request_key(request)));
  return buf;
}

// ---- ScriptedVlm ----

void ScriptedVlm::add_reply(const std::string& prompt, const std::string& reply) {
  std::lock_guard lock(mutex_);
  by_prompt_[prompt] = reply;
}

void ScriptedVlm::add_reply(const std::string& prompt, uint64_t image_digest,
                            const std::string& reply) {
  std::lock_guard lock(mutex_);
  keyed_[{prompt, image_digest}] = reply;
}

VlmReply ScriptedVlm::query(const VlmRequest& request) {
  validate_request(request);
  std::lock_guard lock(mutex_);
  Call call{request.prompt, std::nullopt, request.temperature};
  if (!request.images.empty()) call.image_digest = request.images.front().digest();
  calls_.push_back(call);

  if (call.image_digest) {
    auto it = keyed_.find({request.prompt, *call.image_digest});
    if (it != keyed_.end()) return {it->second, false};
  }
  auto it = by_prompt_.find(request.prompt);
  if (it != by_prompt_.end()) return {it->second, false};
  throw ProtocolError("scripted vlm has no reply for prompt: " + request.prompt);
}

std::vector<ScriptedVlm::Call> ScriptedVlm::calls() const {
  std::lock_guard lock(mutex_);
  return calls_;
}

// ---- StubDetector ----

void StubDetector::add(const std::string& image_id, const std::string& class_name,
                       std::vector<Proposal> proposals) {
  keyed_[{image_id, class_name}] = std::move(proposals);
}

std::vector<Proposal> StubDetector::detect(const RasterImage&, const std::string& image_id,
                                           const std::string& class_name) {
  if (fixed_) return *fixed_;
  auto it = keyed_.find({image_id, class_name});
  if (it != keyed_.end()) return it->second;
  return {};
}

// ---- FixtureDetector ----

FixtureDetector::FixtureDetector(const std::string& path) {
  const nlohmann::json j = load_json_file(path, "detector fixture");
  if (!j.is_object()) throw ConfigError("detector fixture '" + path + "' must be a JSON object");
  for (const auto& [image_id, classes] : j.items()) {
    if (!classes.is_object())
      throw ConfigError("detector fixture '" + path + "': entry '" + image_id +
                        "' must map classes to box lists");
    for (const auto& [class_name, boxes] : classes.items()) {
      std::vector<Proposal> proposals;
      for (const auto& jb : boxes)
        proposals.push_back(proposal_from_json(jb, class_name, "detector fixture"));
      entries_[{image_id, class_name}] = std::move(proposals);
    }
  }
}

std::vector<Proposal> FixtureDetector::detect(const RasterImage&, const std::string& image_id,
                                              const std::string& class_name) {
  auto it = entries_.find({image_id, class_name});
  if (it != entries_.end()) return it->second;
  return {};
}

// ---- ReplayVlm / RecordingVlm ----

ReplayVlm::ReplayVlm(std::string dir) : dir_(std::move(dir)) {}

VlmReply ReplayVlm::query(const VlmRequest& request) {
  validate_request(request);
  const fs::path file = fs::path(dir_) / (request_key_hex(request) + ".json");
  if (!fs::exists(file))
    throw ProtocolError("no recorded fixture " + file.string() + " for prompt: " + request.prompt);
  const nlohmann::json j = load_json_file(file.string(), "wire fixture");
  if (!j.contains("response") || !j.at("response").contains("text"))
    throw ProtocolError("wire fixture " + file.string() + " lacks response.text");
  return {j.at("response").at("text").get<std::string>(), false};
}

RecordingVlm::RecordingVlm(VlmBackend& inner, std::string dir) : inner_(inner), dir_(std::move(dir)) {
  fs::create_directories(dir_);
}

VlmReply RecordingVlm::query(const VlmRequest& request) {
  const VlmReply reply = inner_.query(request);
  const std::string key = request_key_hex(request);
  const fs::path file = fs::path(dir_) / (key + ".json");
  if (!fs::exists(file)) {
    nlohmann::ordered_json j;
    j["request"]["model_id"] = request.model_id;
    j["request"]["temperature"] = request.temperature;
    j["request"]["prompt"] = request.prompt;
    auto digests = nlohmann::ordered_json::array();
    for (const auto& image : request.images) {
      char buf[17];
      std::snprintf(buf, sizeof(buf), "%016llx",
                    static_cast<unsigned long long>(image.digest()));
      digests.push_back(buf);
    }
    j["request"]["image_digests"] = digests;
    j["response"]["text"] = reply.text;
    const fs::path tmp = fs::path(dir_) / (key + ".tmp");
    std::ofstream out(tmp);
    out << j.dump(2) << '\n';
    out.close();
    fs::rename(tmp, file);
  }
  return reply;
}

// ---- synthetic oracle primitives ----

bool synthetic_verify(const SyntheticOracleParams& oracle, bool is_target, Xoshiro256& rng) {
  return rng.bernoulli(is_target ? oracle.q1 : oracle.q2);
}

int synthetic_select(const SyntheticOracleParams& oracle, const std::vector<int>& candidates,
                     int target_index, Xoshiro256& rng) {
  if (candidates.empty()) throw std::invalid_argument("synthetic_select needs candidates");
  const auto target_pos =
      std::find(candidates.begin(), candidates.end(), target_index) - candidates.begin();
  const bool target_present = static_cast<size_t>(target_pos) < candidates.size();
  if (!target_present)
    return candidates[rng.uniform_below(candidates.size())];
  if (candidates.size() == 1) return candidates.front();
  if (rng.bernoulli(oracle.p)) return target_index;
  const uint64_t other = rng.uniform_below(candidates.size() - 1);
  const size_t skip_adjusted = other < static_cast<uint64_t>(target_pos) ? other : other + 1;
  return candidates[skip_adjusted];
}

}  // namespace refverify
