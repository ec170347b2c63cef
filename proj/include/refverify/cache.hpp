#pragma once

#include <optional>
#include <string>

#include "refverify/backends.hpp"

namespace refverify {

// Write-once response cache: one JSON file per entry under a two-level hex
// prefix tree, created atomically (temp file + rename) so concurrent writers
// are safe. Corrupt entries are ignored and overwritten.
class ResponseCache {
 public:
  explicit ResponseCache(std::string root);

  std::optional<std::string> get(const std::string& key_hex) const;
  void put(const std::string& key_hex, const std::string& reply_text,
           const std::string& model_id) const;

  const std::string& root() const { return root_; }

 private:
  std::string entry_path(const std::string& key_hex) const;
  std::string root_;
};

// Consults the cache before the wrapped backend. Nonzero-temperature requests
// bypass the cache entirely: each majority-voting draw must be independent.
class CachingVlm : public VlmBackend {
 public:
  CachingVlm(VlmBackend& inner, ResponseCache& cache) : inner_(inner), cache_(cache) {}

  VlmReply query(const VlmRequest& request) override;

 private:
  VlmBackend& inner_;
  ResponseCache& cache_;
};

}  // namespace refverify
