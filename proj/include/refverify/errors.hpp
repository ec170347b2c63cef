#pragma once

#include <stdexcept>
#include <string>

namespace refverify {

// Network-level failure (connect/timeout). Retried by the HTTP clients.
class TransportError : public std::runtime_error {
 public:
  explicit TransportError(const std::string& msg) : std::runtime_error(msg) {}
};

// The endpoint answered, but not with something usable (bad status,
// malformed body, missing fixture). Never retried.
class ProtocolError : public std::runtime_error {
 public:
  explicit ProtocolError(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad flags, config file, dataset, or referenced path.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace refverify
