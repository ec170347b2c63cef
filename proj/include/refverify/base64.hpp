#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace refverify {

std::string base64_encode(const uint8_t* data, size_t len);
std::string base64_encode(const std::vector<uint8_t>& data);

// Throws ProtocolError on characters outside the base64 alphabet.
std::vector<uint8_t> base64_decode(const std::string& text);

}  // namespace refverify
