#include "refverify/synthetic.hpp"

#include <cctype>
#include <numeric>
#include <stdexcept>

#include "refverify/errors.hpp"
#include "refverify/hash.hpp"

namespace refverify {

namespace {

// Extracts k from the first "target <k>" occurrence, 1-based.
int parse_target_index(const std::string& prompt) {
  const std::string needle = "target ";
  size_t pos = prompt.find(needle);
  while (pos != std::string::npos) {
    size_t i = pos + needle.size();
    if (i < prompt.size() && std::isdigit(static_cast<unsigned char>(prompt[i]))) {
      int value = 0;
      while (i < prompt.size() && std::isdigit(static_cast<unsigned char>(prompt[i]))) {
        value = value * 10 + (prompt[i] - '0');
        ++i;
      }
      return value;
    }
    pos = prompt.find(needle, pos + 1);
  }
  throw ProtocolError("synthetic vlm: prompt does not name a 'target <k>': " + prompt);
}

}  // namespace

SyntheticVlm::SyntheticVlm(SyntheticWorld world, int image_width, int image_height)
    : world_(std::move(world)) {
  if (world_.layout.empty()) throw std::invalid_argument("synthetic world needs candidate boxes");
  for (const auto& box : world_.layout) {
    if (!box_intersects_frame(box, image_width, image_height))
      throw std::invalid_argument("synthetic world box out of frame");
    outline_rects_.push_back(outline_rect(box, image_width, image_height));
  }
}

std::vector<int> SyntheticVlm::decode_outlined(const RasterImage& image) const {
  std::vector<int> outlined;
  const Rgb stroke = world_.style.stroke_color;
  for (size_t i = 0; i < outline_rects_.size(); ++i) {
    const IntRect& r = outline_rects_[i];
    const bool drawn = image.at(r.x0, r.y0) == stroke && image.at(r.x1, r.y0) == stroke &&
                       image.at(r.x0, r.y1) == stroke && image.at(r.x1, r.y1) == stroke;
    if (drawn) outlined.push_back(static_cast<int>(i));
  }
  return outlined;
}

uint64_t SyntheticVlm::substream(const std::string& prompt, const RasterImage& image) {
  const uint64_t prompt_hash = fnv1a64(prompt);
  const uint64_t image_digest = image.digest();
  uint64_t repeat;
  {
    std::lock_guard lock(mutex_);
    repeat = repeat_counts_[{prompt_hash, image_digest}]++;
  }
  return mix_seed({world_.params.seed, prompt_hash, image_digest, repeat});
}

VlmReply SyntheticVlm::query(const VlmRequest& request) {
  validate_request(request);
  if (request.images.empty()) return {world_.class_reply, false};

  const RasterImage& image = request.images.front();
  const int target = parse_target_index(request.prompt) - 1;
  if (target < 0 || static_cast<size_t>(target) >= world_.layout.size())
    throw ProtocolError("synthetic vlm: target index out of layout range");

  const std::vector<int> outlined = decode_outlined(image);
  Xoshiro256 rng(substream(request.prompt, image));

  if (request.prompt.find(world_.verify_marker) != std::string::npos) {
    if (outlined.size() != 1)
      throw ProtocolError("synthetic vlm: verification overlay must show exactly one box, saw " +
                          std::to_string(outlined.size()));
    const bool verdict = synthetic_verify(world_.params, outlined.front() == target, rng);
    return {verdict ? "True" : "False", false};
  }

  if (request.prompt.find(world_.select_marker) != std::string::npos) {
    if (outlined.empty())
      throw ProtocolError("synthetic vlm: selection overlay shows no known boxes");
    // Boxes are rendered in ascending layout order, so display position i
    // corresponds to outlined[i].
    std::vector<int> display(outlined.size());
    std::iota(display.begin(), display.end(), 0);
    int target_display = -1;
    for (size_t i = 0; i < outlined.size(); ++i)
      if (outlined[i] == target) target_display = static_cast<int>(i);
    const int chosen = synthetic_select(world_.params, display, target_display, rng);
    return {std::to_string(chosen + 1), false};
  }

  throw ProtocolError("synthetic vlm: unrecognized prompt kind: " + request.prompt);
}

}  // namespace refverify
