#pragma once

#include <map>
#include <mutex>
#include <string>
#include <vector>

#include "refverify/backends.hpp"
#include "refverify/render.hpp"

namespace refverify {

// A simulated VLM that behaves exactly like the two-parameter verifier /
// selector model: it inspects the overlay it is handed, recognizes which of
// the known candidate boxes are outlined, and answers with Bernoulli(q1/q2)
// verdicts or a p-weighted selection. The referring expression must name the
// target as "target <k>" (1-based position in the layout), which the oracle
// resolves perfectly before applying its noise model.
//
// Draws come from substreams keyed by (seed, prompt, image, repeat count), so
// results are reproducible for a given seed regardless of scheduling, while
// repeated identical requests (majority voting) still get independent draws.
struct SyntheticWorld {
  SyntheticOracleParams params;
  std::vector<BoundingBox> layout;  // disjoint candidate boxes, all in frame
  std::string class_reply = "thing";
  OverlayStyle style;
  std::string verify_marker = "Answer True or False";
  std::string select_marker = "Which box number";
};

class SyntheticVlm : public VlmBackend {
 public:
  SyntheticVlm(SyntheticWorld world, int image_width, int image_height);

  VlmReply query(const VlmRequest& request) override;

  // Layout indices whose outline is present in the image, ascending.
  std::vector<int> decode_outlined(const RasterImage& image) const;

 private:
  uint64_t substream(const std::string& prompt, const RasterImage& image);

  SyntheticWorld world_;
  std::vector<IntRect> outline_rects_;
  std::mutex mutex_;
  std::map<std::pair<uint64_t, uint64_t>, uint64_t> repeat_counts_;
};

}  // namespace refverify
