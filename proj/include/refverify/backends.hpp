#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "refverify/geometry.hpp"
#include "refverify/image.hpp"
#include "refverify/rng.hpp"

namespace refverify {

// Candidate box from a detector, tagged with the class it was queried for.
struct Proposal {
  BoundingBox box;
  std::string class_name;
  double confidence = 1.0;  // in [0,1]
};

struct VlmRequest {
  std::string prompt;
  std::vector<RasterImage> images;  // at most one in this artifact's flows
  double temperature = 0.0;
  std::string model_id;
};

struct VlmReply {
  std::string text;
  bool cached = false;
};

// The probabilistic model parameters behind the synthetic backends: q1/q2 are
// the True rates for the target and a distractor, p the chance a selection
// prompt picks the target when it is among the shown candidates.
struct SyntheticOracleParams {
  double q1 = 0.5;
  double q2 = 0.5;
  double p = 0.5;
  uint64_t seed = 0;
};

void validate_request(const VlmRequest& request);

class DetectorBackend {
 public:
  virtual ~DetectorBackend() = default;
  // Proposals in the backend's native order; the order is preserved all the
  // way into decision traces. Empty is a valid result, not an error.
  virtual std::vector<Proposal> detect(const RasterImage& image, const std::string& image_id,
                                       const std::string& class_name) = 0;
};

class VlmBackend {
 public:
  virtual ~VlmBackend() = default;
  virtual VlmReply query(const VlmRequest& request) = 0;
};

// First standalone token among {true, yes} / {false, no}, case-insensitive,
// punctuation and markdown ignored. nullopt when no such token appears.
std::optional<bool> parse_truefalse(const std::string& reply);

struct IndexReply {
  enum class Kind { Index, None, Unparsable } kind = Kind::Unparsable;
  int index = -1;  // 0-based, set when kind == Index

  static IndexReply at(int i) { return {Kind::Index, i}; }
  static IndexReply none() { return {Kind::None, -1}; }
  static IndexReply unparsable() { return {Kind::Unparsable, -1}; }
  bool operator==(const IndexReply&) const = default;
};

// First integer token in 1..n comes back 0-based; the standalone word "none"
// is the abstain sentinel; everything else (including out-of-range integers)
// is unparsable.
IndexReply parse_index(const std::string& reply, int n);

// Stable content key for caching and wire replay:
// hash(model_id, temperature, prompt, image raster bytes).
uint64_t request_key(const VlmRequest& request);
std::string request_key_hex(const VlmRequest& request);

// Deterministic test backend: a pure function of its program and the request.
// Replies are keyed by exact prompt text, optionally narrowed by the image
// digest so per-proposal overlays can be told apart. Unmatched requests throw,
// which keeps scenario scripts honest.
class ScriptedVlm : public VlmBackend {
 public:
  void add_reply(const std::string& prompt, const std::string& reply);
  void add_reply(const std::string& prompt, uint64_t image_digest, const std::string& reply);

  VlmReply query(const VlmRequest& request) override;

  struct Call {
    std::string prompt;
    std::optional<uint64_t> image_digest;
    double temperature = 0.0;
  };
  std::vector<Call> calls() const;

 private:
  mutable std::mutex mutex_;
  std::map<std::pair<std::string, uint64_t>, std::string> keyed_;
  std::map<std::string, std::string> by_prompt_;
  std::vector<Call> calls_;
};

// In-memory detector stub. Either a fixed proposal list for every query, or
// per-(image_id, class) entries.
class StubDetector : public DetectorBackend {
 public:
  StubDetector() = default;
  explicit StubDetector(std::vector<Proposal> fixed) : fixed_(std::move(fixed)) {}

  void add(const std::string& image_id, const std::string& class_name,
           std::vector<Proposal> proposals);

  std::vector<Proposal> detect(const RasterImage& image, const std::string& image_id,
                               const std::string& class_name) override;

 private:
  std::optional<std::vector<Proposal>> fixed_;
  std::map<std::pair<std::string, std::string>, std::vector<Proposal>> keyed_;
};

// File-backed detector fixture: JSON mapping image_id -> class -> boxes in
// [x, y, w, h] form with optional "score". Unknown keys yield empty results.
class FixtureDetector : public DetectorBackend {
 public:
  explicit FixtureDetector(const std::string& path);

  std::vector<Proposal> detect(const RasterImage& image, const std::string& image_id,
                               const std::string& class_name) override;

 private:
  std::map<std::pair<std::string, std::string>, std::vector<Proposal>> entries_;
};

// Replays recorded wire exchanges from a directory of {request-hash}.json
// files. A request with no recorded file is a protocol error.
class ReplayVlm : public VlmBackend {
 public:
  explicit ReplayVlm(std::string dir);
  VlmReply query(const VlmRequest& request) override;

 private:
  std::string dir_;
};

// Wraps another backend and records every exchange in ReplayVlm's format.
// Files are write-once.
class RecordingVlm : public VlmBackend {
 public:
  RecordingVlm(VlmBackend& inner, std::string dir);
  VlmReply query(const VlmRequest& request) override;

 private:
  VlmBackend& inner_;
  std::string dir_;
};

// One Bernoulli draw of the oracle's verifier: success rate q1 for the target
// box, q2 for a distractor.
bool synthetic_verify(const SyntheticOracleParams& oracle, bool is_target, Xoshiro256& rng);

// Oracle's selector over an arbitrary candidate list: picks target_index with
// probability p when present (otherwise a uniform non-target candidate);
// uniform over all candidates when the target is absent.
int synthetic_select(const SyntheticOracleParams& oracle, const std::vector<int>& candidates,
                     int target_index, Xoshiro256& rng);

}  // namespace refverify
