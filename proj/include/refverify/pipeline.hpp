#pragma once

#include <atomic>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "refverify/backends.hpp"
#include "refverify/geometry.hpp"
#include "refverify/render.hpp"

namespace refverify {

// One box-wise True/False judgment.
struct Verdict {
  bool value = false;
  std::string raw_reply;
  int proposal_index = -1;
};

enum class DecisionPath { UniqueTrue, TieBreak, Fallback, AbstainNone, NoProposals };

const char* to_string(DecisionPath path);

struct DecisionTrace {
  std::string inferred_class;
  std::vector<Proposal> proposals;  // post-cap, in detector order
  std::vector<Verdict> verdicts;
  std::vector<int> true_set;  // ascending original indices
  std::optional<int> tie_break_choice;
  std::optional<int> fallback_choice;
  bool fallback_none = false;  // the selection reply was "none"
  int vlm_calls = 0;
};

struct RecOutcome {
  std::optional<BoundingBox> box;
  DecisionPath path = DecisionPath::NoProposals;
  DecisionTrace trace;

  bool abstained() const { return !box.has_value(); }
};

// Prompt templates. "{expr}" is replaced with the referring expression,
// "{n}" (selection only) with the number of displayed boxes.
struct PromptSet {
  std::string class_prompt =
      "What is the most relevant object class for this description: '{expr}'? "
      "Reply with only the class name (e.g. person, dog, car).";
  std::string verify_prompt =
      "The image shows one highlighted box. Description: '{expr}'. "
      "Does the description apply to the object in the highlighted box? Answer True or False.";
  std::string select_prompt =
      "The image shows {n} numbered boxes. Description: '{expr}'. "
      "Which box number best matches the description? "
      "Reply with only the number, or 'none' if no box matches.";

  // Every template must carry {expr}; the selection template must permit a
  // numeric or "none" answer.
  void validate() const;
};

struct PipelineConfig {
  PromptSet prompts;
  OverlayStyle style;
  std::string model_id = "gpt-4o";
  double temperature = 0.0;  // class / verify / single-shot select queries
  int proposal_cap = 12;
  int verify_workers = 1;  // concurrent box verifications within one run
  std::string image_id;    // identifier handed to the detector backend
};

// Stricter re-ask suffixes appended after an unparsable reply.
inline constexpr const char* kVerifyRetrySuffix = " Answer with exactly one word: True or False.";
inline constexpr const char* kSelectRetrySuffix = " Answer with only the box number, or the word none.";
inline constexpr const char* kClassRetrySuffix = " Answer with only the object class name.";

std::string instantiate_prompt(const std::string& tmpl, const std::string& expr,
                               std::optional<int> n = std::nullopt);

// Counts every query issued to the backend on behalf of one pipeline run.
class VlmSession {
 public:
  VlmSession(VlmBackend& vlm, const PipelineConfig& config) : vlm_(vlm), config_(config) {}

  VlmReply ask(const std::string& prompt, const std::optional<RasterImage>& image,
               std::optional<double> temperature = std::nullopt);
  int calls() const { return calls_.load(); }

 private:
  VlmBackend& vlm_;
  const PipelineConfig& config_;
  std::atomic<int> calls_{0};
};

// Raised when a run cannot complete; carries whatever trace accumulated so
// batch callers can still account for issued calls.
class PipelineError : public std::runtime_error {
 public:
  enum class Kind { ClassInference, Backend };
  PipelineError(Kind kind, const std::string& msg, DecisionTrace partial)
      : std::runtime_error(msg), kind(kind), partial_trace(std::move(partial)) {}
  Kind kind;
  DecisionTrace partial_trace;
};

// Single lowercase class token (or consecutive words, for bigram classes)
// from a text-only query. One stricter retry, then PipelineError.
std::string infer_class(const std::string& description, VlmSession& session,
                        const PipelineConfig& config);

// Render one highlighted box, ask, parse True/False. One stricter retry on an
// unparsable reply; a second unparsable reply counts as False with a warning.
Verdict verify_box(const RasterImage& image, const Proposal& proposal, int proposal_index,
                   const std::string& description, VlmSession& session,
                   const PipelineConfig& config);

struct Decision {
  enum class Kind { UniqueTrue, NeedTieBreak, NeedFallback } kind;
  int unique_index = -1;       // set for UniqueTrue
  std::vector<int> true_set;   // ascending; set for NeedTieBreak
};

// Pure classification of the verdict pattern. Throws on an empty list.
Decision decide(const std::vector<Verdict>& verdicts);

// Second-stage selection over the True boxes only, ascending original order.
// "none" or an unparsable reply resolves to the lowest-index True box.
int tie_break(const RasterImage& image, const std::vector<Proposal>& proposals,
              const std::vector<int>& true_set, const std::string& description,
              VlmSession& session, const PipelineConfig& config);

struct FallbackResult {
  std::optional<int> index;  // nullopt -> abstain
  bool replied_none = false;
};

// Selection over all proposals with an explicit "none" escape. Unparsable
// replies get one stricter retry, then abstain with a warning.
FallbackResult fallback_select(const RasterImage& image, const std::vector<Proposal>& proposals,
                               const std::string& description, VlmSession& session,
                               const PipelineConfig& config);

// The whole verification-first flow: class inference, class-conditioned
// proposals, box-wise verification, then unique-True / tie-break / fallback.
RecOutcome run_verification_first(const RasterImage& image, const std::string& description,
                                  DetectorBackend& detector, VlmBackend& vlm,
                                  const PipelineConfig& config);

// Control variant: one indexed overlay over all proposals and `votes`
// selection queries (1, or 3 at temperature 1.0 with majority tally).
RecOutcome run_selection_baseline(const RasterImage& image, const std::string& description,
                                  DetectorBackend& detector, VlmBackend& vlm,
                                  const PipelineConfig& config, int votes);

nlohmann::ordered_json outcome_to_json(const RecOutcome& outcome);

}  // namespace refverify
