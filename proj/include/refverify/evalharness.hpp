#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "refverify/geometry.hpp"
#include "refverify/pipeline.hpp"

namespace refverify {

struct EvalItem {
  std::string item_id;
  std::string image_path;  // resolved against the dataset file's directory
  std::string image_id;    // the raw image reference, used as the detector key
  std::string expression;
  BoundingBox gt_box;
};

enum class BoxFormat { Xywh, Xyxy };

BoxFormat box_format_from_name(const std::string& name);

// JSONL, one object per line: {"id", "image", "expr", "box", "box_format"?}.
// Boxes default to `default_format`; a per-line "box_format" overrides it.
// Malformed lines and duplicate ids abort with the offending line number.
std::vector<EvalItem> ingest_dataset(const std::string& path, BoxFormat default_format);

enum class PipelineVariant { VerificationFirst, Selection1, SelectionMv3 };

PipelineVariant variant_from_name(const std::string& name);
const char* to_string(PipelineVariant variant);

struct PerItemResult {
  std::string item_id;
  DecisionPath path = DecisionPath::NoProposals;
  double iou = 0.0;
  bool hit = false;
  int vlm_calls = 0;
  std::optional<std::string> error;
};

struct EvalReport {
  size_t n_items = 0;
  double acc_at_05 = 0.0;
  size_t abstain_count = 0;
  int64_t vlm_call_total = 0;
  std::map<std::string, size_t> path_histogram;  // keyed by decision-path name
  std::vector<PerItemResult> per_item;           // dataset order
};

struct EvalOptions {
  PipelineVariant variant = PipelineVariant::VerificationFirst;
  PipelineConfig pipeline;
  int workers = 1;  // concurrent items
};

// Runs the chosen variant over every item. Item failures (backend errors)
// are scored as abstaining misses with an error note; the batch never aborts.
EvalReport run_eval(const std::vector<EvalItem>& items, DetectorBackend& detector,
                    VlmBackend& vlm, const EvalOptions& options);

nlohmann::ordered_json report_to_json(const EvalReport& report);
std::string report_to_text(const EvalReport& report);

}  // namespace refverify
