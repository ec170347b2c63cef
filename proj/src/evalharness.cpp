#include "refverify/evalharness.hpp"

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <set>
#include <thread>

#include "refverify/errors.hpp"
#include "refverify/image_io.hpp"

namespace fs = std::filesystem;

namespace refverify {

BoxFormat box_format_from_name(const std::string& name) {
  if (name == "xywh") return BoxFormat::Xywh;
  if (name == "xyxy") return BoxFormat::Xyxy;
  throw ConfigError("unknown box format '" + name + "' (expect xywh or xyxy)");
}

PipelineVariant variant_from_name(const std::string& name) {
  if (name == "verify" || name == "verification_first") return PipelineVariant::VerificationFirst;
  if (name == "select1" || name == "selection_1") return PipelineVariant::Selection1;
  if (name == "select-mv3" || name == "selection_mv3") return PipelineVariant::SelectionMv3;
  throw ConfigError("unknown variant '" + name + "' (expect verify, select1 or select-mv3)");
}

const char* to_string(PipelineVariant variant) {
  switch (variant) {
    case PipelineVariant::VerificationFirst: return "verification_first";
    case PipelineVariant::Selection1: return "selection_1";
    case PipelineVariant::SelectionMv3: return "selection_mv3";
  }
  return "?";
}

namespace {

BoundingBox box_from_json(const nlohmann::json& jb, BoxFormat format, size_t line_no) {
  if (!jb.is_array() || jb.size() != 4)
    throw ConfigError("dataset line " + std::to_string(line_no) +
                      ": box must be an array of four numbers");
  for (const auto& v : jb)
    if (!v.is_number())
      throw ConfigError("dataset line " + std::to_string(line_no) + ": box entries must be numbers");
  const double a = jb[0].get<double>(), b = jb[1].get<double>(), c = jb[2].get<double>(),
               d = jb[3].get<double>();
  try {
    return format == BoxFormat::Xywh ? BoundingBox::from_xywh(a, b, c, d)
                                     : BoundingBox(a, b, c, d);
  } catch (const std::invalid_argument& e) {
    throw ConfigError("dataset line " + std::to_string(line_no) + ": " + e.what());
  }
}

}  // namespace

std::vector<EvalItem> ingest_dataset(const std::string& path, BoxFormat default_format) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open dataset '" + path + "'");
  const fs::path base = fs::path(path).parent_path();

  std::vector<EvalItem> items;
  std::set<std::string> seen_ids;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object())
      throw ConfigError("dataset line " + std::to_string(line_no) + ": malformed JSON object");
    for (const char* field : {"id", "image", "expr", "box"})
      if (!j.contains(field))
        throw ConfigError("dataset line " + std::to_string(line_no) + ": missing field '" +
                          field + "'");

    EvalItem item;
    item.item_id = j.at("id").get<std::string>();
    item.image_id = j.at("image").get<std::string>();
    item.expression = j.at("expr").get<std::string>();
    if (item.expression.empty())
      throw ConfigError("dataset line " + std::to_string(line_no) + ": empty expression");
    if (!seen_ids.insert(item.item_id).second)
      throw ConfigError("dataset line " + std::to_string(line_no) + ": duplicate id '" +
                        item.item_id + "'");

    BoxFormat format = default_format;
    if (j.contains("box_format")) format = box_format_from_name(j.at("box_format").get<std::string>());
    item.gt_box = box_from_json(j.at("box"), format, line_no);

    const fs::path image_path(item.image_id);
    item.image_path = image_path.is_absolute() ? image_path.string() : (base / image_path).string();
    items.push_back(std::move(item));
  }
  return items;
}

namespace {

// Decoded images shared across items in one eval run.
class ImagePool {
 public:
  const RasterImage& load(const std::string& path) {
    {
      std::lock_guard lock(mutex_);
      auto it = images_.find(path);
      if (it != images_.end()) return it->second;
    }
    RasterImage image = read_image(path);
    std::lock_guard lock(mutex_);
    return images_.emplace(path, std::move(image)).first->second;
  }

 private:
  std::mutex mutex_;
  std::map<std::string, RasterImage> images_;
};

PerItemResult eval_one(const EvalItem& item, DetectorBackend& detector, VlmBackend& vlm,
                       const EvalOptions& options, ImagePool& pool) {
  PerItemResult result;
  result.item_id = item.item_id;
  PipelineConfig config = options.pipeline;
  config.image_id = item.image_id;

  RecOutcome outcome;
  try {
    const RasterImage& image = pool.load(item.image_path);
    switch (options.variant) {
      case PipelineVariant::VerificationFirst:
        outcome = run_verification_first(image, item.expression, detector, vlm, config);
        break;
      case PipelineVariant::Selection1:
        outcome = run_selection_baseline(image, item.expression, detector, vlm, config, 1);
        break;
      case PipelineVariant::SelectionMv3:
        outcome = run_selection_baseline(image, item.expression, detector, vlm, config, 3);
        break;
    }
  } catch (const PipelineError& e) {
    // Failed items score as abstaining misses so ACC stays comparable.
    result.path = DecisionPath::AbstainNone;
    result.error = e.what();
    result.vlm_calls = e.partial_trace.vlm_calls;
    return result;
  } catch (const std::exception& e) {
    result.path = DecisionPath::AbstainNone;
    result.error = e.what();
    return result;
  }

  result.path = outcome.path;
  result.vlm_calls = outcome.trace.vlm_calls;
  if (outcome.box) {
    result.iou = iou(*outcome.box, item.gt_box);
    result.hit = is_hit(*outcome.box, item.gt_box);
  }
  return result;
}

}  // namespace

EvalReport run_eval(const std::vector<EvalItem>& items, DetectorBackend& detector,
                    VlmBackend& vlm, const EvalOptions& options) {
  if (items.empty()) throw std::invalid_argument("empty dataset");

  ImagePool pool;
  std::vector<PerItemResult> results(items.size());
  const int workers = std::max(1, std::min<int>(options.workers, static_cast<int>(items.size())));
  if (workers == 1) {
    for (size_t i = 0; i < items.size(); ++i)
      results[i] = eval_one(items[i], detector, vlm, options, pool);
  } else {
    std::atomic<size_t> next{0};
    auto worker = [&] {
      for (;;) {
        const size_t i = next.fetch_add(1);
        if (i >= items.size()) return;
        results[i] = eval_one(items[i], detector, vlm, options, pool);
      }
    };
    std::vector<std::thread> pool_threads;
    for (int w = 0; w < workers; ++w) pool_threads.emplace_back(worker);
    for (auto& t : pool_threads) t.join();
  }

  EvalReport report;
  report.n_items = items.size();
  for (const char* name : {"UniqueTrue", "TieBreak", "Fallback", "AbstainNone", "NoProposals"})
    report.path_histogram[name] = 0;
  size_t hits = 0;
  for (auto& r : results) {
    if (r.hit) ++hits;
    if (r.path == DecisionPath::AbstainNone || r.path == DecisionPath::NoProposals)
      ++report.abstain_count;
    report.vlm_call_total += r.vlm_calls;
    ++report.path_histogram[to_string(r.path)];
    report.per_item.push_back(std::move(r));
  }
  report.acc_at_05 = static_cast<double>(hits) / static_cast<double>(items.size());
  return report;
}

nlohmann::ordered_json report_to_json(const EvalReport& report) {
  nlohmann::ordered_json j;
  j["n_items"] = report.n_items;
  j["acc_at_05"] = report.acc_at_05;
  j["abstain_count"] = report.abstain_count;
  j["vlm_call_total"] = report.vlm_call_total;
  nlohmann::ordered_json hist;
  for (const char* name : {"UniqueTrue", "TieBreak", "Fallback", "AbstainNone", "NoProposals"})
    hist[name] = report.path_histogram.count(name) ? report.path_histogram.at(name) : 0;
  j["path_histogram"] = hist;
  j["per_item"] = nlohmann::ordered_json::array();
  for (const auto& r : report.per_item) {
    nlohmann::ordered_json ji;
    ji["item_id"] = r.item_id;
    ji["path"] = to_string(r.path);
    ji["iou"] = r.iou;
    ji["hit"] = r.hit;
    ji["vlm_calls"] = r.vlm_calls;
    ji["error"] = r.error ? nlohmann::ordered_json(*r.error) : nlohmann::ordered_json();
    j["per_item"].push_back(ji);
  }
  return j;
}

std::string report_to_text(const EvalReport& report) {
  char acc[32];
  std::snprintf(acc, sizeof(acc), "%.6f", report.acc_at_05);
  size_t hits = 0;
  for (const auto& r : report.per_item)
    if (r.hit) ++hits;
  std::string out;
  out += "items:       " + std::to_string(report.n_items) + "\n";
  out += "ACC@0.5:     " + std::string(acc) + " (" + std::to_string(hits) + "/" +
         std::to_string(report.n_items) + ")\n";
  out += "abstentions: " + std::to_string(report.abstain_count) + "\n";
  out += "vlm calls:   " + std::to_string(report.vlm_call_total) + "\n";
  out += "paths:      ";
  for (const char* name : {"UniqueTrue", "TieBreak", "Fallback", "AbstainNone", "NoProposals"}) {
    const size_t count =
        report.path_histogram.count(name) ? report.path_histogram.at(name) : 0;
    out += " " + std::string(name) + "=" + std::to_string(count);
  }
  out += "\n";
  return out;
}

}  // namespace refverify
