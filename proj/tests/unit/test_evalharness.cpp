#include <doctest.h>

#include "refverify/errors.hpp"
#include "refverify/evalharness.hpp"
#include "refverify/image_io.hpp"
#include "test_util.hpp"

using namespace refverify;

namespace {

// One shared 100x40 image; items are distinguished by expression, which maps
// to a distinct inferred class and hence a distinct detector fixture entry.
struct Bench {
  testutil::TempDir dir{"bench"};
  RasterImage image{100, 40, Rgb{128, 128, 128}};
  ScriptedVlm vlm;
  StubDetector detector;
  PipelineConfig config;
  std::vector<EvalItem> items;

  // Adds an item whose single proposal is verified True.
  void add_unique_true_item(const std::string& id, const BoundingBox& proposal_box,
                            const BoundingBox& gt_box) {
    const std::string expr = "object " + id;
    const std::string cls = "cls_" + id;
    vlm.add_reply(instantiate_prompt(config.prompts.class_prompt, expr), cls);
    detector.add("shared.png", cls, {{proposal_box, cls, 0.9}});
    const RasterImage overlay = render_single_box(image, proposal_box, config.style);
    vlm.add_reply(instantiate_prompt(config.prompts.verify_prompt, expr), overlay.digest(),
                  "True");
    items.push_back({id, dir.file("shared.png"), "shared.png", expr, gt_box});
  }

  Bench() { write_png(dir.file("shared.png"), image); }

  EvalReport run(int workers = 1) {
    EvalOptions options;
    options.pipeline = config;
    options.workers = workers;
    return run_eval(items, detector, vlm, options);
  }
};

}  // namespace

TEST_CASE("dataset ingestion converts xywh and validates") {
  testutil::TempDir dir("ingest");
  const std::string path = dir.file("data.jsonl");
  testutil::write_file(path,
                       R"({"id":"a1","image":"img.png","expr":"the left dog","box":[10,20,30,40]}
{"id":"a2","image":"img.png","expr":"the right dog","box":[10,20,40,60],"box_format":"xyxy"}

{"id":"a3","image":"/abs/img.png","expr":"x","box":[0,0,5,5]}
)");

  const auto items = ingest_dataset(path, BoxFormat::Xywh);
  REQUIRE(items.size() == 3);
  CHECK(items[0].gt_box == BoundingBox(10, 20, 40, 60));  // xywh -> corners
  CHECK(items[1].gt_box == BoundingBox(10, 20, 40, 60));  // per-line xyxy identity
  CHECK(items[0].item_id == "a1");
  CHECK(items[0].image_id == "img.png");
  CHECK(items[0].image_path == dir.file("img.png"));  // resolved against the dataset dir
  CHECK(items[2].image_path == "/abs/img.png");       // absolute paths pass through

  // same box through both formats
  CHECK(items[0].gt_box == items[1].gt_box);
}

TEST_CASE("dataset ingestion error reporting") {
  testutil::TempDir dir("ingest_bad");
  const auto expect_error = [&](const std::string& content, const std::string& needle) {
    const std::string path = dir.file("d.jsonl");
    testutil::write_file(path, content);
    try {
      ingest_dataset(path, BoxFormat::Xywh);
      FAIL_CHECK("expected ConfigError for: " << content);
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find(needle) != std::string::npos);
    }
  };

  expect_error("{\"id\":\"a\",\"image\":\"i\",\"expr\":\"e\",\"box\":[1,2,3,4]}\nnot json\n",
               "line 2");
  expect_error("{\"id\":\"a\",\"image\":\"i\",\"expr\":\"e\",\"box\":[1,2,3]}\n", "box");
  expect_error("{\"id\":\"a\",\"image\":\"i\",\"expr\":\"e\"}\n", "box");
  expect_error("{\"id\":\"a\",\"image\":\"i\",\"expr\":\"\",\"box\":[1,2,3,4]}\n", "expression");
  expect_error(
      "{\"id\":\"a\",\"image\":\"i\",\"expr\":\"e\",\"box\":[1,2,3,4]}\n"
      "{\"id\":\"a\",\"image\":\"i\",\"expr\":\"e\",\"box\":[1,2,3,4]}\n",
      "duplicate id");
  expect_error("{\"id\":\"a\",\"image\":\"i\",\"expr\":\"e\",\"box\":[1,2,3,4],\"box_format\":\"zz\"}\n",
               "box format");

  testutil::write_file(dir.file("empty.jsonl"), "");
  CHECK(ingest_dataset(dir.file("empty.jsonl"), BoxFormat::Xywh).empty());
  CHECK_THROWS_AS(ingest_dataset(dir.file("missing.jsonl"), BoxFormat::Xywh), ConfigError);
}

TEST_CASE("run_eval scores hits, misses and self-consistency") {
  Bench bench;
  const BoundingBox gt{10, 4, 20, 14};
  // IoU 1.0 -> hit
  bench.add_unique_true_item("i1", gt, gt);
  // IoU 0.6 -> hit: proposal shifted down 2.5 of 10
  bench.add_unique_true_item("i2", {10, 6.5, 20, 16.5}, gt);
  // IoU 1/3 -> miss
  bench.add_unique_true_item("i3", {10, 9, 20, 19}, gt);

  const EvalReport report = bench.run();
  CHECK(report.n_items == 3);
  CHECK(report.acc_at_05 == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(report.abstain_count == 0);
  CHECK(report.vlm_call_total == 6);  // (class + one verification) per item
  CHECK(report.path_histogram.at("UniqueTrue") == 3);

  REQUIRE(report.per_item.size() == 3);
  CHECK(report.per_item[0].iou == doctest::Approx(1.0));
  CHECK(report.per_item[1].iou == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(report.per_item[2].iou == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(report.per_item[0].item_id == "i1");  // dataset order

  // histogram totals the items
  size_t histogram_sum = 0;
  for (const auto& [_, count] : report.path_histogram) histogram_sum += count;
  CHECK(histogram_sum == report.n_items);

  // report accuracy equals acc_at over the per-item hits
  size_t hits = 0;
  for (const auto& r : report.per_item)
    if (r.hit) ++hits;
  CHECK(report.acc_at_05 == static_cast<double>(hits) / report.n_items);
}

TEST_CASE("failed items are scored as misses with an error note") {
  Bench bench;
  const BoundingBox gt{10, 4, 20, 14};
  bench.add_unique_true_item("ok", gt, gt);

  // an item whose verification reply is not scripted -> ProtocolError inside
  const std::string expr = "object broken";
  bench.vlm.add_reply(instantiate_prompt(bench.config.prompts.class_prompt, expr), "cls_broken");
  bench.detector.add("shared.png", "cls_broken", {{gt, "cls_broken", 0.9}});
  bench.items.push_back({"broken", bench.dir.file("shared.png"), "shared.png", expr, gt});

  // an item whose image file does not exist
  bench.items.push_back({"lost", bench.dir.file("nope.png"), "nope.png", "object lost", gt});

  const EvalReport report = bench.run();
  CHECK(report.n_items == 3);
  CHECK(report.acc_at_05 == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(report.per_item[0].hit);
  CHECK_FALSE(report.per_item[1].hit);
  REQUIRE(report.per_item[1].error.has_value());
  CHECK(report.per_item[1].vlm_calls == 2);  // class + the failed verification
  CHECK_FALSE(report.per_item[2].hit);
  CHECK(report.per_item[2].error.has_value());

  size_t histogram_sum = 0;
  for (const auto& [_, count] : report.path_histogram) histogram_sum += count;
  CHECK(histogram_sum == report.n_items);
}

TEST_CASE("worker pools produce the same report as serial evaluation") {
  Bench bench;
  const BoundingBox gt{10, 4, 20, 14};
  for (int i = 0; i < 8; ++i)
    bench.add_unique_true_item("item" + std::to_string(i),
                               {10.0 + i * 0.5, 4, 20.0 + i * 0.5, 14}, gt);

  const std::string serial = report_to_json(bench.run(1)).dump();
  const std::string parallel = report_to_json(bench.run(4)).dump();
  CHECK(serial == parallel);
}

TEST_CASE("run_eval rejects an empty dataset") {
  StubDetector detector{std::vector<Proposal>{}};
  ScriptedVlm vlm;
  EvalOptions options;
  CHECK_THROWS_AS(run_eval({}, detector, vlm, options), std::invalid_argument);
}

TEST_CASE("report serialization shape") {
  Bench bench;
  const BoundingBox gt{10, 4, 20, 14};
  bench.add_unique_true_item("one", gt, gt);
  const EvalReport report = bench.run();

  const auto j = report_to_json(report);
  CHECK(j.at("n_items") == 1);
  CHECK(j.at("acc_at_05") == 1.0);
  CHECK(j.at("path_histogram").at("UniqueTrue") == 1);
  CHECK(j.at("path_histogram").at("NoProposals") == 0);
  CHECK(j.at("per_item").at(0).at("error").is_null());

  const std::string text = report_to_text(report);
  CHECK(text.find("ACC@0.5:     1.000000 (1/1)") != std::string::npos);
  CHECK(text.find("UniqueTrue=1") != std::string::npos);
}

TEST_CASE("variant and box-format names") {
  CHECK(variant_from_name("verify") == PipelineVariant::VerificationFirst);
  CHECK(variant_from_name("select1") == PipelineVariant::Selection1);
  CHECK(variant_from_name("select-mv3") == PipelineVariant::SelectionMv3);
  CHECK_THROWS_AS(variant_from_name("nope"), ConfigError);
  CHECK(box_format_from_name("xywh") == BoxFormat::Xywh);
  CHECK_THROWS_AS(box_format_from_name("corners"), ConfigError);
}
