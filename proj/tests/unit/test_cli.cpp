#include <doctest.h>

#include <json.hpp>

#include "refverify/backends.hpp"
#include "refverify/image_io.hpp"
#include "refverify/pipeline.hpp"
#include "test_util.hpp"

using namespace refverify;
using testutil::run_command;

namespace {

const std::string kCli = REFVERIFY_CLI_PATH;

// Builds a self-contained fixture directory for CLI runs: the base image,
// a detector fixture, and recorded VLM exchanges produced by replaying the
// exact scripted flows through the recording wrapper.
struct CliWorld {
  testutil::TempDir dir{"cli"};
  std::string image_path;
  std::string fixtures;
  PipelineConfig config;

  CliWorld() {
    image_path = dir.file("base.png");
    fixtures = dir.file("fixtures");
    std::filesystem::create_directories(fixtures);

    const RasterImage image(100, 40, {128, 128, 128});
    write_png(image_path, image);

    // detector fixture: keyed by the exact --image path for `run`, and by
    // the dataset-relative name for `eval`
    nlohmann::json det;
    det[image_path]["mug"] = {box_json(10, 4, 10, 10), box_json(40, 4, 10, 10)};
    det["base.png"]["ca"] = {box_json(10, 4, 10, 10)};
    det["base.png"]["cb"] = {box_json(40, 4, 10, 10)};
    testutil::write_file(fixtures + "/detector.json", det.dump(2));

    // scripted flows, recorded into replay fixtures
    ScriptedVlm scripted;
    RecordingVlm recorder(scripted, fixtures);
    FixtureDetector detector(fixtures + "/detector.json");

    // `run` flow: class "mug", verdicts [False, True]
    script_unique_true(scripted, image, "the red mug", "mug",
                       {BoundingBox(10, 4, 20, 14), BoundingBox(40, 4, 50, 14)}, 1);
    {
      PipelineConfig pc = config;
      pc.image_id = image_path;
      run_verification_first(image, "the red mug", detector, recorder, pc);
    }

    // abstain flow: class with no detector entry
    scripted.add_reply(instantiate_prompt(config.prompts.class_prompt, "the missing thing"),
                       "ghost");
    {
      PipelineConfig pc = config;
      pc.image_id = image_path;
      run_verification_first(image, "the missing thing", detector, recorder, pc);
    }

    // eval flow: two items, each a unique-True hit
    script_unique_true(scripted, image, "object a", "ca", {BoundingBox(10, 4, 20, 14)}, 0);
    script_unique_true(scripted, image, "object b", "cb", {BoundingBox(40, 4, 50, 14)}, 0);
    for (const char* expr : {"object a", "object b"}) {
      PipelineConfig pc = config;
      pc.image_id = "base.png";
      run_verification_first(image, expr, detector, recorder, pc);
    }

    testutil::write_file(dir.file("data.jsonl"),
                         R"({"id":"a","image":"base.png","expr":"object a","box":[10,4,10,10]}
{"id":"b","image":"base.png","expr":"object b","box":[40,4,10,10]}
)");
  }

  static nlohmann::json box_json(double x, double y, double w, double h) {
    return {{"x", x}, {"y", y}, {"w", w}, {"h", h}, {"score", 0.9}};
  }

  void script_unique_true(ScriptedVlm& vlm, const RasterImage& image, const std::string& expr,
                          const std::string& cls, const std::vector<BoundingBox>& boxes,
                          size_t true_index) {
    vlm.add_reply(instantiate_prompt(config.prompts.class_prompt, expr), cls);
    const std::string verify = instantiate_prompt(config.prompts.verify_prompt, expr);
    for (size_t i = 0; i < boxes.size(); ++i) {
      const RasterImage overlay = render_single_box(image, boxes[i], config.style);
      vlm.add_reply(verify, overlay.digest(), i == true_index ? "True" : "False");
    }
  }
};

}  // namespace

TEST_CASE("cli run emits the outcome json and exit code 0") {
  CliWorld world;
  const auto result = run_command(kCli + " run --image " + world.image_path +
                                  " --expr 'the red mug' --fixtures " + world.fixtures);
  REQUIRE(result.exit_code == 0);
  const auto j = nlohmann::json::parse(result.out);
  CHECK(j.at("path") == "UniqueTrue");
  CHECK(j.at("result").at("type") == "box");
  CHECK(j.at("result").at("box").at("x_min") == 40.0);
  CHECK(j.at("trace").at("vlm_calls") == 3);
}

TEST_CASE("cli run exits 3 on abstention and 1 on config errors") {
  CliWorld world;
  const auto abstain = run_command(kCli + " run --image " + world.image_path +
                                   " --expr 'the missing thing' --fixtures " + world.fixtures);
  CHECK(abstain.exit_code == 3);
  CHECK(nlohmann::json::parse(abstain.out).at("path") == "NoProposals");

  const auto missing = run_command(kCli + " run --image /nowhere/x.png --expr 'a' --fixtures " +
                                   world.fixtures);
  CHECK(missing.exit_code == 1);

  const auto no_backend = run_command(kCli + " run --image " + world.image_path + " --expr 'a'");
  CHECK(no_backend.exit_code == 1);

  const auto bad_flag = run_command(kCli + " run --image");
  CHECK(bad_flag.exit_code == 1);
}

TEST_CASE("cli run exits 2 when a fixture is missing mid-flow") {
  CliWorld world;
  // recorded class reply exists for 'the red mug' but not for this expr
  const auto result = run_command(kCli + " run --image " + world.image_path +
                                  " --expr 'unrecorded expr' --fixtures " + world.fixtures);
  CHECK(result.exit_code == 2);
}

TEST_CASE("cli eval reports accuracy and reruns byte-identically with a warm cache") {
  CliWorld world;
  const std::string cache = world.dir.file("cache");
  const std::string base_cmd = kCli + " eval --dataset " + world.dir.file("data.jsonl") +
                               " --variant verify --fixtures " + world.fixtures + " --cache-dir " +
                               cache + " --out " + world.dir.file("report");

  const auto first = run_command(base_cmd);
  REQUIRE(first.exit_code == 0);
  const auto j = nlohmann::json::parse(first.out);
  CHECK(j.at("n_items") == 2);
  CHECK(j.at("acc_at_05") == 1.0);
  CHECK(j.at("path_histogram").at("UniqueTrue") == 2);

  const std::string report_one = testutil::read_file(world.dir.file("report.json"));
  const auto second = run_command(base_cmd);
  REQUIRE(second.exit_code == 0);
  CHECK(testutil::read_file(world.dir.file("report.json")) == report_one);
  CHECK(second.out == first.out);

  const auto bad_variant = run_command(kCli + " eval --dataset " + world.dir.file("data.jsonl") +
                                       " --variant nope --fixtures " + world.fixtures);
  CHECK(bad_variant.exit_code == 1);
}

TEST_CASE("cli simulate is deterministic per seed") {
  const std::string cmd = kCli + " simulate --p 0.5 --q1 0.7 --q2 0.3 --trials 50000 --seed 11";
  const auto first = run_command(cmd);
  REQUIRE(first.exit_code == 0);
  const auto second = run_command(cmd);
  CHECK(first.out == second.out);

  const auto j = nlohmann::json::parse(first.out);
  CHECK(j.at("closed_form") == 0.7);
  CHECK(std::abs(j.at("empirical").get<double>() - 0.7) <
        3 * j.at("std_error").get<double>() + 1e-9);

  CHECK(run_command(kCli + " simulate --p 1.5").exit_code == 1);
}

TEST_CASE("cli analyze writes csv and svg") {
  testutil::TempDir dir("analyze");
  const auto threshold =
      run_command(kCli + " analyze --kind threshold_vs_q1 --q2 0.3 --grid-step 0.001 --out " +
                  dir.file("thr"));
  REQUIRE(threshold.exit_code == 0);
  const std::string csv = testutil::read_file(dir.file("thr.csv"));
  CHECK(csv.find("q2=0.300000,0.700000,0.844828\n") != std::string::npos);
  CHECK(testutil::read_file(dir.file("thr.svg")).find("<svg") == 0);

  const auto gain =
      run_command(kCli + " analyze --kind gain_vs_q --grid-step 0.001 --out " + dir.file("gain"));
  REQUIRE(gain.exit_code == 0);
  const auto j = nlohmann::json::parse(gain.out);
  CHECK(j.at("gain_argmax").get<double>() == doctest::Approx(0.743).epsilon(0.01));
  CHECK(j.at("gain_max").get<double>() == doctest::Approx(0.1501).epsilon(0.01));

  CHECK(run_command(kCli + " analyze --kind nope --out " + dir.file("x")).exit_code == 1);
  CHECK(run_command(kCli + " analyze --kind gain_vs_q --grid-step 0.5 --out " + dir.file("y"))
            .exit_code == 1);
}

TEST_CASE("cli overlay renders boxes onto an image file") {
  testutil::TempDir dir("overlay");
  write_png(dir.file("in.png"), RasterImage(60, 40, {128, 128, 128}));
  const auto result =
      run_command(kCli + " overlay --image " + dir.file("in.png") + " --out " +
                  dir.file("out.png") + " --box 5,5,25,25 --box 30,5,20,20 --xywh");
  REQUIRE(result.exit_code == 0);
  const RasterImage out = read_png(dir.file("out.png"));
  CHECK(out.at(5, 5) == Rgb{255, 0, 0});
  CHECK(out.at(30, 5) == Rgb{255, 0, 0});

  CHECK(run_command(kCli + " overlay --image " + dir.file("in.png") + " --out " +
                    dir.file("o.png") + " --box bad")
            .exit_code == 1);
  CHECK(run_command(kCli + " overlay --image " + dir.file("in.png") + " --out " +
                    dir.file("o.png"))
            .exit_code == 1);
}
