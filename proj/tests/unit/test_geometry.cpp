#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "refverify/geometry.hpp"
#include "refverify/rng.hpp"

using namespace refverify;

namespace {

BoundingBox random_box(Xoshiro256& rng, double span = 100.0) {
  const double x0 = rng.uniform01() * span;
  const double y0 = rng.uniform01() * span;
  return {x0, y0, x0 + rng.uniform01() * span, y0 + rng.uniform01() * span};
}

// Boxes on a quarter-pixel grid: all the IoU arithmetic below 2^53 stays
// exact, so translation by whole pixels must not change the result at all.
BoundingBox random_grid_box(Xoshiro256& rng) {
  const auto coord = [&] { return static_cast<double>(rng.uniform_below(4000)) * 0.25 - 500.0; };
  const double x0 = coord(), y0 = coord();
  return {x0, y0, x0 + static_cast<double>(rng.uniform_below(2000)) * 0.25,
          y0 + static_cast<double>(rng.uniform_below(2000)) * 0.25};
}

}  // namespace

TEST_CASE("bounding box construction enforces invariants") {
  CHECK_THROWS_AS(BoundingBox(5, 0, 4, 10), std::invalid_argument);
  CHECK_THROWS_AS(BoundingBox(0, 5, 10, 4), std::invalid_argument);
  CHECK_THROWS_AS(BoundingBox(0, 0, std::numeric_limits<double>::infinity(), 1),
                  std::invalid_argument);
  CHECK_THROWS_AS(BoundingBox(std::nan(""), 0, 1, 1), std::invalid_argument);
  CHECK_THROWS_AS(BoundingBox::from_xywh(0, 0, -1, 5), std::invalid_argument);
  CHECK(BoundingBox(3, 4, 3, 4).area() == 0.0);  // degenerate is legal
  CHECK(BoundingBox::from_xywh(10, 20, 30, 40) == BoundingBox(10, 20, 40, 60));
}

TEST_CASE("match threshold range") {
  CHECK_THROWS_AS(MatchThreshold(-0.1), std::invalid_argument);
  CHECK_THROWS_AS(MatchThreshold(1.1), std::invalid_argument);
  CHECK(MatchThreshold().iou_min == 0.5);
}

TEST_CASE("iou on the worked examples") {
  CHECK(iou({0, 0, 10, 10}, {0, 0, 10, 10}) == 1.0);
  CHECK(iou({0, 0, 10, 10}, {20, 20, 30, 30}) == 0.0);

  // Overlap (5,0,10,10): intersection 5*10 = 50, union 100 + 100 - 50 = 150.
  const double inter = 50.0, uni = 150.0;
  CHECK(iou({0, 0, 10, 10}, {5, 0, 15, 10}) == doctest::Approx(inter / uni).epsilon(1e-12));
  CHECK(iou({0, 0, 10, 10}, {5, 0, 15, 10}) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("iou of degenerate boxes is zero, even against themselves") {
  const BoundingBox line{3, 3, 3, 9};
  const BoundingBox point{5, 5, 5, 5};
  CHECK(iou(line, line) == 0.0);
  CHECK(iou(point, point) == 0.0);
  CHECK(iou(line, {0, 0, 10, 10}) == 0.0);
}

TEST_CASE("is_hit uses strict 'exceeds' semantics") {
  const BoundingBox gt{0, 0, 10, 10};
  CHECK(is_hit(gt, gt));
  // intersection 50, union 100: IoU exactly 0.5 is a miss.
  CHECK(iou({0, 0, 10, 5}, gt) == 0.5);
  CHECK_FALSE(is_hit({0, 0, 10, 5}, gt));
  // intersection 100, union 160: 0.625 > 0.5.
  CHECK(iou({0, 0, 10, 10}, {0, 0, 10, 16}) == doctest::Approx(0.625).epsilon(1e-12));
  CHECK(is_hit({0, 0, 10, 10}, {0, 0, 10, 16}));
}

TEST_CASE("acc_at counts abstentions as misses") {
  const BoundingBox gt{0, 0, 10, 10};
  using Item = std::pair<std::optional<BoundingBox>, BoundingBox>;

  CHECK(acc_at({Item{gt, gt}, Item{gt, gt}, Item{gt, gt}}) == 1.0);

  // IoUs 0.6, ~0.33, abstain -> one hit out of three.
  const BoundingBox pred_hit{0, 2.5, 10, 12.5};
  CHECK(iou(pred_hit, gt) == doctest::Approx(0.6).epsilon(1e-12));
  const BoundingBox pred_miss{0, 5, 10, 15};
  CHECK(iou(pred_miss, gt) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(acc_at({Item{pred_hit, gt}, Item{pred_miss, gt}, Item{std::nullopt, gt}}) ==
        doctest::Approx(1.0 / 3.0).epsilon(1e-12));

  CHECK(acc_at({Item{std::nullopt, gt}, Item{std::nullopt, gt}}) == 0.0);
  CHECK_THROWS_AS(acc_at({}), std::invalid_argument);
}

TEST_CASE("acc_at is invariant under permutation") {
  Xoshiro256 rng(11);
  std::vector<std::pair<std::optional<BoundingBox>, BoundingBox>> items;
  for (int i = 0; i < 50; ++i) {
    std::optional<BoundingBox> pred;
    if (rng.uniform01() < 0.8) pred = random_box(rng);
    items.emplace_back(pred, random_box(rng));
  }
  const double before = acc_at(items);
  std::mt19937 shuffler(7);
  for (int round = 0; round < 5; ++round) {
    std::shuffle(items.begin(), items.end(), shuffler);
    CHECK(acc_at(items) == before);
  }
}

TEST_CASE("iou properties over 10k random box pairs") {
  Xoshiro256 rng(42);
  for (int i = 0; i < 10000; ++i) {
    const BoundingBox a = random_box(rng);
    const BoundingBox b = random_box(rng);

    const double ab = iou(a, b);
    CHECK(ab == iou(b, a));  // symmetric, bit for bit
    CHECK(ab >= 0.0);
    CHECK(ab <= 1.0);
    CHECK(iou(a, a) == 1.0);  // nondegenerate by construction

    // zero iff the intersection is empty (union is positive here)
    const bool disjoint = a.x_max <= b.x_min || b.x_max <= a.x_min || a.y_max <= b.y_min ||
                          b.y_max <= a.y_min;
    CHECK((ab == 0.0) == disjoint);

    // translation invariance within floating-point tolerance
    const double dx = (rng.uniform01() - 0.5) * 1000.0;
    const double dy = (rng.uniform01() - 0.5) * 1000.0;
    CHECK(iou(a.translated(dx, dy), b.translated(dx, dy)) == doctest::Approx(ab).epsilon(1e-9));
  }
}

TEST_CASE("translation invariance is exact on a pixel grid") {
  Xoshiro256 rng(43);
  for (int i = 0; i < 10000; ++i) {
    const BoundingBox a = random_grid_box(rng);
    const BoundingBox b = random_grid_box(rng);
    const double dx = static_cast<double>(rng.uniform_below(2001)) - 1000.0;
    const double dy = static_cast<double>(rng.uniform_below(2001)) - 1000.0;
    CHECK(iou(a.translated(dx, dy), b.translated(dx, dy)) == iou(a, b));
  }
}
